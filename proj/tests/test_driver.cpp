#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "fsta/driver.hpp"
#include "test_util.hpp"

using namespace fsta;

namespace {

LoopConfig iters(int n, SegmenterPolicy policy, std::uint64_t seed = 1) {
    LoopConfig cfg;
    cfg.segmenter = std::move(policy);
    cfg.iterations = n;
    cfg.moves_per_iter = 50;
    cfg.seed = seed;
    return cfg;
}

Solution sweep(const Instance &inst) { return initial_solution_sweep(inst, SweepParams{}, MoveBudget::moves(0)); }

} // namespace

TEST(Loop, ZeroIterationsReturnsInit) {
    const Instance inst = test::small_instance(Variant::CVRP, 40, 1);
    const Solution init = sweep(inst);
    const auto [out, stats] = run_fsta_loop(inst, init, iters(0, RandomPolicy{0.4, 1}));
    EXPECT_EQ(out, init);
    EXPECT_TRUE(stats.iterations.empty());
    EXPECT_EQ(stats.final_objective, stats.initial_objective);
}

TEST(Loop, FullRandomMatchesPlainEveryIteration) {
    for (Variant v : {Variant::CVRP, Variant::VRPTW, Variant::VRPB, Variant::OnePDP}) {
        const Instance inst = test::small_instance(v, 60, 2, 30);
        const Solution init = sweep(inst);
        const auto plain = run_plain_loop(inst, init, iters(8, RandomPolicy{1.0, 0}));
        const auto fsta = run_fsta_loop(inst, init, iters(8, RandomPolicy{1.0, 0}));
        EXPECT_EQ(plain.first, fsta.first) << to_string(v);
        ASSERT_EQ(plain.second.iterations.size(), fsta.second.iterations.size());
        for (std::size_t k = 0; k < plain.second.iterations.size(); ++k)
            EXPECT_EQ(plain.second.iterations[k].objective, fsta.second.iterations[k].objective);
    }
}

TEST(Loop, AnytimeObjectiveNonIncreasing) {
    for (const char *policy : {"random:0.4", "geometric", "oracle:30"}) {
        const Instance inst = test::small_instance(Variant::CVRP, 80, 3, 30);
        const auto [out, stats] = run_fsta_loop(inst, sweep(inst), iters(15, parse_policy(policy)));
        double prev = stats.initial_objective;
        for (const auto &it : stats.iterations) {
            EXPECT_LE(it.objective, prev + 1e-9) << policy;
            prev = it.objective;
        }
        EXPECT_TRUE(check_feasibility(inst, out).feasible);
        EXPECT_FALSE(stats.aborted.has_value());
    }
}

TEST(Loop, TimeBudgetStops) {
    GenSpec spec;
    spec.n_customers = 200;
    spec.seed = 4;
    const Instance inst = generate(spec);
    LoopConfig cfg;
    cfg.segmenter = RandomPolicy{0.5, 1};
    cfg.time_limit_ms = 200;
    const auto t0 = std::chrono::steady_clock::now();
    run_fsta_loop(inst, sweep(inst), cfg);
    const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    EXPECT_LT(ms, 2000);
}

TEST(Loop, ExternalFailureAbortsWithBestSoFar) {
    const Instance inst = test::small_instance(Variant::CVRP, 30, 5);
    const Solution init = sweep(inst);
    const auto [out, stats] = run_fsta_loop(inst, init, iters(3, ExternalPolicy{ExternalPolicy::Mode::File, "/nonexistent/{iter}"}));
    EXPECT_EQ(out, init);
    ASSERT_TRUE(stats.aborted.has_value());
}

TEST(Loop, InvalidConfigRejected) {
    const Instance inst = test::small_instance(Variant::CVRP, 10, 5);
    LoopConfig cfg;
    EXPECT_THROW(run_fsta_loop(inst, sweep(inst), cfg), Error);
    cfg.iterations = 1;
    cfg.millis_per_iter = -1;
    EXPECT_THROW(run_fsta_loop(inst, sweep(inst), cfg), Error);
    EXPECT_THROW(run_fsta_loop(inst, Solution{}, iters(1, RandomPolicy{})), Error);
}

TEST(Stats, LineFormat) {
    IterationStats s;
    s.iter = 2;
    s.elapsed_ms = 1.5;
    s.objective = 10;
    s.size_ratio = 0.5;
    s.recall = 1.0;
    const auto j = nlohmann::json::parse(stats_line(s));
    EXPECT_EQ(j["iter"], 2);
    EXPECT_EQ(j["recall"], 1.0);
    EXPECT_TRUE(j["tnr"].is_null());
    EXPECT_TRUE(j["changed_frac"].is_null());
}

TEST(Decompose, TwoRoutesGiveOnePair) {
    const Instance inst = test::make_cvrp({{0, 0, 0}, {1, 0, 1}, {2, 0, 1}, {-1, 0, 1}}, 10);
    const Solution sol{{{1, 2}, {3}}};
    const auto subs = decompose_subproblems(inst, sol);
    ASSERT_EQ(subs.size(), 1u);
    EXPECT_EQ(subs[0].route_pair, std::make_pair(0, 1));
    EXPECT_EQ(subs[0].sub.instance.customers(), 3);
    EXPECT_EQ(subs[0].solution, (Solution{{{1, 2}, {3}}}));
}

TEST(Decompose, PairsMatchNearestCentroid) {
    Rng rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        const Instance inst = test::small_instance(Variant::CVRP, 60, trial, 15);
        const Solution sol = test::random_solution(inst, rng);
        const int m = static_cast<int>(sol.routes.size());
        const auto pairs = adjacent_route_pairs(inst, sol);
        EXPECT_GE(static_cast<int>(pairs.size()), (m + 1) / 2);
        EXPECT_LE(static_cast<int>(pairs.size()), m);
        for (int r = 0; r < m; ++r) {
            double cx = 0, cy = 0;
            for (int c : sol.routes[r]) cx += inst.nodes[c].x, cy += inst.nodes[c].y;
            cx /= sol.routes[r].size();
            cy /= sol.routes[r].size();
            int best = -1;
            double bd = 1e300;
            for (int s = 0; s < m; ++s) {
                if (s == r) continue;
                double sx = 0, sy = 0;
                for (int c : sol.routes[s]) sx += inst.nodes[c].x, sy += inst.nodes[c].y;
                sx /= sol.routes[s].size();
                sy /= sol.routes[s].size();
                const double d = std::hypot(cx - sx, cy - sy);
                if (d < bd) bd = d, best = s;
            }
            const std::pair<int, int> p{std::min(r, best), std::max(r, best)};
            EXPECT_NE(std::find(pairs.begin(), pairs.end(), p), pairs.end());
        }
    }
}

TEST(Traces, TwoOptGivesOneAlternatingSequence) {
    const Solution before{{{1, 2, 3, 4}}};
    const Solution after{{{1, 3, 2, 4}}};
    const auto comps = diff_components(before, after);
    ASSERT_EQ(comps.size(), 1u);
    const auto seq = alternating_walk(comps[0]);
    ASSERT_TRUE(seq.has_value());
    EXPECT_EQ(seq->nodes, (std::vector<int>{1, 2, 4, 3, 1}));
    EXPECT_EQ(seq->stages, "didi");
    EXPECT_TRUE(replay_ar(*seq, before, after));
}

TEST(Traces, ReplayRejectsBadSequences) {
    const Solution before{{{1, 2, 3, 4}}};
    const Solution after{{{1, 3, 2, 4}}};
    EXPECT_FALSE(replay_ar({{1, 3, 4}, "di"}, before, after));   // deletes an edge not in before
    EXPECT_FALSE(replay_ar({{2, 1, 3}, "id"}, before, after));   // starts with an insertion
    EXPECT_FALSE(replay_ar({{1, 2, 1}, "di"}, before, after));   // inserts a deleted edge
}

TEST(Traces, NarLabels) {
    const Solution before{{{1, 2, 3, 4}, {5, 6}}};
    const Solution after{{{1, 3, 2, 4}, {5, 6}}};
    EXPECT_EQ(nar_labels(before, after, {0, 1}),
              (std::vector<std::pair<int, int>>{{1, 1}, {2, 1}, {3, 1}, {4, 1}, {5, 0}, {6, 0}}));
}

TEST(Traces, NoImprovementGivesNoRecords) {
    const Instance inst = test::small_instance(Variant::CVRP, 10, 8);
    const Solution s = sweep(inst);
    Rng rng(1);
    TraceSummary summary;
    EXPECT_TRUE(trace_iteration(inst, 0, s, s, TraceConfig{}, rng, summary).empty());
}

TEST(Traces, ZeroAcceptanceDropsSequences) {
    std::vector<Instance> instances{test::small_instance(Variant::CVRP, 40, 9, 30)};
    TraceConfig cfg;
    cfg.iterations = 5;
    cfg.alpha_ac = 0.0;
    std::ostringstream os;
    const TraceSummary s = export_traces(instances, cfg, os);
    EXPECT_EQ(s.ar_sequences, 0);
    EXPECT_GT(s.records, 0);
    for (const auto &r : read_trace_stream(os.str())) EXPECT_TRUE(r.ar_sequences.empty());
}

TEST(Traces, EverySequenceReplays) {
    std::vector<Instance> instances{test::small_instance(Variant::CVRP, 60, 10, 30),
                                    test::small_instance(Variant::CVRP, 60, 11, 30)};
    TraceConfig cfg;
    cfg.iterations = 8;
    cfg.alpha_ac = 1.0;
    std::ostringstream os;
    const TraceSummary s = export_traces(instances, cfg, os);
    const auto records = read_trace_stream(os.str());
    ASSERT_EQ(static_cast<long long>(records.size()), s.records);
    const TraceRecord *step = nullptr;
    long long seen = 0;
    for (const auto &r : records) {
        if (r.kind == "step") {
            step = &r;
            continue;
        }
        ASSERT_NE(step, nullptr);
        for (const auto &seq : r.ar_sequences) {
            EXPECT_TRUE(replay_ar(seq, step->before, step->after));
            ++seen;
        }
    }
    EXPECT_EQ(seen, s.ar_sequences);
    EXPECT_GT(seen, 0);
}

TEST(Redundancy, FractionsInUnitInterval) {
    const Instance inst = test::small_instance(Variant::CVRP, 80, 12, 30);
    const auto fr = measure_redundancy(inst, sweep(inst), BackboneConfig{}, 10);
    ASSERT_EQ(fr.size(), 10u);
    for (double f : fr) {
        EXPECT_GE(f, 0.0);
        EXPECT_LE(f, 1.0);
    }
    EXPECT_THROW(measure_redundancy(inst, sweep(inst), BackboneConfig{}, 0), Error);
}

TEST(Eval, OracleScoresPerfectly) {
    std::vector<std::pair<Instance, Solution>> cases;
    const Instance inst = test::small_instance(Variant::CVRP, 60, 13, 30);
    cases.emplace_back(inst, sweep(inst));
    const EvalSummary s = eval_segmenter(cases, OraclePolicy{MoveBudget::moves(50), BackboneMode::Lns},
                                         iters(5, RandomPolicy{}));
    EXPECT_GT(s.iterations, 0);
    int scored = 0;
    for (const auto &run : s.runs)
        for (const auto &it : run.iterations) {
            // Fallback iterations are scored against a fresh lookahead instead.
            if (it.fallback) continue;
            ++scored;
            EXPECT_DOUBLE_EQ(*it.recall, 1.0);
            EXPECT_DOUBLE_EQ(*it.tnr, 1.0);
        }
    EXPECT_GT(scored, 0);
}

TEST(Eval, RandomRecallTracksFraction) {
    std::vector<std::pair<Instance, Solution>> cases;
    for (int k = 0; k < 4; ++k) {
        const Instance inst = test::small_instance(Variant::CVRP, 150, 20 + k, 30);
        cases.emplace_back(inst, sweep(inst));
    }
    const EvalSummary s = eval_segmenter(cases, RandomPolicy{0.4, 3}, iters(10, RandomPolicy{}));
    EXPECT_GT(s.iterations, 20);
    EXPECT_NEAR(s.mean_recall, 0.4, 0.1);
    EXPECT_NEAR(s.mean_tnr, 0.6, 0.1);
}
