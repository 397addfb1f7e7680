#include <gtest/gtest.h>

#include <chrono>

#include "brute_force.hpp"
#include "fsta/backbone.hpp"
#include "fsta/gen_io.hpp"
#include "fsta/reduction.hpp"
#include "test_util.hpp"

using namespace fsta;

namespace {

Solution singletons(const Instance &inst) {
    Solution s;
    for (int c = 1; c < inst.size(); ++c) s.routes.push_back({c});
    return s;
}

} // namespace

TEST(LocalSearch, LocalOptimumIsUnchanged) {
    const Instance inst = test::small_instance(Variant::CVRP, 30, 4, 30);
    const ProblemView view = ProblemView::of(inst);
    const Solution opt = local_search(view, singletons(inst), MoveBudget::moves(100000, 1)).first;
    const auto [again, stats] = local_search(view, opt, MoveBudget::moves(100000, 2));
    EXPECT_EQ(again, opt);
    EXPECT_EQ(stats.moves_applied, 0);
}

TEST(LocalSearch, FiveCustomerCrossingReachesOptimum) {
    // One route whose two long edges cross; capacity forces a single route.
    const Instance inst =
        test::make_cvrp({{0, 0, 0}, {0, 10, 1}, {10, 0, 1}, {10, 10, 1}, {5, 12, 1}, {12, 5, 1}}, 10);
    const Solution start{{{1, 2, 4, 3, 5}}};
    const ProblemView view = ProblemView::of(inst);
    const auto [out, stats] = local_search(view, start, MoveBudget::moves(1000, 0));
    EXPECT_NEAR(evaluate_objective(inst, out), test::brute_force_optimum(inst), 1e-9);
    EXPECT_GT(stats.moves_applied, 0);
}

TEST(LocalSearch, NeverWorsensAndStaysFeasible) {
    Rng rng(9);
    for (Variant v : {Variant::CVRP, Variant::VRPTW, Variant::VRPB, Variant::OnePDP}) {
        for (int trial = 0; trial < 10; ++trial) {
            const Instance inst = test::small_instance(v, 25, trial, 25);
            const Solution start = test::random_solution(inst, rng);
            const ProblemView view = ProblemView::of(inst);
            const Solution out = local_search(view, start, MoveBudget::moves(500, trial)).first;
            EXPECT_TRUE(check_feasibility(inst, out).feasible) << to_string(v);
            EXPECT_LE(evaluate_objective(inst, out), evaluate_objective(inst, start) + 1e-9);
        }
    }
}

TEST(LocalSearch, ZeroBudgetReturnsStart) {
    const Instance inst = test::small_instance(Variant::CVRP, 20, 1);
    const Solution start = singletons(inst);
    const ProblemView view = ProblemView::of(inst);
    EXPECT_EQ(local_search(view, start, MoveBudget::moves(0)).first, start);
    EXPECT_EQ(solve_warm(view, start, MoveBudget::moves(0), BackboneMode::Lns).first, start);
}

TEST(LocalSearch, RespectsMoveLimit) {
    const Instance inst = test::small_instance(Variant::CVRP, 40, 1, 40);
    const auto stats = local_search(ProblemView::of(inst), singletons(inst), MoveBudget::moves(7)).second;
    EXPECT_EQ(stats.moves_applied, 7);
}

TEST(LocalSearch, RespectsTimeLimit) {
    GenSpec spec;
    spec.n_customers = 500;
    spec.seed = 2;
    const Instance inst = generate(spec);
    const ProblemView view = ProblemView::of(inst);
    const auto t0 = std::chrono::steady_clock::now();
    solve_warm(view, singletons(inst), MoveBudget::millis(50), BackboneMode::Lns);
    const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    EXPECT_LT(ms, 1000);
}

TEST(ForcedArcs, EveryEmittedSolutionKeepsArc) {
    Rng rng(3);
    const Instance inst = test::small_instance(Variant::CVRP, 12, 6, 20);
    std::vector<ViewNode> nodes;
    for (const auto &n : inst.nodes) {
        ViewNode v;
        v.in = v.out = n.point();
        v.demand = n.demand;
        nodes.push_back(v);
    }
    const ProblemView view(Variant::CVRP, inst.distance_mode, inst.capacity, nodes, {ForcedArc{4, 9, 0.0, false}});
    Solution start = singletons(inst);
    start.routes.erase(start.routes.begin() + 8);  // customer 9
    for (auto &r : start.routes)
        if (r.front() == 4) r.push_back(9);
    ASSERT_TRUE(view.solution_feasible(start));
    for (int seed = 0; seed < 20; ++seed) {
        for (BackboneMode mode : {BackboneMode::PlainLs, BackboneMode::Lns}) {
            const Solution out = solve_warm(view, start, MoveBudget::moves(300, seed), mode).first;
            bool found = false;
            for (const auto &r : out.routes)
                for (std::size_t k = 0; k + 1 < r.size(); ++k) found = found || (r[k] == 4 && r[k + 1] == 9);
            EXPECT_TRUE(found) << seed;
            EXPECT_TRUE(view.solution_feasible(out));
        }
    }
}

TEST(ForcedArcs, ReducedSolveRecoversFeasible) {
    Rng rng(14);
    for (Variant v : {Variant::CVRP, Variant::VRPTW, Variant::VRPB, Variant::OnePDP}) {
        for (int trial = 0; trial < 8; ++trial) {
            const Instance inst = test::small_instance(v, 40, trial, 30);
            const Solution start = test::random_solution(inst, rng);
            const Reduction red = build_reduced(inst, start, test::random_unstable(start, 0.4, rng));
            const Solution r = solve_warm(red.problem.view, red.solution, MoveBudget::moves(200, trial),
                                          BackboneMode::Lns)
                                   .first;
            const Solution out = recover(r, red.map);
            EXPECT_TRUE(check_feasibility(inst, out).feasible) << to_string(v);
            EXPECT_LE(evaluate_objective(inst, out), evaluate_objective(inst, start) + 1e-9);
        }
    }
}

TEST(Lns, DefaultNeighborhoodIsThreeRoutes) { EXPECT_EQ(kDefaultNeighborhoodRoutes, 3); }

TEST(Lns, SingleRouteStepStaysSingleOrImproves) {
    const Instance inst = test::small_instance(Variant::CVRP, 8, 2, 100);
    Solution start{{{1, 2, 3, 4, 5, 6, 7, 8}}};
    const ProblemView view = ProblemView::of(inst);
    for (int seed = 0; seed < 20; ++seed) {
        const auto [out, stats] = lns_step(view, start, 3, MoveBudget::moves(50, seed));
        EXPECT_TRUE(check_feasibility(inst, out).feasible);
        EXPECT_LE(evaluate_objective(inst, out), evaluate_objective(inst, start) + 1e-12);
    }
}

TEST(Lns, StepNeverWorsens) {
    const Instance inst = test::small_instance(Variant::CVRP, 80, 3, 40);
    const ProblemView view = ProblemView::of(inst);
    Solution cur = initial_solution_sweep(inst, SweepParams{}, MoveBudget::moves(0));
    for (int seed = 0; seed < 100; ++seed) {
        const double before = evaluate_objective(inst, cur);
        cur = lns_step(view, cur, 3, MoveBudget::moves(30, seed)).first;
        EXPECT_LE(evaluate_objective(inst, cur), before + 1e-12);
    }
}

TEST(Lns, ImprovesSweepStartOnMostSeeds) {
    int improved = 0;
    for (int seed = 0; seed < 100; ++seed) {
        GenSpec spec;
        spec.n_customers = 100;
        spec.capacity = 50;
        spec.seed = 1000 + seed;
        const Instance inst = generate(spec);
        const Solution start = initial_solution_sweep(inst, SweepParams{}, MoveBudget::moves(0));
        const Solution out =
            solve_warm(ProblemView::of(inst), start, MoveBudget::moves(100, seed), BackboneMode::Lns).first;
        improved += evaluate_objective(inst, out) < evaluate_objective(inst, start) - 1e-9;
    }
    EXPECT_GE(improved, 95);
}

TEST(Lns, DeterministicForSeed) {
    const Instance inst = test::small_instance(Variant::CVRP, 60, 5, 30);
    const ProblemView view = ProblemView::of(inst);
    const Solution start = singletons(inst);
    EXPECT_EQ(solve_warm(view, start, MoveBudget::moves(200, 4), BackboneMode::Lns).first,
              solve_warm(view, start, MoveBudget::moves(200, 4), BackboneMode::Lns).first);
}

TEST(Budget, Validation) {
    EXPECT_THROW((MoveBudget{std::nullopt, std::nullopt, 0}.validate()), Error);
    EXPECT_THROW(MoveBudget::moves(-1).validate(), Error);
    EXPECT_EQ(backbone_mode_from_string("ls"), BackboneMode::PlainLs);
    EXPECT_EQ(backbone_mode_from_string("lns"), BackboneMode::Lns);
    EXPECT_THROW(backbone_mode_from_string("x"), Error);
}
