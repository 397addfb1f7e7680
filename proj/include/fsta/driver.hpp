#pragma once

// Iterative FSTA loop, plain-backbone loop, trace export, redundancy
// profiling and segmenter evaluation.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "fsta/backbone.hpp"
#include "fsta/gen_io.hpp"
#include "fsta/model.hpp"
#include "fsta/problem_view.hpp"
#include "fsta/random.hpp"
#include "fsta/reduction.hpp"
#include "fsta/segmenter.hpp"

namespace fsta {

struct LoopConfig {
    SegmenterPolicy segmenter = RandomPolicy{1.0, 0};
    BackboneMode mode = BackboneMode::Lns;
    long long moves_per_iter = 100;
    std::optional<long long> millis_per_iter;  // per-iteration wall cap for the re-optimization
    std::optional<int> iterations;
    std::optional<long long> time_limit_ms;
    bool oracle_free_time = false;
    bool record_stats = true;
    /// Run a lookahead oracle every iteration to report recall/TNR of
    /// non-oracle policies; its time is never charged to the budget.
    bool compute_metrics = false;
    std::optional<long long> metric_oracle_moves;  // defaults to moves_per_iter
    AggregationOptions aggregation;
    int neighborhood_routes = kDefaultNeighborhoodRoutes;
    std::uint64_t seed = 0;

    void validate() const {
        if (!iterations && !time_limit_ms) throw Error("LoopConfig needs an iteration or time budget");
        if (iterations && *iterations < 0) throw Error("LoopConfig.iterations must be >= 0");
        if (time_limit_ms && *time_limit_ms < 0) throw Error("LoopConfig.time_limit_ms must be >= 0");
        if (moves_per_iter < 0) throw Error("LoopConfig.moves_per_iter must be >= 0");
        if (millis_per_iter && *millis_per_iter < 0) throw Error("LoopConfig.millis_per_iter must be >= 0");
        if (neighborhood_routes < 1) throw Error("LoopConfig.neighborhood_routes must be >= 1");
    }
};

struct IterationStats {
    int iter = 0;
    double elapsed_ms = 0.0;
    double objective = 0.0;
    double size_ratio = 1.0;
    std::optional<double> recall;
    std::optional<double> tnr;
    std::optional<double> changed_frac;
    bool fallback = false;
};

struct RunStats {
    double initial_objective = 0.0;
    double final_objective = 0.0;
    std::vector<IterationStats> iterations;
    int fallbacks = 0;
    std::optional<std::string> aborted;  // error that ended the run early
};

inline std::string stats_line(const IterationStats &s) {
    nlohmann::json j;
    j["iter"] = s.iter;
    j["elapsed_ms"] = s.elapsed_ms;
    j["objective"] = s.objective;
    j["size_ratio"] = s.size_ratio;
    j["recall"] = s.recall ? nlohmann::json(*s.recall) : nlohmann::json(nullptr);
    j["tnr"] = s.tnr ? nlohmann::json(*s.tnr) : nlohmann::json(nullptr);
    j["changed_frac"] = s.changed_frac ? nlohmann::json(*s.changed_frac) : nlohmann::json(nullptr);
    return j.dump() + '\n';
}

inline void write_stats(std::ostream &os, const RunStats &stats) {
    for (const auto &s : stats.iterations) os << stats_line(s);
}

inline double changed_fraction(const Solution &before, const Solution &after) {
    const EdgeSet edges = edge_set(before);
    if (edges.empty()) return 0.0;
    return static_cast<double>(edge_diff(before, after).size()) / static_cast<double>(edges.size());
}

namespace detail {

/// Wall clock with excluded intervals.
class BudgetClock {
public:
    double elapsed_ms() const {
        const auto now = std::chrono::steady_clock::now();
        return std::chrono::duration<double, std::milli>(now - start_).count() - excluded_ms_;
    }
    void exclude(double ms) { excluded_ms_ += ms; }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
    double excluded_ms_ = 0.0;
};

inline double ms_since(std::chrono::steady_clock::time_point t) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t).count();
}

inline bool budget_left(const LoopConfig &cfg, int iter, const BudgetClock &clock) {
    if (cfg.iterations && iter >= *cfg.iterations) return false;
    if (cfg.time_limit_ms && clock.elapsed_ms() >= static_cast<double>(*cfg.time_limit_ms)) return false;
    return true;
}

inline MoveBudget iteration_budget(const LoopConfig &cfg, std::uint64_t seed, const BudgetClock &clock) {
    MoveBudget b;
    b.max_moves = cfg.moves_per_iter;
    if (cfg.time_limit_ms)
        b.max_millis = std::max<long long>(
            0, static_cast<long long>(std::ceil(static_cast<double>(*cfg.time_limit_ms) - clock.elapsed_ms())));
    if (cfg.millis_per_iter) b.max_millis = std::min(b.max_millis.value_or(*cfg.millis_per_iter), *cfg.millis_per_iter);
    b.seed = seed;
    return b;
}

} // namespace detail

/// Per-iteration seed shared by the oracle lookahead and the re-optimization.
inline std::uint64_t iteration_seed(const LoopConfig &cfg, int iter) {
    return derive_seed(cfg.seed, static_cast<std::uint64_t>(iter));
}

/// Plain backbone: re-optimize the full problem every iteration.
inline std::pair<Solution, RunStats> run_plain_loop(const Instance &inst, const Solution &init,
                                                    const LoopConfig &cfg) {
    cfg.validate();
    RunStats stats;
    const ProblemView view = ProblemView::of(inst);
    if (!view.solution_feasible(init)) throw Error("initial solution infeasible");
    Solution current = init;
    stats.initial_objective = stats.final_objective = evaluate_objective(inst, current);
    detail::BudgetClock clock;
    for (int iter = 0; detail::budget_left(cfg, iter, clock); ++iter) {
        const auto budget = detail::iteration_budget(cfg, iteration_seed(cfg, iter), clock);
        Solution next = solve_warm(view, current, budget, cfg.mode, cfg.neighborhood_routes).first;
        IterationStats it;
        it.iter = iter;
        it.changed_frac = changed_fraction(current, next);
        current = std::move(next);
        it.objective = evaluate_objective(inst, current);
        it.elapsed_ms = clock.elapsed_ms();
        stats.final_objective = it.objective;
        if (cfg.record_stats) stats.iterations.push_back(it);
    }
    return {current, stats};
}

/// detect -> partition -> aggregate -> re-optimize -> recover -> adopt.
inline std::pair<Solution, RunStats> run_fsta_loop(const Instance &inst, const Solution &init,
                                                   const LoopConfig &cfg) {
    cfg.validate();
    RunStats stats;
    const ProblemView full = ProblemView::of(inst);
    if (!full.solution_feasible(init)) throw Error("initial solution infeasible");
    Segmenter segmenter(cfg.segmenter);
    Solution current = init;
    stats.initial_objective = stats.final_objective = evaluate_objective(inst, current);
    detail::BudgetClock clock;
    const int customers = inst.customers();

    for (int iter = 0; detail::budget_left(cfg, iter, clock); ++iter) {
        const std::uint64_t seed = iteration_seed(cfg, iter);
        IterationStats it;
        it.iter = iter;
        try {
            const auto t_detect = std::chrono::steady_clock::now();
            EdgeSet unstable = segmenter.detect({inst, current, &full, iter, seed});
            if (segmenter.is_oracle() && cfg.oracle_free_time) clock.exclude(detail::ms_since(t_detect));
            if (unstable.non_depot_edges().empty() && customers > 0) {
                Rng rng(derive_seed(seed, 0x5eed));
                const EdgeSet edges = edge_set(current);
                unstable = detect_random(current, 0.2, rng).united(edges.depot_edges());
                it.fallback = true;
                ++stats.fallbacks;
            }

            if (cfg.compute_metrics && customers > 0) {
                const auto t_metric = std::chrono::steady_clock::now();
                const EdgeSet universe = edge_set(current).non_depot_edges();
                EdgeSet oracle;
                if (segmenter.is_oracle() && !it.fallback) {
                    oracle = unstable;
                } else {
                    MoveBudget mb = MoveBudget::moves(cfg.metric_oracle_moves.value_or(cfg.moves_per_iter), seed);
                    oracle = oracle_lookahead(full, current, mb, cfg.mode).unstable;
                }
                const auto sc = score(unstable.intersected(universe), oracle.intersected(universe), universe);
                it.recall = sc.recall;
                it.tnr = sc.tnr;
                clock.exclude(detail::ms_since(t_metric));
            }

            const Reduction red = build_reduced(inst, current, unstable, cfg.aggregation);
            it.size_ratio = red.size_ratio(customers);
            const auto budget = detail::iteration_budget(cfg, seed, clock);
            const Solution reduced_next =
                solve_warm(red.problem.view, red.solution, budget, cfg.mode, cfg.neighborhood_routes).first;
            Solution next = recover(reduced_next, red.map);
            if (check_feasibility(inst, next).feasible) {
                it.changed_frac = changed_fraction(current, next);
                current = std::move(next);
            } else {
                it.changed_frac = 0.0;
            }
        } catch (const Error &e) {
            stats.aborted = e.what();
            break;
        }
        it.objective = evaluate_objective(inst, current);
        it.elapsed_ms = clock.elapsed_ms();
        stats.final_objective = it.objective;
        if (cfg.record_stats) stats.iterations.push_back(it);
    }
    return {current, stats};
}

// ---------------------------------------------------------------------------
// Subproblems of adjacent route pairs

struct Subproblem {
    std::pair<int, int> route_pair;  // first <= second; equal for a single route
    SubInstance sub;
    Solution solution;  // over sub-instance indices
};

inline std::vector<Point> route_centroids(const Instance &inst, const Solution &sol) {
    std::vector<Point> out;
    for (const auto &r : sol.routes) {
        Point c;
        for (int v : r) {
            c.x += inst.nodes[v].x;
            c.y += inst.nodes[v].y;
        }
        if (!r.empty()) {
            c.x /= static_cast<double>(r.size());
            c.y /= static_cast<double>(r.size());
        }
        out.push_back(c);
    }
    return out;
}

/// Each route paired with its nearest route by centroid; duplicates removed.
inline std::vector<std::pair<int, int>> adjacent_route_pairs(const Instance &inst, const Solution &sol) {
    const int m = static_cast<int>(sol.routes.size());
    if (m == 0) return {};
    if (m == 1) return {{0, 0}};
    const auto cent = route_centroids(inst, sol);
    std::vector<std::pair<int, int>> pairs;
    for (int r = 0; r < m; ++r) {
        int best = -1;
        double best_d = kInf;
        for (int s = 0; s < m; ++s) {
            if (s == r) continue;
            const double d = std::hypot(cent[r].x - cent[s].x, cent[r].y - cent[s].y);
            if (d < best_d) {
                best_d = d;
                best = s;
            }
        }
        const std::pair<int, int> p{std::min(r, best), std::max(r, best)};
        if (std::find(pairs.begin(), pairs.end(), p) == pairs.end()) pairs.push_back(p);
    }
    return pairs;
}

inline std::vector<Subproblem> decompose_subproblems(const Instance &inst, const Solution &sol) {
    std::vector<Subproblem> out;
    for (const auto &p : adjacent_route_pairs(inst, sol)) {
        std::vector<int> customers = sol.routes[p.first];
        if (p.second != p.first)
            customers.insert(customers.end(), sol.routes[p.second].begin(), sol.routes[p.second].end());
        Subproblem sp;
        sp.route_pair = p;
        sp.sub = sub_instance(inst, customers);
        int next = 1;
        for (int r : {p.first, p.second}) {
            if (r == p.second && p.second == p.first) break;
            Route local;
            for (std::size_t k = 0; k < sol.routes[r].size(); ++k) local.push_back(next++);
            sp.solution.routes.push_back(std::move(local));
        }
        out.push_back(std::move(sp));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Trace export

struct TraceConfig {
    int iterations = 40;        // per instance
    double eta_improv = 0.0;    // minimum component improvement
    double alpha_ac = 0.4;      // acceptance probability of AR records
    BackboneMode mode = BackboneMode::Lns;
    long long moves_per_iter = 100;
    long long sweep_moves = 200;
    SweepParams sweep;
    std::uint64_t seed = 0;
    long long dfs_step_limit = 200000;

    void validate() const {
        if (iterations < 0) throw Error("TraceConfig.iterations must be >= 0");
        if (eta_improv < 0.0) throw Error("TraceConfig.eta_improv must be >= 0");
        if (alpha_ac < 0.0 || alpha_ac > 1.0) throw Error("TraceConfig.alpha_ac must lie in [0,1]");
        if (moves_per_iter < 0) throw Error("TraceConfig.moves_per_iter must be >= 0");
    }
};

struct TraceSummary {
    long long records = 0;
    long long ar_sequences = 0;
    long long components = 0;
    long long skipped_components = 0;   // no alternating trail
    long long unassigned_components = 0;  // span more than one adjacent route pair
    long long filtered_components = 0;  // below eta or rejected by the alpha draw
};

/// One connected component of the difference graph. Depot endpoints are
/// split per edge so the depot never joins components.
struct DiffComponent {
    std::vector<Edge> deleted;
    std::vector<Edge> inserted;
    std::vector<int> customers;  // ascending
};

inline std::vector<DiffComponent> diff_components(const Solution &before, const Solution &after) {
    const EdgeSet eb = edge_set(before), ea = edge_set(after);
    const EdgeSet del = eb.minus(ea), ins = ea.minus(eb);
    std::vector<std::pair<Edge, bool>> edges;  // (edge, inserted)
    for (const auto &e : del) edges.emplace_back(e, false);
    for (const auto &e : ins) edges.emplace_back(e, true);
    int max_node = 0;
    for (const auto &[e, _] : edges) max_node = std::max(max_node, e.b);
    std::vector<int> parent(max_node + 1);
    std::iota(parent.begin(), parent.end(), 0);
    std::function<int(int)> find = [&](int x) { return parent[x] == x ? x : parent[x] = find(parent[x]); };
    for (const auto &[e, _] : edges)
        if (e.a != 0) parent[find(e.a)] = find(e.b);
    std::vector<int> comp_of(max_node + 1, -1);
    std::vector<DiffComponent> comps;
    for (const auto &[e, inserted] : edges) {
        const int root = find(e.b);  // e.b is never the depot
        if (comp_of[root] < 0) {
            comp_of[root] = static_cast<int>(comps.size());
            comps.emplace_back();
        }
        auto &c = comps[comp_of[root]];
        (inserted ? c.inserted : c.deleted).push_back(e);
        for (int v : {e.a, e.b})
            if (v != 0) c.customers.push_back(v);
    }
    for (auto &c : comps) {
        std::sort(c.customers.begin(), c.customers.end());
        c.customers.erase(std::unique(c.customers.begin(), c.customers.end()), c.customers.end());
    }
    std::sort(comps.begin(), comps.end(),
              [](const DiffComponent &a, const DiffComponent &b) { return a.customers < b.customers; });
    return comps;
}

/// Walk covering every edge of the component exactly once, alternating
/// deleted/inserted edges and starting with a deleted edge. Start nodes are
/// tried lowest index first; neighbours are visited lowest index first.
inline std::optional<ArSequence> alternating_walk(const DiffComponent &comp, long long step_limit = 200000) {
    struct E {
        int u, v;  // vertex ids; depot endpoints get private ids
        bool inserted;
    };
    std::vector<E> es;
    std::vector<int> label;  // vertex id -> node index
    std::vector<int> id_of;  // customer -> vertex id
    auto vid = [&](int node) {
        if (node == 0) {
            label.push_back(0);
            return static_cast<int>(label.size()) - 1;
        }
        if (node >= static_cast<int>(id_of.size())) id_of.resize(node + 1, -1);
        if (id_of[node] < 0) {
            id_of[node] = static_cast<int>(label.size());
            label.push_back(node);
        }
        return id_of[node];
    };
    for (const auto &e : comp.deleted) es.push_back({vid(e.a), vid(e.b), false});
    for (const auto &e : comp.inserted) es.push_back({vid(e.a), vid(e.b), true});
    const int nv = static_cast<int>(label.size());
    std::vector<std::vector<int>> inc(nv);
    for (int k = 0; k < static_cast<int>(es.size()); ++k) {
        inc[es[k].u].push_back(k);
        inc[es[k].v].push_back(k);
    }
    auto other = [&](int k, int x) { return es[k].u == x ? es[k].v : es[k].u; };
    for (int x = 0; x < nv; ++x)
        std::sort(inc[x].begin(), inc[x].end(),
                  [&](int a, int b) { return label[other(a, x)] < label[other(b, x)]; });

    std::vector<int> starts;
    for (int x = 0; x < nv; ++x)
        for (int k : inc[x])
            if (!es[k].inserted) {
                starts.push_back(x);
                break;
            }
    std::stable_sort(starts.begin(), starts.end(), [&](int a, int b) {
        const int la = label[a] == 0 ? std::numeric_limits<int>::max() : label[a];
        const int lb = label[b] == 0 ? std::numeric_limits<int>::max() : label[b];
        return la < lb;
    });

    const int total = static_cast<int>(es.size());
    std::vector<char> used(total, 0);
    std::vector<int> path;
    long long steps = 0;
    std::function<bool(int, bool)> dfs = [&](int x, bool want_insert) -> bool {
        if (static_cast<int>(path.size()) == total) return true;
        if (++steps > step_limit) return false;
        for (int k : inc[x]) {
            if (used[k] || es[k].inserted != want_insert) continue;
            used[k] = 1;
            path.push_back(k);
            if (dfs(other(k, x), !want_insert)) return true;
            path.pop_back();
            used[k] = 0;
        }
        return false;
    };
    for (int s : starts) {
        path.clear();
        std::fill(used.begin(), used.end(), 0);
        if (dfs(s, false)) {
            ArSequence seq;
            int x = s;
            seq.nodes.push_back(label[x]);
            for (int k : path) {
                x = other(k, x);
                seq.nodes.push_back(label[x]);
                seq.stages.push_back(es[k].inserted ? 'i' : 'd');
            }
            return seq;
        }
        if (steps > step_limit) break;
    }
    return std::nullopt;
}

/// Checks that an AR sequence deletes only edges of `before` missing from
/// `after`, inserts only edges of `after` missing from `before`, never
/// repeats an edge, and alternates starting with a deletion.
inline bool replay_ar(const ArSequence &seq, const Solution &before, const Solution &after,
                      EdgeSet *deleted_out = nullptr, EdgeSet *inserted_out = nullptr) {
    if (seq.nodes.size() != seq.stages.size() + 1 || seq.stages.empty()) return false;
    const EdgeSet eb = edge_set(before), ea = edge_set(after);
    EdgeSet current = eb, deleted, inserted;
    for (std::size_t k = 0; k < seq.stages.size(); ++k) {
        if (seq.stages[k] != (k % 2 == 0 ? 'd' : 'i')) return false;
        const int a = seq.nodes[k], b = seq.nodes[k + 1];
        if (a == b) return false;
        if (seq.stages[k] == 'd') {
            if (!current.contains(a, b) || ea.contains(a, b) || deleted.contains(a, b)) return false;
            deleted.insert(a, b);
            current = current.minus(EdgeSet({make_edge(a, b)}));
        } else {
            if (eb.contains(a, b) || !ea.contains(a, b) || inserted.contains(a, b)) return false;
            inserted.insert(a, b);
            current.insert(a, b);
        }
    }
    if (deleted_out) *deleted_out = deleted;
    if (inserted_out) *inserted_out = inserted;
    return true;
}

/// NAR labels of the customers in a route pair: 1 iff the customer is an
/// endpoint of some changed edge.
inline std::vector<std::pair<int, int>> nar_labels(const Solution &before, const Solution &after,
                                                   std::pair<int, int> route_pair) {
    const EdgeSet diff = edge_diff(before, after);
    std::vector<char> unstable;
    for (const auto &e : diff)
        for (int v : {e.a, e.b}) {
            if (v >= static_cast<int>(unstable.size())) unstable.resize(v + 1, 0);
            unstable[v] = 1;
        }
    std::vector<std::pair<int, int>> labels;
    for (int r : {route_pair.first, route_pair.second}) {
        if (r == route_pair.second && route_pair.first == route_pair.second && !labels.empty()) break;
        for (int c : before.routes[r])
            labels.emplace_back(c, c < static_cast<int>(unstable.size()) && unstable[c] ? 1 : 0);
    }
    std::sort(labels.begin(), labels.end());
    return labels;
}

/// Records for one improving iteration: a "step" record with both solutions
/// and one "subproblem" record per adjacent route pair.
inline std::vector<TraceRecord> trace_iteration(const Instance &inst, int iteration, const Solution &before,
                                                const Solution &after, const TraceConfig &cfg, Rng &rng,
                                                TraceSummary &summary) {
    std::vector<TraceRecord> out;
    const double improvement = evaluate_objective(inst, before) - evaluate_objective(inst, after);
    if (edge_diff(before, after).empty()) return out;

    TraceRecord step;
    step.kind = "step";
    step.instance_id = inst.id;
    step.iteration = iteration;
    step.improvement = improvement;
    step.before = before;
    step.after = after;
    out.push_back(step);

    const auto pairs = adjacent_route_pairs(inst, before);
    std::vector<TraceRecord> subs;
    for (int k = 0; k < static_cast<int>(pairs.size()); ++k) {
        TraceRecord r;
        r.kind = "subproblem";
        r.instance_id = inst.id;
        r.iteration = iteration;
        r.subproblem_id = k;
        r.route_pair = pairs[k];
        r.improvement = improvement;
        r.nar_labels = nar_labels(before, after, pairs[k]);
        subs.push_back(std::move(r));
    }

    std::vector<int> route_of(inst.size(), -1);
    for (std::size_t r = 0; r < before.routes.size(); ++r)
        for (int c : before.routes[r]) route_of[c] = static_cast<int>(r);
    for (const auto &comp : diff_components(before, after)) {
        ++summary.components;
        std::vector<int> routes;
        for (int c : comp.customers) routes.push_back(route_of[c]);
        std::sort(routes.begin(), routes.end());
        routes.erase(std::unique(routes.begin(), routes.end()), routes.end());
        int owner = -1;
        if (routes.size() <= 2) {
            for (int k = 0; k < static_cast<int>(pairs.size()) && owner < 0; ++k) {
                bool inside = true;
                for (int r : routes) inside = inside && (r == pairs[k].first || r == pairs[k].second);
                if (inside) owner = k;
            }
        }
        if (owner < 0) {
            ++summary.unassigned_components;
            continue;
        }
        auto seq = alternating_walk(comp, cfg.dfs_step_limit);
        if (!seq) {
            ++summary.skipped_components;
            continue;
        }
        double gain = 0.0;
        for (const auto &e : comp.deleted) gain += distance(inst, e.a, e.b);
        for (const auto &e : comp.inserted) gain -= distance(inst, e.a, e.b);
        seq->improvement = gain;
        const double draw = uniform01(rng);
        if (!(gain >= cfg.eta_improv) || !(draw < cfg.alpha_ac)) {
            ++summary.filtered_components;
            continue;
        }
        subs[owner].ar_sequences.push_back(std::move(*seq));
        ++summary.ar_sequences;
    }
    for (auto &r : subs) out.push_back(std::move(r));
    return out;
}

inline TraceSummary export_traces(const std::vector<Instance> &instances, const TraceConfig &cfg,
                                  std::ostream &os) {
    cfg.validate();
    TraceSummary summary;
    for (std::size_t p = 0; p < instances.size(); ++p) {
        const Instance &inst = instances[p];
        const std::uint64_t base = derive_seed(cfg.seed, p);
        const ProblemView view = ProblemView::of(inst);
        Solution current = initial_solution_sweep(inst, cfg.sweep, MoveBudget::moves(cfg.sweep_moves, base));
        Rng rng(derive_seed(base, 0xac));
        for (int t = 0; t < cfg.iterations; ++t) {
            const MoveBudget b = MoveBudget::moves(cfg.moves_per_iter, derive_seed(base, t + 1));
            Solution next = solve_warm(view, current, b, cfg.mode).first;
            for (const auto &rec : trace_iteration(inst, t, current, next, cfg, rng, summary)) {
                os << write_trace_record(rec);
                ++summary.records;
            }
            current = std::move(next);
        }
    }
    return summary;
}

// ---------------------------------------------------------------------------
// Redundancy and segmenter evaluation

struct BackboneConfig {
    BackboneMode mode = BackboneMode::Lns;
    long long moves_per_iter = 100;
    std::uint64_t seed = 0;
};

/// Changed-edge fraction of each successive backbone iteration.
inline std::vector<double> measure_redundancy(const Instance &inst, const Solution &init,
                                              const BackboneConfig &cfg, int steps) {
    if (steps < 1) throw Error("measure_redundancy: steps must be >= 1");
    const ProblemView view = ProblemView::of(inst);
    std::vector<double> out;
    Solution current = init;
    for (int t = 0; t < steps; ++t) {
        const MoveBudget b = MoveBudget::moves(cfg.moves_per_iter, derive_seed(cfg.seed, t));
        Solution next = solve_warm(view, current, b, cfg.mode).first;
        out.push_back(changed_fraction(current, next));
        current = std::move(next);
    }
    return out;
}

struct EvalSummary {
    double mean_recall = 0.0;
    double mean_tnr = 0.0;
    double mean_size_ratio = 0.0;
    long long iterations = 0;
    std::vector<RunStats> runs;
};

/// Runs the FSTA loop with `policy` on every instance while scoring each
/// iteration's prediction against the lookahead oracle on the same state.
inline EvalSummary eval_segmenter(const std::vector<std::pair<Instance, Solution>> &cases,
                                  const SegmenterPolicy &policy, LoopConfig cfg) {
    cfg.segmenter = policy;
    cfg.compute_metrics = true;
    cfg.record_stats = true;
    EvalSummary out;
    double recall = 0.0, tnr = 0.0, size = 0.0;
    for (std::size_t k = 0; k < cases.size(); ++k) {
        LoopConfig c = cfg;
        c.seed = derive_seed(cfg.seed, k);
        if (auto *r = std::get_if<RandomPolicy>(&c.segmenter)) r->seed = derive_seed(r->seed, k);
        auto [sol, stats] = run_fsta_loop(cases[k].first, cases[k].second, c);
        if (stats.aborted) throw Error("eval_segmenter: " + *stats.aborted);
        for (const auto &it : stats.iterations) {
            if (!it.recall) continue;
            recall += *it.recall;
            tnr += *it.tnr;
            size += it.size_ratio;
            ++out.iterations;
        }
        out.runs.push_back(std::move(stats));
    }
    if (out.iterations > 0) {
        out.mean_recall = recall / static_cast<double>(out.iterations);
        out.mean_tnr = tnr / static_cast<double>(out.iterations);
        out.mean_size_ratio = size / static_cast<double>(out.iterations);
    }
    return out;
}

} // namespace fsta
