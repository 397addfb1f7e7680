#pragma once

// Segment partitioning, hypernode aggregation, reduced-problem construction
// and solution recovery with exact objective bookkeeping.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "fsta/model.hpp"
#include "fsta/problem_view.hpp"
#include "fsta/random.hpp"

namespace fsta {

/// Maximal run of consecutive customers of one route joined by stable edges.
struct Segment {
    int route_index = 0;
    int start_pos = 0;
    int end_pos = 0;  // inclusive
    std::vector<int> nodes;

    int length() const { return static_cast<int>(nodes.size()); }
    friend bool operator==(const Segment &, const Segment &) = default;
};

enum class HypernodeKind { Passthrough, Single, PairHead, PairTail, TripleHead, TripleMid, TripleTail };

inline const char *to_string(HypernodeKind k) {
    switch (k) {
    case HypernodeKind::Passthrough: return "Passthrough";
    case HypernodeKind::Single: return "Single";
    case HypernodeKind::PairHead: return "PairHead";
    case HypernodeKind::PairTail: return "PairTail";
    case HypernodeKind::TripleHead: return "TripleHead";
    case HypernodeKind::TripleMid: return "TripleMid";
    case HypernodeKind::TripleTail: return "TripleTail";
    }
    return "?";
}

struct Hypernode {
    HypernodeKind kind = HypernodeKind::Passthrough;
    Point in;   // anchor for arcs entering the hypernode
    Point out;  // anchor for arcs leaving it
    double demand = 0.0;
    double tw_open = 0.0;
    double tw_close = kInf;
    double service = 0.0;
    bool backhaul = false;
    std::optional<Segment> segment;  // set on the first hypernode of a group
};

struct AggregationOptions {
    /// CVRP: one asymmetric hypernode per segment instead of a forced pair.
    bool cvrp_single = false;
    /// 1-PDP: use d_tail = D^k - D^max - D^min instead of D^k - D^max.
    /// Breaks load conservation; kept only for comparison runs.
    bool onepdp_table_tail = false;
};

/// Aggregated attributes of a VRPTW segment from the backward recursion:
/// earliest no-wait arrival, latest feasible arrival and total time spent
/// once service can start without waiting.
struct TimeAggregate {
    double open = 0.0;
    double close = kInf;
    double service = 0.0;
};

inline TimeAggregate aggregate_time(const Instance &inst, const std::vector<int> &nodes) {
    const Node &last = inst.nodes[nodes.back()];
    TimeAggregate agg{last.tw_open, last.tw_close, last.service_time};
    for (int m = static_cast<int>(nodes.size()) - 2; m >= 0; --m) {
        const Node &n = inst.nodes[nodes[m]];
        const double step = n.service_time + distance(inst, nodes[m], nodes[m + 1]);
        agg.open = std::max(n.tw_open, agg.open - step);
        agg.close = std::min(n.tw_close, agg.close - step);
        agg.service += step;
    }
    return agg;
}

inline double segment_internal_distance(const Instance &inst, const std::vector<int> &nodes) {
    double s = 0.0;
    for (std::size_t k = 0; k + 1 < nodes.size(); ++k) s += distance(inst, nodes[k], nodes[k + 1]);
    return s;
}

inline Hypernode passthrough(const Instance &inst, int c) {
    const Node &n = inst.nodes[c];
    Hypernode h;
    h.kind = HypernodeKind::Passthrough;
    h.in = h.out = n.point();
    h.demand = n.demand;
    h.tw_open = n.tw_open;
    h.tw_close = n.tw_close;
    h.service = n.service_time;
    h.backhaul = n.is_backhaul;
    return h;
}

inline std::vector<Hypernode> aggregate_segment(const Instance &inst, const Segment &seg,
                                                const AggregationOptions &opt = {}) {
    if (seg.nodes.empty()) throw Error("empty segment");
    const auto &nodes = seg.nodes;
    std::vector<Hypernode> out;
    if (nodes.size() == 1) {
        out.push_back(passthrough(inst, nodes[0]));
        out[0].segment = seg;
        return out;
    }
    const Node &first = inst.nodes[nodes.front()];
    const Node &last = inst.nodes[nodes.back()];
    double total = 0.0;
    for (int c : nodes) total += inst.nodes[c].demand;

    auto make = [&](HypernodeKind kind, Point in, Point out_anchor, double demand) {
        Hypernode h;
        h.kind = kind;
        h.in = in;
        h.out = out_anchor;
        h.demand = demand;
        return h;
    };

    switch (inst.variant) {
    case Variant::CVRP:
        if (opt.cvrp_single) {
            out.push_back(make(HypernodeKind::Single, first.point(), last.point(), total));
        } else {
            out.push_back(make(HypernodeKind::PairHead, first.point(), first.point(), total / 2));
            out.push_back(make(HypernodeKind::PairTail, last.point(), last.point(), total / 2));
        }
        break;
    case Variant::VRPTW: {
        const TimeAggregate agg = aggregate_time(inst, nodes);
        if (agg.open <= agg.close + kEps) {
            Hypernode h = make(HypernodeKind::Single, first.point(), last.point(), total);
            h.tw_open = agg.open;
            h.tw_close = agg.close;
            h.service = agg.service;
            out.push_back(h);
        } else {
            Hypernode head = make(HypernodeKind::PairHead, first.point(), first.point(), total / 2);
            head.tw_open = 0.0;
            head.tw_close = agg.close;
            head.service = 0.0;
            Hypernode tail = make(HypernodeKind::PairTail, last.point(), last.point(), total / 2);
            tail.tw_open = agg.open;
            tail.tw_close = kInf;
            tail.service = agg.service;
            out.push_back(head);
            out.push_back(tail);
        }
        break;
    }
    case Variant::VRPB: {
        for (int c : nodes)
            if (inst.nodes[c].is_backhaul != first.is_backhaul)
                throw Error("VRPB segment mixes linehaul and backhaul customers");
        Hypernode h = make(HypernodeKind::Single, first.point(), last.point(), total);
        h.backhaul = first.is_backhaul;
        out.push_back(h);
        break;
    }
    case Variant::OnePDP: {
        if (nodes.size() == 2) {
            // Two original nodes tied by a directed forced arc; exact and no larger.
            Hypernode a = make(HypernodeKind::PairHead, first.point(), first.point(), first.demand);
            Hypernode b = make(HypernodeKind::PairTail, last.point(), last.point(), last.demand);
            out.push_back(a);
            out.push_back(b);
            break;
        }
        double prefix = 0.0, lo = 0.0, hi = 0.0;
        for (int c : nodes) {
            prefix += inst.nodes[c].demand;
            lo = std::min(lo, prefix);
            hi = std::max(hi, prefix);
        }
        const double tail = opt.onepdp_table_tail ? prefix - hi - lo : prefix - hi;
        out.push_back(make(HypernodeKind::TripleHead, first.point(), first.point(), lo));
        out.push_back(make(HypernodeKind::TripleMid, first.point(), last.point(), hi - lo));
        out.push_back(make(HypernodeKind::TripleTail, last.point(), last.point(), tail));
        break;
    }
    }
    out.front().segment = seg;
    return out;
}

/// Forced arcs inside an aggregated group (local indices) and their cost.
struct GroupArcs {
    std::vector<ForcedArc> arcs;
    double internal_cost = 0.0;
    bool reversible = true;
};

inline GroupArcs group_arcs(const Instance &inst, const Segment &seg, const std::vector<Hypernode> &group) {
    GroupArcs g;
    if (group.size() < 2) {
        g.reversible = group.front().kind == HypernodeKind::Passthrough;
        return g;
    }
    double cost = 0.0;
    bool reversible = false;
    if (inst.variant == Variant::CVRP) {
        cost = distance(inst, seg.nodes.front(), seg.nodes.back());
        reversible = true;
    } else if (inst.variant == Variant::OnePDP && group.size() == 2) {
        cost = distance(inst, seg.nodes.front(), seg.nodes.back());
    }
    for (std::size_t k = 0; k + 1 < group.size(); ++k) {
        g.arcs.push_back({static_cast<int>(k), static_cast<int>(k + 1), group.size() == 2 ? cost : 0.0, reversible});
        g.internal_cost += g.arcs.back().cost;
    }
    g.reversible = reversible;
    return g;
}

struct ReducedProblem {
    Variant variant = Variant::CVRP;
    DistanceMode mode = DistanceMode::EuclideanF64;
    double capacity = 0.0;
    std::vector<Hypernode> hypernodes;  // index 0 is the depot
    std::vector<ForcedArc> forced_arcs;
    ProblemView view;

    int customers() const { return static_cast<int>(hypernodes.size()) - 1; }
};

struct RecoveryMap {
    struct Group {
        std::vector<int> members;   // hypernode indices, forward order
        std::vector<int> original;  // original customers, forward order
        bool reversible = false;
    };
    std::vector<Group> groups;
    std::vector<int> group_of;  // hypernode -> group (-1 for the depot)
    double objective_offset = 0.0;
};

struct Reduction {
    ReducedProblem problem;
    Solution solution;  // the current solution expressed over hypernodes
    RecoveryMap map;
    std::vector<Segment> segments;

    double size_ratio(int original_customers) const {
        return original_customers == 0 ? 1.0 : static_cast<double>(problem.customers()) / original_customers;
    }
};

/// Unstable set actually used for partitioning: the given edges plus every
/// depot edge of the solution, plus (VRPB) every linehaul/backhaul boundary.
inline EdgeSet normalized_unstable(const Instance &inst, const Solution &sol, const EdgeSet &unstable) {
    const EdgeSet edges = edge_set(sol);
    for (const auto &e : unstable) {
        if (e.touches_depot()) continue;
        if (!edges.contains(e))
            throw Error("unstable edge {" + std::to_string(e.a) + "," + std::to_string(e.b) + "} not in solution");
    }
    EdgeSet out = unstable.intersected(edges).united(edges.depot_edges());
    if (inst.variant == Variant::VRPB) {
        for (const auto &r : sol.routes)
            for (std::size_t k = 0; k + 1 < r.size(); ++k)
                if (inst.nodes[r[k]].is_backhaul != inst.nodes[r[k + 1]].is_backhaul) out.insert(r[k], r[k + 1]);
    }
    return out;
}

inline std::vector<Segment> partition_segments(const Instance &inst, const Solution &sol, const EdgeSet &unstable) {
    const EdgeSet cut = normalized_unstable(inst, sol, unstable);
    std::vector<Segment> segments;
    for (int r = 0; r < static_cast<int>(sol.routes.size()); ++r) {
        const Route &route = sol.routes[r];
        int start = 0;
        for (int k = 0; k < static_cast<int>(route.size()); ++k) {
            const bool end_here = k + 1 == static_cast<int>(route.size()) || cut.contains(route[k], route[k + 1]);
            if (!end_here) continue;
            Segment s;
            s.route_index = r;
            s.start_pos = start;
            s.end_pos = k;
            s.nodes.assign(route.begin() + start, route.begin() + k + 1);
            segments.push_back(std::move(s));
            start = k + 1;
        }
    }
    return segments;
}

inline Reduction build_reduced(const Instance &inst, const Solution &sol, const EdgeSet &unstable,
                               const AggregationOptions &opt = {}) {
    Reduction red;
    red.segments = partition_segments(inst, sol, unstable);

    // Hypernode numbering follows the first original node of each segment,
    // so an all-singleton partition maps every customer onto itself.
    std::vector<int> order(red.segments.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return red.segments[a].nodes.front() < red.segments[b].nodes.front(); });

    ReducedProblem &rp = red.problem;
    rp.variant = inst.variant;
    rp.mode = inst.distance_mode;
    rp.capacity = inst.capacity;
    Hypernode depot = passthrough(inst, 0);
    rp.hypernodes.push_back(depot);

    RecoveryMap &map = red.map;
    map.group_of.push_back(-1);
    std::vector<int> group_of_segment(red.segments.size(), -1);
    std::vector<ViewNode> vnodes;
    auto lower = [](const Hypernode &h) {
        ViewNode v;
        v.in = h.in;
        v.out = h.out;
        v.demand = h.demand;
        v.service = h.service;
        v.tw_open = h.tw_open;
        v.tw_close = h.tw_close;
        v.backhaul = h.backhaul;
        return v;
    };
    vnodes.push_back(lower(depot));

    double offset = 0.0;
    for (int si : order) {
        const Segment &seg = red.segments[si];
        std::vector<Hypernode> group = aggregate_segment(inst, seg, opt);
        const GroupArcs ga = group_arcs(inst, seg, group);
        const int base = static_cast<int>(rp.hypernodes.size());
        RecoveryMap::Group g;
        g.original = seg.nodes;
        g.reversible = ga.reversible;
        for (std::size_t k = 0; k < group.size(); ++k) {
            g.members.push_back(base + static_cast<int>(k));
            map.group_of.push_back(static_cast<int>(map.groups.size()));
            ViewNode v = lower(group[k]);
            if (k == 0) {
                for (int c : seg.nodes) {
                    v.mass_sum.x += inst.nodes[c].x;
                    v.mass_sum.y += inst.nodes[c].y;
                }
                v.mass_count = static_cast<double>(seg.nodes.size());
            }
            vnodes.push_back(v);
            rp.hypernodes.push_back(std::move(group[k]));
        }
        for (const auto &a : ga.arcs) rp.forced_arcs.push_back({base + a.from, base + a.to, a.cost, a.reversible});
        offset += segment_internal_distance(inst, seg.nodes) - ga.internal_cost;
        group_of_segment[si] = static_cast<int>(map.groups.size());
        map.groups.push_back(std::move(g));
    }
    map.objective_offset = offset;
    rp.view = ProblemView(rp.variant, rp.mode, rp.capacity, std::move(vnodes), rp.forced_arcs);

    red.solution.routes.assign(sol.routes.size(), {});
    for (std::size_t si = 0; si < red.segments.size(); ++si) {
        const auto &members = map.groups[group_of_segment[si]].members;
        auto &route = red.solution.routes[red.segments[si].route_index];
        route.insert(route.end(), members.begin(), members.end());
    }
    return red;
}

/// Expands hypernodes back to their segments. Reversible groups traversed
/// tail-first expand reversed.
inline Solution recover(const Solution &reduced, const RecoveryMap &map) {
    Solution out;
    for (std::size_t r = 0; r < reduced.routes.size(); ++r) {
        const Route &route = reduced.routes[r];
        Route expanded;
        std::size_t k = 0;
        while (k < route.size()) {
            const int h = route[k];
            if (h <= 0 || h >= static_cast<int>(map.group_of.size()))
                throw Error("reduced route " + std::to_string(r) + " has invalid hypernode " + std::to_string(h));
            const auto &g = map.groups[map.group_of[h]];
            const std::size_t len = g.members.size();
            bool fwd = k + len <= route.size(), bwd = fwd && g.reversible;
            for (std::size_t t = 0; t < len && (fwd || bwd); ++t) {
                fwd = fwd && route[k + t] == g.members[t];
                bwd = bwd && route[k + t] == g.members[len - 1 - t];
            }
            if (fwd)
                expanded.insert(expanded.end(), g.original.begin(), g.original.end());
            else if (bwd)
                expanded.insert(expanded.end(), g.original.rbegin(), g.original.rend());
            else
                throw Error("forced-arc violation at hypernode " + std::to_string(h) + " in reduced route " +
                            std::to_string(r));
            k += len;
        }
        if (!expanded.empty()) out.routes.push_back(std::move(expanded));
    }
    return out;
}

/// Expresses an original solution over the hypernodes of a reduction, if
/// every segment appears intact (reversed only where the group allows it).
inline std::optional<Solution> embed(const Solution &original, const Reduction &red) {
    const RecoveryMap &map = red.map;
    std::vector<int> group_of_first;  // original customer -> group whose segment starts or ends there
    int max_node = 0;
    for (const auto &g : map.groups)
        for (int c : g.original) max_node = std::max(max_node, c);
    group_of_first.assign(max_node + 1, -1);
    for (int gi = 0; gi < static_cast<int>(map.groups.size()); ++gi) {
        group_of_first[map.groups[gi].original.front()] = gi;
        group_of_first[map.groups[gi].original.back()] = gi;
    }
    Solution out;
    for (const auto &route : original.routes) {
        Route mapped;
        std::size_t k = 0;
        while (k < route.size()) {
            const int c = route[k];
            if (c <= 0 || c > max_node || group_of_first[c] < 0) return std::nullopt;
            const auto &g = map.groups[group_of_first[c]];
            const std::size_t len = g.original.size();
            if (k + len > route.size()) return std::nullopt;
            bool fwd = true, bwd = g.reversible;
            for (std::size_t t = 0; t < len; ++t) {
                fwd = fwd && route[k + t] == g.original[t];
                bwd = bwd && route[k + t] == g.original[len - 1 - t];
            }
            if (fwd)
                mapped.insert(mapped.end(), g.members.begin(), g.members.end());
            else if (bwd)
                mapped.insert(mapped.end(), g.members.rbegin(), g.members.rend());
            else
                return std::nullopt;
            k += len;
        }
        out.routes.push_back(std::move(mapped));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Executable feasibility / monotonicity check

struct TheoremReport {
    bool passed = true;
    bool exhaustive = false;
    long long reduced_solutions = 0;  // feasible reduced solutions examined
    long long pairs_checked = 0;
    std::string failure;
    std::optional<std::pair<Solution, Solution>> witness;  // reduced solutions
};

namespace detail {

struct TheoremChecker {
    const Instance &inst;
    const Reduction &red;
    TheoremReport &report;
    double tol;
    std::vector<std::pair<double, double>> values;  // (reduced, original) objective
    std::vector<Solution> kept;                     // parallel to values when sampling

    // Returns false once a violation has been recorded.
    bool examine(const Solution &reduced, bool keep) {
        ++report.reduced_solutions;
        const double fr = red.problem.view.solution_cost(reduced);
        Solution orig;
        try {
            orig = recover(reduced, red.map);
        } catch (const Error &e) {
            return fail(std::string("recovery failed: ") + e.what(), reduced, reduced);
        }
        const FeasibilityReport rep = check_feasibility(inst, orig);
        if (!rep.feasible)
            return fail("recovered solution infeasible: " + rep.violations.front().detail, reduced, reduced);
        const double fo = evaluate_objective(inst, orig);
        if (std::abs(fo - fr - red.map.objective_offset) > tol + 1e-12 * std::abs(fo))
            return fail("objective offset mismatch", reduced, reduced);
        values.emplace_back(fr, fo);
        if (keep) kept.push_back(reduced);
        return true;
    }

    bool fail(std::string msg, const Solution &a, const Solution &b) {
        if (report.passed) {
            report.passed = false;
            report.failure = std::move(msg);
            report.witness = std::make_pair(a, b);
        }
        return false;
    }

    bool ordered(std::size_t i, std::size_t j) const {
        const auto &[ri, oi] = values[i];
        const auto &[rj, oj] = values[j];
        if (ri <= rj && !(oi <= oj + tol)) return false;
        if (rj <= ri && !(oj <= oi + tol)) return false;
        return true;
    }
};

} // namespace detail

/// Checks feasibility transfer and order preservation between reduced and
/// recovered objectives. With <= 8 customers every reduced solution is
/// enumerated; otherwise a pool of feasible reduced solutions is sampled by a
/// random walk and `trials` random pairs are compared.
inline TheoremReport verify_theorem(const Instance &inst, const Solution &sol, const EdgeSet &unstable, int trials,
                                    std::uint64_t seed, const AggregationOptions &opt = {}) {
    TheoremReport report;
    const Reduction red = build_reduced(inst, sol, unstable, opt);
    const ProblemView &view = red.problem.view;
    detail::TheoremChecker chk{inst, red, report, inst.distance_mode == DistanceMode::RoundedInt ? 0.0 : 1e-9, {}, {}};
    if (!view.solution_feasible(red.solution)) {
        report.passed = false;
        report.failure = "reduced image of the input solution is infeasible";
        return report;
    }

    if (inst.customers() <= 8) {
        report.exhaustive = true;
        const int nb = view.block_count();
        std::vector<std::vector<int>> routes;  // block-level, sign encodes orientation
        std::vector<int> expanded;
        const bool monotone = inst.variant == Variant::CVRP || inst.variant == Variant::VRPB;
        auto seq_nodes = [&](const std::vector<int> &r, std::vector<int> &out) {
            out.clear();
            for (int code : r) {
                const auto &nodes = view.block(std::abs(code) - 1).nodes;
                if (code > 0)
                    out.insert(out.end(), nodes.begin(), nodes.end());
                else
                    out.insert(out.end(), nodes.rbegin(), nodes.rend());
            }
        };
        std::function<bool(int)> rec = [&](int b) -> bool {
            if (b == nb) {
                Solution s;
                for (const auto &r : routes) {
                    seq_nodes(r, expanded);
                    if (!view.route_feasible(expanded)) return true;
                    s.routes.push_back(expanded);
                }
                return chk.examine(s, false);
            }
            const Block &blk = view.block(b);
            std::vector<int> codes{b + 1};
            if (blk.reversible && blk.nodes.size() > 1) codes.push_back(-(b + 1));
            for (int code : codes) {
                for (std::size_t r = 0; r < routes.size(); ++r) {
                    for (std::size_t p = 0; p <= routes[r].size(); ++p) {
                        routes[r].insert(routes[r].begin() + p, code);
                        bool prune = false;
                        if (monotone) {
                            seq_nodes(routes[r], expanded);
                            prune = !view.route_variant_feasible(expanded);
                        }
                        const bool go = prune || rec(b + 1);
                        routes[r].erase(routes[r].begin() + p);
                        if (!go) return false;
                    }
                }
                routes.push_back({code});
                const bool go = rec(b + 1);
                routes.pop_back();
                if (!go) return false;
            }
            return true;
        };
        if (!rec(0)) return report;
        // Order preservation over all pairs: sort by reduced objective and
        // require the original objective to be nondecreasing.
        std::vector<std::size_t> idx(chk.values.size());
        std::iota(idx.begin(), idx.end(), 0);
        std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return chk.values[a] < chk.values[b]; });
        for (std::size_t k = 0; k + 1 < idx.size(); ++k) {
            ++report.pairs_checked;
            if (!chk.ordered(idx[k], idx[k + 1])) {
                report.passed = false;
                report.failure = "order violated between enumerated solutions";
                return report;
            }
        }
        return report;
    }

    // Random walk over feasible reduced solutions.
    Rng rng(seed);
    Solution cur = red.solution;
    if (!chk.examine(cur, true)) return report;
    const int pool_target = std::max(20, std::min(200, trials));
    const int max_steps = pool_target * 50;
    for (int step = 0; step < max_steps && static_cast<int>(chk.kept.size()) < pool_target; ++step) {
        // Decompose current routes into groups of forced chains.
        std::vector<std::vector<std::vector<int>>> chunks;
        for (const auto &r : cur.routes) {
            std::vector<std::vector<int>> rc;
            std::size_t k = 0;
            while (k < r.size()) {
                const int len = static_cast<int>(view.block(view.block_of(r[k])).nodes.size());
                rc.emplace_back(r.begin() + k, r.begin() + k + len);
                k += len;
            }
            chunks.push_back(std::move(rc));
        }
        const int m = static_cast<int>(chunks.size());
        const int from = uniform_int(rng, 0, m - 1);
        const int pos = uniform_int(rng, 0, static_cast<int>(chunks[from].size()) - 1);
        std::vector<int> moving = chunks[from][pos];
        const int kind = uniform_int(rng, 0, 2);
        if (kind == 0) {  // relocate, possibly into a new route, possibly flipped
            chunks[from].erase(chunks[from].begin() + pos);
            const Block &blk = view.block(view.block_of(moving.front()));
            if (blk.reversible && uniform01(rng) < 0.5) std::reverse(moving.begin(), moving.end());
            const int to = uniform_int(rng, 0, m);
            if (to == m) {
                chunks.push_back({moving});
            } else {
                const int at = uniform_int(rng, 0, static_cast<int>(chunks[to].size()));
                chunks[to].insert(chunks[to].begin() + at, moving);
            }
        } else if (kind == 1) {  // swap with another chunk
            const int other = uniform_int(rng, 0, m - 1);
            const int opos = uniform_int(rng, 0, static_cast<int>(chunks[other].size()) - 1);
            std::swap(chunks[from][pos], chunks[other][opos]);
        } else {  // reverse a run of reversible chunks
            const int len = static_cast<int>(chunks[from].size());
            const int a = uniform_int(rng, 0, len - 1), b = uniform_int(rng, a, len - 1);
            bool ok = true;
            for (int k = a; k <= b; ++k)
                ok = ok && view.block(view.block_of(chunks[from][k].front())).reversible;
            if (!ok) continue;
            std::reverse(chunks[from].begin() + a, chunks[from].begin() + b + 1);
            for (int k = a; k <= b; ++k) std::reverse(chunks[from][k].begin(), chunks[from][k].end());
        }
        Solution next;
        for (const auto &rc : chunks) {
            Route r;
            for (const auto &c : rc) r.insert(r.end(), c.begin(), c.end());
            if (!r.empty()) next.routes.push_back(std::move(r));
        }
        if (!view.solution_feasible(next)) continue;
        cur = next;
        if (!chk.examine(cur, true)) return report;
    }
    const std::size_t pool = chk.values.size();
    for (int t = 0; t < trials && pool > 0; ++t) {
        const std::size_t i = static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(pool) - 1));
        const std::size_t j = static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(pool) - 1));
        ++report.pairs_checked;
        if (!chk.ordered(i, j)) {
            chk.fail("order violated between sampled solutions", chk.kept[i], chk.kept[j]);
            return report;
        }
    }
    return report;
}

} // namespace fsta
