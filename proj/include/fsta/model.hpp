#pragma once

// Problem/solution representations, per-variant feasibility, objective and
// edge-set algebra shared by every other module.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace fsta {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr double kEps = 1e-9;
inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Variant { CVRP, VRPTW, VRPB, OnePDP };
enum class DistanceMode { EuclideanF64, RoundedInt };

inline const char *to_string(Variant v) {
    switch (v) {
    case Variant::CVRP: return "CVRP";
    case Variant::VRPTW: return "VRPTW";
    case Variant::VRPB: return "VRPB";
    case Variant::OnePDP: return "OnePDP";
    }
    return "?";
}

inline Variant variant_from_string(const std::string &s) {
    if (s == "CVRP" || s == "cvrp") return Variant::CVRP;
    if (s == "VRPTW" || s == "vrptw") return Variant::VRPTW;
    if (s == "VRPB" || s == "vrpb") return Variant::VRPB;
    if (s == "OnePDP" || s == "onepdp" || s == "1-VRPPD" || s == "1vrppd") return Variant::OnePDP;
    throw Error("unknown variant '" + s + "'");
}

inline const char *to_string(DistanceMode m) {
    return m == DistanceMode::EuclideanF64 ? "euclidean_f64" : "rounded_int";
}

inline DistanceMode distance_mode_from_string(const std::string &s) {
    if (s == "euclidean_f64") return DistanceMode::EuclideanF64;
    if (s == "rounded_int") return DistanceMode::RoundedInt;
    throw Error("unknown distance mode '" + s + "'");
}

struct Point {
    double x = 0.0;
    double y = 0.0;
    friend bool operator==(const Point &, const Point &) = default;
};

inline double point_distance(Point a, Point b, DistanceMode mode) {
    const double d = std::hypot(a.x - b.x, a.y - b.y);
    return mode == DistanceMode::RoundedInt ? std::nearbyint(d) : d;
}

struct Node {
    double x = 0.0;
    double y = 0.0;
    double demand = 0.0;
    double service_time = 0.0;
    double tw_open = 0.0;
    double tw_close = kInf;
    bool is_backhaul = false;

    Point point() const { return {x, y}; }
    friend bool operator==(const Node &, const Node &) = default;
};

/// A routing instance. Node 0 is the depot.
struct Instance {
    std::string id;
    Variant variant = Variant::CVRP;
    DistanceMode distance_mode = DistanceMode::EuclideanF64;
    double capacity = 0.0;
    std::vector<Node> nodes;

    int size() const { return static_cast<int>(nodes.size()); }
    int customers() const { return size() - 1; }
    friend bool operator==(const Instance &, const Instance &) = default;
};

/// Throws if the instance breaks a structural or per-variant invariant.
inline void validate(const Instance &inst) {
    if (inst.nodes.empty()) throw Error("instance has no depot");
    if (!(inst.capacity > 0.0)) throw Error("capacity must be positive");
    const Node &depot = inst.nodes[0];
    if (depot.demand != 0.0 || depot.service_time != 0.0 || depot.is_backhaul)
        throw Error("depot must have zero demand, zero service time and no backhaul flag");
    if (inst.variant == Variant::VRPTW && (depot.tw_open != 0.0 || depot.tw_close != kInf))
        throw Error("VRPTW depot window must be [0, inf)");
    for (int i = 1; i < inst.size(); ++i) {
        const Node &n = inst.nodes[i];
        const std::string where = "node " + std::to_string(i) + ": ";
        if (inst.variant == Variant::OnePDP) {
            if (n.demand == 0.0 || std::abs(n.demand) > inst.capacity)
                throw Error(where + "1-PDP demand must be nonzero with |d| <= C");
        } else if (!(n.demand > 0.0) || n.demand > inst.capacity) {
            throw Error(where + "demand must satisfy 0 < d <= C");
        }
        if (inst.variant != Variant::VRPTW && n.service_time != 0.0)
            throw Error(where + "service time only allowed for VRPTW");
        if (n.service_time < 0.0) throw Error(where + "negative service time");
        if (inst.variant == Variant::VRPTW && n.tw_open > n.tw_close)
            throw Error(where + "time window open after close");
        if (inst.variant != Variant::VRPB && n.is_backhaul)
            throw Error(where + "backhaul flag only allowed for VRPB");
    }
}

using Route = std::vector<int>;

/// Routes of customer indices; the depot is implicit at both ends.
struct Solution {
    std::vector<Route> routes;
    friend bool operator==(const Solution &, const Solution &) = default;
};

inline int customer_count(const Solution &s) {
    int n = 0;
    for (const auto &r : s.routes) n += static_cast<int>(r.size());
    return n;
}

inline double distance(const Instance &inst, int i, int j) {
    if (i < 0 || j < 0 || i >= inst.size() || j >= inst.size())
        throw Error("node index out of range: " + std::to_string(i) + "," + std::to_string(j));
    if (i == j) return 0.0;
    return point_distance(inst.nodes[i].point(), inst.nodes[j].point(), inst.distance_mode);
}

/// Empty string when every customer appears exactly once and routes are
/// well-formed; otherwise a description of the first defect.
inline std::string structural_defect(const Instance &inst, const Solution &sol) {
    std::vector<int> seen(inst.size(), 0);
    for (std::size_t r = 0; r < sol.routes.size(); ++r) {
        if (sol.routes[r].empty()) return "route " + std::to_string(r) + " is empty";
        for (int c : sol.routes[r]) {
            if (c == 0) return "depot inside route " + std::to_string(r);
            if (c < 0 || c >= inst.size())
                return "route " + std::to_string(r) + " has invalid node " + std::to_string(c);
            if (++seen[c] > 1) return "customer " + std::to_string(c) + " visited twice";
        }
    }
    for (int c = 1; c < inst.size(); ++c)
        if (seen[c] == 0) return "customer " + std::to_string(c) + " not visited";
    return {};
}

inline double route_cost(const Instance &inst, const Route &route) {
    if (route.empty()) return 0.0;
    double cost = distance(inst, 0, route.front());
    for (std::size_t k = 0; k + 1 < route.size(); ++k) cost += distance(inst, route[k], route[k + 1]);
    return cost + distance(inst, route.back(), 0);
}

inline double evaluate_objective(const Instance &inst, const Solution &sol) {
    if (auto defect = structural_defect(inst, sol); !defect.empty() && !sol.routes.empty())
        throw Error("structurally invalid solution: " + defect);
    double total = 0.0;
    for (const auto &r : sol.routes) total += route_cost(inst, r);
    return total;
}

// ---------------------------------------------------------------------------
// Feasibility

enum class ViolationKind {
    CapacityExceeded,
    TimeWindowMissed,
    BackhaulOrder,
    NegativeLoad,
    LoadExceeded,
    CustomerCoverage,
};

inline const char *to_string(ViolationKind k) {
    switch (k) {
    case ViolationKind::CapacityExceeded: return "CapacityExceeded";
    case ViolationKind::TimeWindowMissed: return "TimeWindowMissed";
    case ViolationKind::BackhaulOrder: return "BackhaulOrder";
    case ViolationKind::NegativeLoad: return "NegativeLoad";
    case ViolationKind::LoadExceeded: return "LoadExceeded";
    case ViolationKind::CustomerCoverage: return "CustomerCoverage";
    }
    return "?";
}

struct Violation {
    int route_index = -1;
    ViolationKind kind = ViolationKind::CustomerCoverage;
    std::string detail;
};

struct FeasibilityReport {
    bool feasible = true;
    std::vector<Violation> violations;

    void add(int route, ViolationKind kind, std::string detail) {
        feasible = false;
        violations.push_back({route, kind, std::move(detail)});
    }
    bool has(ViolationKind kind) const {
        return std::any_of(violations.begin(), violations.end(),
                           [&](const Violation &v) { return v.kind == kind; });
    }
};

inline double tolerance(const Instance &inst) {
    return inst.distance_mode == DistanceMode::RoundedInt ? 0.0 : kEps;
}

/// Service start times along a VRPTW route, leaving the depot at time 0.
inline std::vector<double> service_starts(const Instance &inst, const Route &route) {
    std::vector<double> starts;
    starts.reserve(route.size());
    double t = 0.0;
    int prev = 0;
    for (int c : route) {
        t += distance(inst, prev, c);
        const Node &n = inst.nodes[c];
        t = std::max(t, n.tw_open);
        starts.push_back(t);
        t += n.service_time;
        prev = c;
    }
    return starts;
}

/// Load-range check for a 1-PDP route given an explicit start load.
inline void check_route_load(const Instance &inst, const Route &route, double start_load, int route_index,
                             FeasibilityReport &report) {
    const double eps = tolerance(inst);
    double load = start_load;
    if (load < -eps) report.add(route_index, ViolationKind::NegativeLoad, "negative start load");
    if (load > inst.capacity + eps) report.add(route_index, ViolationKind::LoadExceeded, "start load exceeds C");
    for (int c : route) {
        load += inst.nodes[c].demand;
        if (load < -eps) {
            report.add(route_index, ViolationKind::NegativeLoad, "load negative after node " + std::to_string(c));
            return;
        }
        if (load > inst.capacity + eps) {
            report.add(route_index, ViolationKind::LoadExceeded, "load exceeds C after node " + std::to_string(c));
            return;
        }
    }
}

/// Minimal feasible start load of a 1-PDP route: max(0, -min running prefix).
inline double minimal_start_load(const Instance &inst, const Route &route) {
    double prefix = 0.0, lowest = 0.0;
    for (int c : route) {
        prefix += inst.nodes[c].demand;
        lowest = std::min(lowest, prefix);
    }
    return -lowest;
}

inline void check_route(const Instance &inst, const Route &route, int r, FeasibilityReport &report) {
    const double eps = tolerance(inst);
    const double cap = inst.capacity;
    switch (inst.variant) {
    case Variant::CVRP:
    case Variant::VRPTW: {
        double load = 0.0;
        for (int c : route) load += inst.nodes[c].demand;
        if (load > cap + eps)
            report.add(r, ViolationKind::CapacityExceeded, "load " + std::to_string(load) + " > C");
        if (inst.variant == Variant::VRPTW) {
            const auto starts = service_starts(inst, route);
            for (std::size_t k = 0; k < route.size(); ++k) {
                if (starts[k] > inst.nodes[route[k]].tw_close + eps) {
                    report.add(r, ViolationKind::TimeWindowMissed,
                               "service at node " + std::to_string(route[k]) + " begins after its window");
                    break;
                }
            }
        }
        break;
    }
    case Variant::VRPB: {
        double linehaul = 0.0, backhaul = 0.0;
        bool in_backhaul = false, order_ok = true;
        for (int c : route) {
            const Node &n = inst.nodes[c];
            if (n.is_backhaul) {
                in_backhaul = true;
                backhaul += n.demand;
            } else {
                if (in_backhaul) order_ok = false;
                linehaul += n.demand;
            }
        }
        if (!order_ok) report.add(r, ViolationKind::BackhaulOrder, "linehaul customer after a backhaul customer");
        if (linehaul > cap + eps) report.add(r, ViolationKind::CapacityExceeded, "linehaul load exceeds C");
        if (backhaul > cap + eps) report.add(r, ViolationKind::CapacityExceeded, "backhaul load exceeds C");
        break;
    }
    case Variant::OnePDP:
        check_route_load(inst, route, minimal_start_load(inst, route), r, report);
        break;
    }
}

inline FeasibilityReport check_feasibility(const Instance &inst, const Solution &sol) {
    FeasibilityReport report;
    if (auto defect = structural_defect(inst, sol); !defect.empty()) {
        report.add(-1, ViolationKind::CustomerCoverage, defect);
        return report;
    }
    for (std::size_t r = 0; r < sol.routes.size(); ++r)
        check_route(inst, sol.routes[r], static_cast<int>(r), report);
    return report;
}

// ---------------------------------------------------------------------------
// Edge sets

struct Edge {
    int a = 0;
    int b = 0;
    friend auto operator<=>(const Edge &, const Edge &) = default;
    bool touches_depot() const { return a == 0; }
};

inline Edge make_edge(int i, int j) {
    if (i == j) throw Error("self edge " + std::to_string(i));
    return i < j ? Edge{i, j} : Edge{j, i};
}

/// Sorted set of canonical undirected edges.
class EdgeSet {
public:
    EdgeSet() = default;
    explicit EdgeSet(std::vector<Edge> edges) : edges_(std::move(edges)) { normalize(); }

    void insert(int i, int j) {
        const Edge e = make_edge(i, j);
        auto it = std::lower_bound(edges_.begin(), edges_.end(), e);
        if (it == edges_.end() || *it != e) edges_.insert(it, e);
    }
    bool contains(int i, int j) const {
        if (i == j) return false;
        return std::binary_search(edges_.begin(), edges_.end(), make_edge(i, j));
    }
    bool contains(const Edge &e) const { return std::binary_search(edges_.begin(), edges_.end(), e); }
    std::size_t size() const { return edges_.size(); }
    bool empty() const { return edges_.empty(); }
    const std::vector<Edge> &edges() const { return edges_; }
    auto begin() const { return edges_.begin(); }
    auto end() const { return edges_.end(); }

    bool is_subset_of(const EdgeSet &other) const {
        return std::includes(other.edges_.begin(), other.edges_.end(), edges_.begin(), edges_.end());
    }
    EdgeSet united(const EdgeSet &o) const { return combine(o, Op::Union); }
    EdgeSet intersected(const EdgeSet &o) const { return combine(o, Op::Intersection); }
    EdgeSet minus(const EdgeSet &o) const { return combine(o, Op::Difference); }
    EdgeSet symmetric_difference(const EdgeSet &o) const { return combine(o, Op::Symmetric); }

    EdgeSet depot_edges() const {
        EdgeSet out;
        for (const auto &e : edges_)
            if (e.touches_depot()) out.edges_.push_back(e);
        return out;
    }
    EdgeSet non_depot_edges() const {
        EdgeSet out;
        for (const auto &e : edges_)
            if (!e.touches_depot()) out.edges_.push_back(e);
        return out;
    }

    friend bool operator==(const EdgeSet &, const EdgeSet &) = default;

private:
    enum class Op { Union, Intersection, Difference, Symmetric };

    EdgeSet combine(const EdgeSet &o, Op op) const {
        EdgeSet out;
        auto dst = std::back_inserter(out.edges_);
        const auto &x = edges_;
        const auto &y = o.edges_;
        switch (op) {
        case Op::Union: std::set_union(x.begin(), x.end(), y.begin(), y.end(), dst); break;
        case Op::Intersection: std::set_intersection(x.begin(), x.end(), y.begin(), y.end(), dst); break;
        case Op::Difference: std::set_difference(x.begin(), x.end(), y.begin(), y.end(), dst); break;
        case Op::Symmetric: std::set_symmetric_difference(x.begin(), x.end(), y.begin(), y.end(), dst); break;
        }
        return out;
    }

    void normalize() {
        for (auto &e : edges_) e = make_edge(e.a, e.b);
        std::sort(edges_.begin(), edges_.end());
        edges_.erase(std::unique(edges_.begin(), edges_.end()), edges_.end());
    }

    std::vector<Edge> edges_;
};

/// All undirected edges of the solution, depot edges included. A singleton
/// route contributes {0,c} once.
inline EdgeSet edge_set(const Solution &sol) {
    std::vector<Edge> edges;
    for (const auto &r : sol.routes) {
        if (r.empty()) continue;
        edges.push_back(make_edge(0, r.front()));
        for (std::size_t k = 0; k + 1 < r.size(); ++k) edges.push_back(make_edge(r[k], r[k + 1]));
        edges.push_back(make_edge(r.back(), 0));
    }
    return EdgeSet(std::move(edges));
}

inline EdgeSet edge_diff(const Solution &a, const Solution &b) {
    return edge_set(a).symmetric_difference(edge_set(b));
}

inline std::string describe(const Solution &sol) {
    std::ostringstream os;
    for (std::size_t r = 0; r < sol.routes.size(); ++r) {
        os << "route " << r << ":";
        for (int c : sol.routes[r]) os << ' ' << c;
        os << '\n';
    }
    return os.str();
}

/// Instance restricted to the depot and the given customers, renumbered
/// 1..k in the given order. `original[k]` maps back to the source index.
struct SubInstance {
    Instance instance;
    std::vector<int> original;
};

inline SubInstance sub_instance(const Instance &inst, const std::vector<int> &customers) {
    SubInstance sub;
    sub.instance.id = inst.id;
    sub.instance.variant = inst.variant;
    sub.instance.distance_mode = inst.distance_mode;
    sub.instance.capacity = inst.capacity;
    sub.instance.nodes.push_back(inst.nodes[0]);
    sub.original.push_back(0);
    for (int c : customers) {
        if (c <= 0 || c >= inst.size()) throw Error("sub-instance customer out of range: " + std::to_string(c));
        sub.instance.nodes.push_back(inst.nodes[c]);
        sub.original.push_back(c);
    }
    return sub;
}

} // namespace fsta
