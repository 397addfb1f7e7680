#pragma once

// Uniform problem interface the backbone searches over. Both original
// instances and aggregated (reduced) problems are lowered into a
// ProblemView: per-node attributes, possibly asymmetric distances through
// separate arrival/departure anchors, and forced arcs that group nodes into
// blocks which must stay contiguous in every route.

#include <algorithm>
#include <numeric>
#include <span>
#include <vector>

#include "fsta/model.hpp"

namespace fsta {

struct ViewNode {
    Point in;   // anchor used when arriving at the node
    Point out;  // anchor used when leaving the node
    double demand = 0.0;
    double service = 0.0;
    double tw_open = 0.0;
    double tw_close = kInf;
    bool backhaul = false;
    // Sum of the original coordinates this node stands for, and their count.
    Point mass_sum;
    double mass_count = 0.0;
};

/// Ordered pair (from -> to) that must appear consecutively. A reversible
/// arc may also be traversed as to -> from at the same cost.
struct ForcedArc {
    int from = 0;
    int to = 0;
    double cost = 0.0;
    bool reversible = false;
};

/// Maximal forced chain; single nodes without forced arcs are blocks of one.
struct Block {
    std::vector<int> nodes;
    bool reversible = true;
    double internal_cost = 0.0;
    double demand = 0.0;
    int front() const { return nodes.front(); }
    int back() const { return nodes.back(); }
};

class ProblemView {
public:
    static constexpr int kDefaultNeighbors = 20;
    static constexpr int kNeighborThreshold = 200;
    static constexpr int kMatrixLimit = 2000;

    ProblemView() = default;

    ProblemView(Variant variant, DistanceMode mode, double capacity, std::vector<ViewNode> nodes,
                std::vector<ForcedArc> forced, int neighbor_k = kDefaultNeighbors)
        : variant_(variant), mode_(mode), capacity_(capacity), nodes_(std::move(nodes)), forced_(std::move(forced)) {
        const int n = size();
        succ_.assign(n, -1);
        pred_.assign(n, -1);
        arc_cost_.assign(n, 0.0);
        arc_rev_.assign(n, 0);
        for (const auto &a : forced_) {
            if (a.from <= 0 || a.to <= 0 || a.from >= n || a.to >= n || a.from == a.to)
                throw Error("forced arc with invalid endpoints");
            if (succ_[a.from] != -1 || pred_[a.to] != -1)
                throw Error("forced arcs must form vertex-disjoint paths");
            succ_[a.from] = a.to;
            pred_[a.to] = a.from;
            arc_cost_[a.from] = a.cost;
            arc_rev_[a.from] = a.reversible ? 1 : 0;
        }
        symmetric_ = true;
        for (const auto &v : nodes_)
            if (!(v.in == v.out)) symmetric_ = false;
        for (const auto &a : forced_)
            if (!a.reversible) symmetric_ = false;

        if (n <= kMatrixLimit) {
            matrix_.resize(static_cast<std::size_t>(n) * n);
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j)
                    matrix_[static_cast<std::size_t>(i) * n + j] =
                        i == j ? 0.0 : point_distance(nodes_[i].out, nodes_[j].in, mode_);
        }
        build_blocks();
        if (n - 1 > kNeighborThreshold) build_neighbors(neighbor_k);
    }

    static ProblemView of(const Instance &inst, int neighbor_k = kDefaultNeighbors) {
        std::vector<ViewNode> nodes;
        nodes.reserve(inst.nodes.size());
        for (const auto &n : inst.nodes) {
            ViewNode v;
            v.in = v.out = n.point();
            v.demand = n.demand;
            v.service = n.service_time;
            v.tw_open = n.tw_open;
            v.tw_close = n.tw_close;
            v.backhaul = n.is_backhaul;
            v.mass_sum = n.point();
            v.mass_count = 1.0;
            nodes.push_back(v);
        }
        nodes[0].mass_count = 0.0;
        return ProblemView(inst.variant, inst.distance_mode, inst.capacity, std::move(nodes), {}, neighbor_k);
    }

    int size() const { return static_cast<int>(nodes_.size()); }
    int customers() const { return size() - 1; }
    Variant variant() const { return variant_; }
    DistanceMode mode() const { return mode_; }
    double capacity() const { return capacity_; }
    bool symmetric() const { return symmetric_; }
    double tolerance() const { return mode_ == DistanceMode::RoundedInt ? 0.0 : kEps; }
    const ViewNode &node(int i) const { return nodes_[i]; }
    const std::vector<ForcedArc> &forced_arcs() const { return forced_; }
    int forced_succ(int i) const { return succ_[i]; }
    int forced_pred(int i) const { return pred_[i]; }

    double dist(int i, int j) const {
        if (i == j) return 0.0;
        if (succ_[i] == j) return arc_cost_[i];
        if (succ_[j] == i && arc_rev_[j]) return arc_cost_[j];
        if (!matrix_.empty()) return matrix_[static_cast<std::size_t>(i) * size() + j];
        return point_distance(nodes_[i].out, nodes_[j].in, mode_);
    }

    int block_count() const { return static_cast<int>(blocks_.size()); }
    const Block &block(int b) const { return blocks_[b]; }
    int block_of(int node) const { return block_of_[node]; }

    /// Nearest-node candidate list; empty when every node is a candidate.
    const std::vector<int> &neighbors(int node) const {
        static const std::vector<int> none;
        return neighbors_.empty() ? none : neighbors_[node];
    }
    bool has_neighbor_lists() const { return !neighbors_.empty(); }

    double route_cost(std::span<const int> route) const {
        if (route.empty()) return 0.0;
        double c = dist(0, route.front());
        for (std::size_t k = 0; k + 1 < route.size(); ++k) c += dist(route[k], route[k + 1]);
        return c + dist(route.back(), 0);
    }

    double solution_cost(const Solution &s) const {
        double c = 0.0;
        for (const auto &r : s.routes) c += route_cost(r);
        return c;
    }

    /// Service start times along a route leaving the depot at time 0.
    std::vector<double> schedule(std::span<const int> route) const {
        std::vector<double> starts;
        starts.reserve(route.size());
        double t = 0.0;
        int prev = 0;
        for (int c : route) {
            t = std::max(t + dist(prev, c), nodes_[c].tw_open);
            starts.push_back(t);
            t += nodes_[c].service;
            prev = c;
        }
        return starts;
    }

    /// Variant side constraints only; forced arcs are not inspected.
    bool route_variant_feasible(std::span<const int> route) const {
        const double eps = tolerance();
        switch (variant_) {
        case Variant::CVRP: {
            double load = 0.0;
            for (int c : route) load += nodes_[c].demand;
            return load <= capacity_ + eps;
        }
        case Variant::VRPTW: {
            double load = 0.0, t = 0.0;
            int prev = 0;
            for (int c : route) {
                const ViewNode &v = nodes_[c];
                load += v.demand;
                t = std::max(t + dist(prev, c), v.tw_open);
                if (t > v.tw_close + eps) return false;
                t += v.service;
                prev = c;
            }
            return load <= capacity_ + eps;
        }
        case Variant::VRPB: {
            double line = 0.0, back = 0.0;
            bool in_back = false;
            for (int c : route) {
                if (nodes_[c].backhaul) {
                    in_back = true;
                    back += nodes_[c].demand;
                } else {
                    if (in_back) return false;
                    line += nodes_[c].demand;
                }
            }
            return line <= capacity_ + eps && back <= capacity_ + eps;
        }
        case Variant::OnePDP: {
            double prefix = 0.0, lo = 0.0, hi = 0.0;
            for (int c : route) {
                prefix += nodes_[c].demand;
                lo = std::min(lo, prefix);
                hi = std::max(hi, prefix);
            }
            return hi - lo <= capacity_ + eps;
        }
        }
        return false;
    }

    bool route_respects_forced(std::span<const int> route) const {
        for (std::size_t k = 0; k < route.size(); ++k) {
            const int u = route[k];
            const int v = succ_[u];
            if (v == -1) continue;
            const bool fwd = k + 1 < route.size() && route[k + 1] == v;
            const bool bwd = arc_rev_[u] && k > 0 && route[k - 1] == v;
            if (!fwd && !bwd) return false;
        }
        return true;
    }

    bool route_feasible(std::span<const int> route) const {
        return route_respects_forced(route) && route_variant_feasible(route);
    }

    /// Coverage, forced arcs and variant constraints.
    bool solution_feasible(const Solution &s) const {
        std::vector<char> seen(size(), 0);
        for (const auto &r : s.routes) {
            if (r.empty()) return false;
            for (int c : r) {
                if (c <= 0 || c >= size() || seen[c]) return false;
                seen[c] = 1;
            }
            if (!route_feasible(r)) return false;
        }
        for (int c = 1; c < size(); ++c)
            if (!seen[c]) return false;
        return true;
    }

    Point route_centroid(std::span<const int> route) const {
        double sx = 0.0, sy = 0.0, cnt = 0.0;
        for (int c : route) {
            sx += nodes_[c].mass_sum.x;
            sy += nodes_[c].mass_sum.y;
            cnt += nodes_[c].mass_count;
        }
        if (cnt <= 0.0) return nodes_[0].in;
        return {sx / cnt, sy / cnt};
    }

private:
    void build_blocks() {
        const int n = size();
        block_of_.assign(n, -1);
        for (int i = 1; i < n; ++i) {
            if (pred_[i] != -1) continue;
            Block b;
            b.reversible = true;
            for (int u = i; u != -1; u = succ_[u]) {
                if (block_of_[u] != -1) throw Error("forced arcs contain a cycle");
                block_of_[u] = static_cast<int>(blocks_.size());
                b.nodes.push_back(u);
                b.demand += nodes_[u].demand;
                if (succ_[u] != -1) {
                    b.internal_cost += arc_cost_[u];
                    if (!arc_rev_[u]) b.reversible = false;
                }
            }
            blocks_.push_back(std::move(b));
        }
        for (int i = 1; i < n; ++i)
            if (block_of_[i] == -1) throw Error("forced arcs contain a cycle");
    }

    void build_neighbors(int k) {
        const int n = size();
        neighbors_.assign(n, {});
        std::vector<std::pair<double, int>> cand;
        for (int i = 1; i < n; ++i) {
            cand.clear();
            for (int j = 1; j < n; ++j)
                if (j != i) cand.emplace_back(std::min(dist(i, j), dist(j, i)), j);
            const int take = std::min<int>(k, static_cast<int>(cand.size()));
            std::partial_sort(cand.begin(), cand.begin() + take, cand.end());
            for (int t = 0; t < take; ++t) neighbors_[i].push_back(cand[t].second);
        }
    }

    Variant variant_ = Variant::CVRP;
    DistanceMode mode_ = DistanceMode::EuclideanF64;
    double capacity_ = 0.0;
    std::vector<ViewNode> nodes_;
    std::vector<ForcedArc> forced_;
    std::vector<int> succ_, pred_;
    std::vector<double> arc_cost_;
    std::vector<char> arc_rev_;
    bool symmetric_ = true;
    std::vector<double> matrix_;
    std::vector<Block> blocks_;
    std::vector<int> block_of_;
    std::vector<std::vector<int>> neighbors_;
};

} // namespace fsta
