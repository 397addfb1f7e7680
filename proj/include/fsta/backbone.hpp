#pragma once

// Warm-start local search / LNS backbone. Operates on any ProblemView, so the
// same code re-optimizes original instances, reduced problems and serves as
// the lookahead oracle. Moves act on blocks (forced chains), which keeps every
// forced arc intact by construction.

#include <chrono>
#include <climits>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "fsta/model.hpp"
#include "fsta/problem_view.hpp"
#include "fsta/random.hpp"

#ifdef FSTA_PARANOID_CHECKS
#include <cassert>
#endif

namespace fsta {

struct MoveBudget {
    std::optional<long long> max_moves;
    std::optional<long long> max_millis;
    std::uint64_t seed = 0;

    static MoveBudget moves(long long m, std::uint64_t seed = 0) { return {m, std::nullopt, seed}; }
    static MoveBudget millis(long long ms, std::uint64_t seed = 0) { return {std::nullopt, ms, seed}; }

    void validate() const {
        if (!max_moves && !max_millis) throw Error("move budget needs max_moves or max_millis");
        if ((max_moves && *max_moves < 0) || (max_millis && *max_millis < 0)) throw Error("negative budget");
    }
};

struct TracePoint {
    double elapsed_ms = 0.0;
    double objective = 0.0;
};

struct SearchStats {
    long long moves_applied = 0;
    long long moves_evaluated = 0;
    std::vector<TracePoint> objective_trace;
};

enum class BackboneMode { PlainLs, Lns };

inline BackboneMode backbone_mode_from_string(const std::string &s) {
    if (s == "ls" || s == "plain_ls") return BackboneMode::PlainLs;
    if (s == "lns") return BackboneMode::Lns;
    throw Error("unknown backbone mode '" + s + "'");
}

inline constexpr int kDefaultNeighborhoodRoutes = 3;

class Deadline {
public:
    explicit Deadline(std::optional<long long> millis)
        : start_(std::chrono::steady_clock::now()), millis_(millis) {}
    double elapsed_ms() const {
        return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_).count();
    }
    bool expired() const { return millis_ && elapsed_ms() >= static_cast<double>(*millis_); }
    std::optional<long long> remaining() const {
        if (!millis_) return std::nullopt;
        return std::max<long long>(0, *millis_ - static_cast<long long>(elapsed_ms()));
    }

private:
    std::chrono::steady_clock::time_point start_;
    std::optional<long long> millis_;
};

struct Placed {
    int block = 0;
    bool reversed = false;
};

using BlockSeq = std::vector<Placed>;

/// Working solution of a search run: routes as block sequences with cached
/// per-route load, cost and (VRPTW) service start times.
class SearchState {
public:
    SearchState(const ProblemView &view, const Solution &start) : view_(&view) {
        route_of_.assign(view.block_count(), -1);
        index_of_.assign(view.block_count(), -1);
        for (const auto &route : start.routes) {
            BlockSeq seq;
            std::size_t k = 0;
            while (k < route.size()) {
                const int u = route[k];
                if (u <= 0 || u >= view.size()) throw Error("start solution has invalid node");
                const int b = view.block_of(u);
                const Block &blk = view.block(b);
                const std::size_t len = blk.nodes.size();
                if (k + len > route.size()) throw Error("start solution breaks a forced arc");
                bool fwd = true, bwd = blk.reversible;
                for (std::size_t t = 0; t < len; ++t) {
                    fwd = fwd && route[k + t] == blk.nodes[t];
                    bwd = bwd && route[k + t] == blk.nodes[len - 1 - t];
                }
                if (!fwd && !bwd) throw Error("start solution breaks a forced arc");
                if (route_of_[b] != -1) throw Error("start solution visits a node twice");
                route_of_[b] = -2;
                seq.push_back({b, !fwd});
                k += len;
            }
            if (seq.empty()) continue;
            if (!seq_feasible(seq)) throw Error("infeasible start solution");
            add_route(std::move(seq));
        }
    }

    const ProblemView &view() const { return *view_; }
    int route_count() const { return static_cast<int>(routes_.size()); }
    const BlockSeq &route(int r) const { return routes_[r]; }
    int route_of(int b) const { return route_of_[b]; }
    int index_of(int b) const { return index_of_[b]; }
    bool present(int b) const { return route_of_[b] >= 0; }
    double route_cost(int r) const { return cost_[r]; }
    double route_load(int r) const { return load_[r]; }
    const std::vector<double> &route_schedule(int r) const { return schedule_[r]; }

    double total() const {
        double t = 0.0;
        for (double c : cost_) t += c;
        return t;
    }

    int entry(Placed p) const {
        const Block &b = view_->block(p.block);
        return p.reversed ? b.back() : b.front();
    }
    int exit(Placed p) const {
        const Block &b = view_->block(p.block);
        return p.reversed ? b.front() : b.back();
    }
    int prev_exit(int r, int i) const { return i == 0 ? 0 : exit(routes_[r][i - 1]); }
    int next_entry(int r, int i) const {
        return i + 1 >= static_cast<int>(routes_[r].size()) ? 0 : entry(routes_[r][i + 1]);
    }
    Placed placed(int b) const { return routes_[route_of_[b]][index_of_[b]]; }

    void expand(const BlockSeq &seq, std::vector<int> &out) const {
        out.clear();
        for (const auto &p : seq) {
            const auto &nodes = view_->block(p.block).nodes;
            if (p.reversed)
                out.insert(out.end(), nodes.rbegin(), nodes.rend());
            else
                out.insert(out.end(), nodes.begin(), nodes.end());
        }
    }

    double seq_cost(const BlockSeq &seq) const {
        if (seq.empty()) return 0.0;
        const ProblemView &v = *view_;
        double c = v.dist(0, entry(seq.front()));
        for (std::size_t k = 0; k < seq.size(); ++k) {
            c += v.block(seq[k].block).internal_cost;
            if (k + 1 < seq.size()) c += v.dist(exit(seq[k]), entry(seq[k + 1]));
        }
        return c + v.dist(exit(seq.back()), 0);
    }

    double seq_load(const BlockSeq &seq) const {
        double l = 0.0;
        for (const auto &p : seq) l += view_->block(p.block).demand;
        return l;
    }

    bool seq_feasible(const BlockSeq &seq) const {
        if (view_->variant() == Variant::CVRP) return seq_load(seq) <= view_->capacity() + view_->tolerance();
        expand(seq, scratch_);
        return view_->route_variant_feasible(scratch_);
    }

    /// Replaces route r; an empty sequence removes the route.
    void set_route(int r, BlockSeq seq) {
        for (const auto &p : routes_[r])
            if (route_of_[p.block] == r) route_of_[p.block] = index_of_[p.block] = -1;
        routes_[r] = std::move(seq);
        refresh(r);
    }

    int add_route(BlockSeq seq) {
        routes_.emplace_back();
        load_.push_back(0.0);
        cost_.push_back(0.0);
        schedule_.emplace_back();
        const int r = route_count() - 1;
        routes_[r] = std::move(seq);
        refresh(r);
        return r;
    }

    void drop_empty_routes() {
        int w = 0;
        for (int r = 0; r < route_count(); ++r) {
            if (routes_[r].empty()) continue;
            if (w != r) {
                routes_[w] = std::move(routes_[r]);
                load_[w] = load_[r];
                cost_[w] = cost_[r];
                schedule_[w] = std::move(schedule_[r]);
                for (const auto &p : routes_[w]) route_of_[p.block] = w;
            }
            ++w;
        }
        routes_.resize(w);
        load_.resize(w);
        cost_.resize(w);
        schedule_.resize(w);
    }

    Solution to_solution() const {
        Solution s;
        std::vector<int> nodes;
        for (const auto &seq : routes_) {
            if (seq.empty()) continue;
            expand(seq, nodes);
            s.routes.push_back(nodes);
        }
        return s;
    }

    /// Blocks present in the state, in route order.
    std::vector<int> present_blocks() const {
        std::vector<int> out;
        for (const auto &seq : routes_)
            for (const auto &p : seq) out.push_back(p.block);
        return out;
    }

    /// Endpoint proximity between two blocks, used for candidate ordering.
    double proximity(int a, int b) const {
        const Block &x = view_->block(a);
        const Block &y = view_->block(b);
        const int xe[2] = {x.front(), x.back()};
        const int ye[2] = {y.front(), y.back()};
        double best = kInf;
        for (int i : xe)
            for (int j : ye) best = std::min({best, view_->dist(i, j), view_->dist(j, i)});
        return best;
    }

private:
    void refresh(int r) {
        for (int i = 0; i < static_cast<int>(routes_[r].size()); ++i) {
            route_of_[routes_[r][i].block] = r;
            index_of_[routes_[r][i].block] = i;
        }
        load_[r] = seq_load(routes_[r]);
        cost_[r] = seq_cost(routes_[r]);
        if (view_->variant() == Variant::VRPTW) {
            expand(routes_[r], scratch_);
            schedule_[r] = view_->schedule(scratch_);
        }
#ifdef FSTA_PARANOID_CHECKS
        expand(routes_[r], scratch_);
        assert(view_->route_feasible(scratch_));
#endif
    }

    const ProblemView *view_;
    std::vector<BlockSeq> routes_;
    std::vector<int> route_of_, index_of_;
    std::vector<double> load_, cost_;
    std::vector<std::vector<double>> schedule_;
    mutable std::vector<int> scratch_;
};

namespace detail {

inline constexpr double kImproveThreshold = 1e-10;

/// First-improvement local search with operator round-robin over
/// relocate, swap, intra-route 2-opt and inter-route 2-opt*.
class LocalSearchEngine {
public:
    LocalSearchEngine(SearchState &st, Rng &rng, long long move_limit, const Deadline &deadline, SearchStats &stats)
        : st_(st), v_(st.view()), rng_(rng), move_limit_(move_limit), deadline_(deadline), stats_(stats) {
        blocks_ = st_.present_blocks();
        std::shuffle(blocks_.begin(), blocks_.end(), rng_);
        build_candidates();
    }

    void run() {
        if (move_limit_ <= 0) return;
        const Op ops[] = {Op::Relocate, Op::Swap, Op::TwoOpt, Op::TwoOptStar};
        while (!stopped()) {
            bool any = false;
            for (Op op : ops) {
                if (stopped()) break;
                if (scan(op)) {
                    any = true;
                    ++stats_.moves_applied;
                    --move_limit_;
                    stats_.objective_trace.push_back({deadline_.elapsed_ms(), st_.total()});
                }
            }
            if (!any) break;
        }
    }

    long long moves_left() const { return move_limit_; }

private:
    enum class Op { Relocate, Swap, TwoOpt, TwoOptStar };

    bool stopped() {
        if (move_limit_ <= 0) return true;
        if (timed_out_) return true;
        if ((++tick_ & 63) == 0 && deadline_.expired()) timed_out_ = true;
        return timed_out_;
    }

    void build_candidates() {
        const int nb = v_.block_count();
        candidates_.assign(nb, {});
        if (v_.has_neighbor_lists()) {
            for (int b : blocks_) {
                std::vector<int> c;
                const Block &blk = v_.block(b);
                for (int end : {blk.front(), blk.back()})
                    for (int nn : v_.neighbors(end)) {
                        const int ob = v_.block_of(nn);
                        if (ob != b && st_.present(ob)) c.push_back(ob);
                    }
                std::sort(c.begin(), c.end());
                c.erase(std::unique(c.begin(), c.end()), c.end());
                sort_by_proximity(b, c);
                candidates_[b] = std::move(c);
            }
        } else {
            for (int b : blocks_) {
                std::vector<int> c;
                for (int o : blocks_)
                    if (o != b) c.push_back(o);
                std::sort(c.begin(), c.end());
                sort_by_proximity(b, c);
                candidates_[b] = std::move(c);
            }
        }
    }

    void sort_by_proximity(int b, std::vector<int> &c) const {
        std::vector<std::pair<double, int>> keyed;
        keyed.reserve(c.size());
        for (int o : c) keyed.emplace_back(st_.proximity(b, o), o);
        std::stable_sort(keyed.begin(), keyed.end());
        for (std::size_t k = 0; k < c.size(); ++k) c[k] = keyed[k].second;
    }

    bool scan(Op op) {
        const int nb = static_cast<int>(blocks_.size());
        if (nb == 0) return false;
        int &cursor = cursor_[static_cast<int>(op)];
        for (int step = 0; step < nb; ++step) {
            if (stopped()) return false;
            const int u = blocks_[(cursor + step) % nb];
            bool done = false;
            switch (op) {
            case Op::Relocate: done = relocate(u); break;
            case Op::Swap: done = swap(u); break;
            case Op::TwoOpt: done = two_opt(u); break;
            case Op::TwoOptStar: done = two_opt_star(u); break;
            }
            if (done) {
                cursor = (cursor + step) % nb;
                return true;
            }
        }
        return false;
    }

    double d(int a, int b) const { return v_.dist(a, b); }

    static Placed flip(Placed p) { return {p.block, !p.reversed}; }

    bool can_flip(int b) const {
        const Block &blk = v_.block(b);
        return blk.reversible && blk.nodes.size() > 1;
    }

    bool commit(int r, BlockSeq seq_r, int t, BlockSeq seq_t) {
        if (!st_.seq_feasible(seq_r)) return false;
        if (t >= 0 && !st_.seq_feasible(seq_t)) return false;
        st_.set_route(r, std::move(seq_r));
        if (t >= 0) st_.set_route(t, std::move(seq_t));
        st_.drop_empty_routes();
        return true;
    }

    bool improves(double delta) {
        ++stats_.moves_evaluated;
        return delta < -kImproveThreshold;
    }

    bool relocate(int u) {
        const int r = st_.route_of(u), i = st_.index_of(u);
        const Placed pu = st_.placed(u);
        const int pe = st_.prev_exit(r, i), ne = st_.next_entry(r, i);
        const double removal = d(pe, ne) - d(pe, st_.entry(pu)) - d(st_.exit(pu), ne);
        const int route_len = static_cast<int>(st_.route(r).size());

        auto orientations = [&](Placed p) {
            std::vector<Placed> o{p};
            if (can_flip(p.block)) o.push_back(flip(p));
            return o;
        };

        // Move into a fresh route.
        if (route_len > 1) {
            for (Placed o : orientations(pu)) {
                const double delta = removal + d(0, st_.entry(o)) + d(st_.exit(o), 0);
                if (!improves(delta)) continue;
                BlockSeq from = st_.route(r);
                from.erase(from.begin() + i);
                if (!st_.seq_feasible(from) || !st_.seq_feasible({o})) continue;
                st_.set_route(r, std::move(from));
                st_.add_route({o});
                return true;
            }
        }

        for (int v : candidates_[u]) {
            const int t = st_.route_of(v), j = st_.index_of(v);
            for (int before = 0; before < 2; ++before) {
                const int pos = before ? j : j + 1;  // insertion index in route t
                if (t == r) {
                    if (pos == i || pos == i + 1) continue;
                    for (Placed o : orientations(pu)) {
                        BlockSeq seq = st_.route(r);
                        seq.erase(seq.begin() + i);
                        seq.insert(seq.begin() + (pos > i ? pos - 1 : pos), o);
                        const double delta = st_.seq_cost(seq) - st_.route_cost(r);
                        if (!improves(delta)) continue;
                        if (commit(r, std::move(seq), -1, {})) return true;
                    }
                    continue;
                }
                const int a = pos == 0 ? 0 : st_.exit(st_.route(t)[pos - 1]);
                const int b = pos == static_cast<int>(st_.route(t).size()) ? 0 : st_.entry(st_.route(t)[pos]);
                for (Placed o : orientations(pu)) {
                    const double delta = removal + d(a, st_.entry(o)) + d(st_.exit(o), b) - d(a, b);
                    if (!improves(delta)) continue;
                    BlockSeq from = st_.route(r);
                    from.erase(from.begin() + i);
                    BlockSeq to = st_.route(t);
                    to.insert(to.begin() + pos, o);
                    if (commit(r, std::move(from), t, std::move(to))) return true;
                }
            }
        }
        return false;
    }

    bool swap(int u) {
        const int r = st_.route_of(u), i = st_.index_of(u);
        const Placed pu = st_.placed(u);
        for (int v : candidates_[u]) {
            const int t = st_.route_of(v), j = st_.index_of(v);
            const Placed pv = st_.placed(v);
            if (t == r) {
                if (std::abs(i - j) < 1) continue;
                BlockSeq seq = st_.route(r);
                std::swap(seq[i], seq[j]);
                const double delta = st_.seq_cost(seq) - st_.route_cost(r);
                if (!improves(delta)) continue;
                if (commit(r, std::move(seq), -1, {})) return true;
                continue;
            }
            const int peu = st_.prev_exit(r, i), neu = st_.next_entry(r, i);
            const int pev = st_.prev_exit(t, j), nev = st_.next_entry(t, j);
            const double delta = d(peu, st_.entry(pv)) + d(st_.exit(pv), neu) - d(peu, st_.entry(pu)) -
                                 d(st_.exit(pu), neu) + d(pev, st_.entry(pu)) + d(st_.exit(pu), nev) -
                                 d(pev, st_.entry(pv)) - d(st_.exit(pv), nev);
            if (!improves(delta)) continue;
            BlockSeq sr = st_.route(r), stt = st_.route(t);
            sr[i] = pv;
            stt[j] = pu;
            if (commit(r, std::move(sr), t, std::move(stt))) return true;
        }
        return false;
    }

    bool reversal_allowed(const BlockSeq &seq, int x, int y) const {
        for (int k = x; k <= y; ++k)
            if (!v_.block(seq[k].block).reversible) return false;
        return true;
    }

    bool two_opt(int u) {
        const int r = st_.route_of(u), i = st_.index_of(u);
        for (int v : candidates_[u]) {
            if (st_.route_of(v) != r) continue;
            const int j = st_.index_of(v);
            const int lo = std::min(i, j), hi = std::max(i, j);
            const std::pair<int, int> ranges[] = {{lo + 1, hi}, {lo, hi - 1}};
            for (auto [x, y] : ranges) {
                if (x > y) continue;
                const BlockSeq &cur = st_.route(r);
                if (x == y && !can_flip(cur[x].block)) continue;
                double delta;
                if (v_.symmetric()) {
                    const int pe = st_.prev_exit(r, x), ne = st_.next_entry(r, y);
                    delta = d(pe, st_.exit(cur[y])) + d(st_.entry(cur[x]), ne) - d(pe, st_.entry(cur[x])) -
                            d(st_.exit(cur[y]), ne);
                } else {
                    BlockSeq seq = cur;
                    std::reverse(seq.begin() + x, seq.begin() + y + 1);
                    for (int k = x; k <= y; ++k) seq[k] = flip(seq[k]);
                    delta = st_.seq_cost(seq) - st_.route_cost(r);
                }
                if (!improves(delta)) continue;
                if (!reversal_allowed(cur, x, y)) continue;
                BlockSeq seq = cur;
                std::reverse(seq.begin() + x, seq.begin() + y + 1);
                for (int k = x; k <= y; ++k) seq[k] = flip(seq[k]);
                if (commit(r, std::move(seq), -1, {})) return true;
            }
        }
        return false;
    }

    bool two_opt_star(int u) {
        const int r = st_.route_of(u), i = st_.index_of(u);
        for (int v : candidates_[u]) {
            const int t = st_.route_of(v);
            if (t == r) continue;
            const int j = st_.index_of(v);
            const BlockSeq &A = st_.route(r);
            const BlockSeq &B = st_.route(t);
            // Tails after u and v exchanged: u -> succ(v), v -> succ(u).
            {
                const int eu = st_.exit(A[i]), ev = st_.exit(B[j]);
                const int nu = st_.next_entry(r, i), nv = st_.next_entry(t, j);
                const double delta = d(eu, nv) + d(ev, nu) - d(eu, nu) - d(ev, nv);
                if (improves(delta)) {
                    BlockSeq a2(A.begin(), A.begin() + i + 1), b2(B.begin(), B.begin() + j + 1);
                    a2.insert(a2.end(), B.begin() + j + 1, B.end());
                    b2.insert(b2.end(), A.begin() + i + 1, A.end());
                    if (commit(r, std::move(a2), t, std::move(b2))) return true;
                }
            }
            // Heads before u and v exchanged: pred(u) -> v, pred(v) -> u.
            {
                const int pu = st_.prev_exit(r, i), pv = st_.prev_exit(t, j);
                const int eu = st_.entry(A[i]), ev = st_.entry(B[j]);
                const double delta = d(pu, ev) + d(pv, eu) - d(pu, eu) - d(pv, ev);
                if (improves(delta)) {
                    BlockSeq a2(A.begin(), A.begin() + i), b2(B.begin(), B.begin() + j);
                    a2.insert(a2.end(), B.begin() + j, B.end());
                    b2.insert(b2.end(), A.begin() + i, A.end());
                    if (commit(r, std::move(a2), t, std::move(b2))) return true;
                }
            }
        }
        return false;
    }

    SearchState &st_;
    const ProblemView &v_;
    Rng &rng_;
    long long move_limit_;
    const Deadline &deadline_;
    SearchStats &stats_;
    std::vector<int> blocks_;
    std::vector<std::vector<int>> candidates_;
    int cursor_[4] = {0, 0, 0, 0};
    unsigned tick_ = 0;
    bool timed_out_ = false;
};

/// Cheapest feasible insertion of a block, opening a new route if needed.
inline bool insert_cheapest(SearchState &st, int b) {
    const ProblemView &v = st.view();
    struct Option {
        double delta;
        int route;
        int pos;
        Placed placed;
    };
    std::vector<Option> options;
    std::vector<Placed> orients{{b, false}};
    if (v.block(b).reversible && v.block(b).nodes.size() > 1) orients.push_back({b, true});
    for (int r = 0; r < st.route_count(); ++r) {
        const BlockSeq &seq = st.route(r);
        for (int p = 0; p <= static_cast<int>(seq.size()); ++p) {
            const int a = p == 0 ? 0 : st.exit(seq[p - 1]);
            const int c = p == static_cast<int>(seq.size()) ? 0 : st.entry(seq[p]);
            for (Placed o : orients)
                options.push_back({v.dist(a, st.entry(o)) + v.dist(st.exit(o), c) - v.dist(a, c), r, p, o});
        }
    }
    for (Placed o : orients) options.push_back({v.dist(0, st.entry(o)) + v.dist(st.exit(o), 0), -1, 0, o});
    std::stable_sort(options.begin(), options.end(),
                     [](const Option &x, const Option &y) { return x.delta < y.delta; });
    for (const auto &opt : options) {
        if (opt.route < 0) {
            BlockSeq seq{opt.placed};
            if (!st.seq_feasible(seq)) continue;
            st.add_route(std::move(seq));
            return true;
        }
        BlockSeq seq = st.route(opt.route);
        seq.insert(seq.begin() + opt.pos, opt.placed);
        if (!st.seq_feasible(seq)) continue;
        st.set_route(opt.route, std::move(seq));
        return true;
    }
    return false;
}

inline long long move_limit(const MoveBudget &b) { return b.max_moves ? *b.max_moves : LLONG_MAX; }

} // namespace detail

inline std::pair<Solution, SearchStats> local_search(const ProblemView &view, const Solution &start,
                                                     const MoveBudget &budget) {
    budget.validate();
    Deadline deadline(budget.max_millis);
    SearchState st(view, start);
    SearchStats stats;
    stats.objective_trace.push_back({0.0, st.total()});
    Rng rng(budget.seed);
    detail::LocalSearchEngine engine(st, rng, detail::move_limit(budget), deadline, stats);
    engine.run();
    if (stats.moves_applied == 0) return {start, stats};
    return {st.to_solution(), stats};
}

/// Indices of the routes an LNS step works on: a random route and its
/// nearest routes by centroid distance.
inline std::vector<int> select_neighborhood(const ProblemView &view, const Solution &sol, int neighborhood_routes,
                                            Rng &rng) {
    const int m = static_cast<int>(sol.routes.size());
    std::vector<int> picked;
    if (m <= neighborhood_routes) {
        for (int r = 0; r < m; ++r) picked.push_back(r);
        return picked;
    }
    // Seed route drawn proportionally to its free adjacencies (block
    // boundaries); routes that are a single forced chain cannot change inside.
    std::vector<double> weight(m, 0.0);
    double total = 0.0;
    for (int r = 0; r < m; ++r) {
        const Route &route = sol.routes[r];
        for (std::size_t k = 0; k + 1 < route.size(); ++k)
            if (view.block_of(route[k]) != view.block_of(route[k + 1])) weight[r] += 1.0;
        total += weight[r];
    }
    int seed_route = m - 1;
    if (total <= 0.0) {
        seed_route = uniform_int(rng, 0, m - 1);
    } else {
        double x = uniform01(rng) * total;
        for (int r = 0; r < m; ++r) {
            if (x < weight[r]) {
                seed_route = r;
                break;
            }
            x -= weight[r];
        }
    }
    std::vector<Point> centroids;
    for (const auto &r : sol.routes) centroids.push_back(view.route_centroid(r));
    std::vector<std::pair<double, int>> byd;
    for (int r = 0; r < m; ++r)
        if (r != seed_route)
            byd.emplace_back(std::hypot(centroids[r].x - centroids[seed_route].x,
                                        centroids[r].y - centroids[seed_route].y),
                             r);
    std::sort(byd.begin(), byd.end());
    picked.push_back(seed_route);
    for (int k = 0; k + 1 < neighborhood_routes; ++k) picked.push_back(byd[k].second);
    std::sort(picked.begin(), picked.end());
    return picked;
}

/// One ruin-and-recreate step on a neighborhood of routes followed by local
/// search on those routes; accepted only if it improves.
inline std::pair<Solution, SearchStats> lns_step(const ProblemView &view, const Solution &start,
                                                 int neighborhood_routes, const MoveBudget &budget) {
    budget.validate();
    SearchStats stats;
    Deadline deadline(budget.max_millis);
    const double start_cost = view.solution_cost(start);
    stats.objective_trace.push_back({0.0, start_cost});
    if (start.routes.empty() || detail::move_limit(budget) <= 0) return {start, stats};
    if (neighborhood_routes < 1) throw Error("neighborhood_routes must be >= 1");

    Rng rng(budget.seed);
    const std::vector<int> picked = select_neighborhood(view, start, neighborhood_routes, rng);
    Solution sub;
    for (int r : picked) sub.routes.push_back(start.routes[r]);
    SearchState st(view, sub);
    const double before = st.total();

    std::vector<int> blocks = st.present_blocks();
    const int nb = static_cast<int>(blocks.size());
    const int q = uniform_int(rng, 1, std::max(1, (nb + 2) / 3));
    // Short blocks carry more free adjacencies per node; favour them as seeds.
    double wsum = 0.0;
    for (int b : blocks) wsum += 1.0 / static_cast<double>(view.block(b).nodes.size());
    int seed_block = blocks.back();
    double x = uniform01(rng) * wsum;
    for (int b : blocks) {
        const double w = 1.0 / static_cast<double>(view.block(b).nodes.size());
        if (x < w) {
            seed_block = b;
            break;
        }
        x -= w;
    }
    std::vector<std::pair<double, int>> near;
    for (int b : blocks) near.emplace_back(b == seed_block ? -1.0 : st.proximity(seed_block, b), b);
    std::stable_sort(near.begin(), near.end());
    std::vector<int> removed;
    for (int k = 0; k < q; ++k) removed.push_back(near[k].second);
    std::shuffle(removed.begin(), removed.end(), rng);

    for (int b : removed) {
        const int r = st.route_of(b);
        BlockSeq seq = st.route(r);
        seq.erase(seq.begin() + st.index_of(b));
        st.set_route(r, std::move(seq));
    }
    for (int r = 0; r < st.route_count(); ++r)
        if (!st.seq_feasible(st.route(r))) return {start, stats};
    st.drop_empty_routes();
    for (int b : removed)
        if (!detail::insert_cheapest(st, b)) return {start, stats};
    ++stats.moves_applied;

    detail::LocalSearchEngine engine(st, rng, detail::move_limit(budget) - 1, deadline, stats);
    engine.run();

    if (!(st.total() < before - detail::kImproveThreshold)) {
        stats.objective_trace.resize(1);
        return {start, stats};
    }
    Solution improved = st.to_solution();
    Solution out;
    std::size_t next = 0;
    for (int r = 0; r < static_cast<int>(start.routes.size()); ++r) {
        if (std::binary_search(picked.begin(), picked.end(), r)) {
            if (next < improved.routes.size()) out.routes.push_back(improved.routes[next++]);
        } else {
            out.routes.push_back(start.routes[r]);
        }
    }
    while (next < improved.routes.size()) out.routes.push_back(improved.routes[next++]);
    stats.objective_trace.resize(1);
    stats.objective_trace.push_back({deadline.elapsed_ms(), view.solution_cost(out)});
    return {out, stats};
}

/// Budgeted warm-start re-optimization. In LNS mode every step consumes one
/// unit of the move budget in addition to the local-search moves it applies.
inline std::pair<Solution, SearchStats> solve_warm(const ProblemView &view, const Solution &start,
                                                   const MoveBudget &budget, BackboneMode mode,
                                                   int neighborhood_routes = kDefaultNeighborhoodRoutes) {
    budget.validate();
    if (mode == BackboneMode::PlainLs) return local_search(view, start, budget);

    Deadline deadline(budget.max_millis);
    SearchStats stats;
    Solution current = start;
    double cost = view.solution_cost(current);
    stats.objective_trace.push_back({0.0, cost});
    long long used = 0;
    const long long limit = detail::move_limit(budget);
    for (std::uint64_t step = 0; used < limit && !deadline.expired(); ++step) {
        MoveBudget sub{limit - used, deadline.remaining(), derive_seed(budget.seed, step)};
        auto [next, st] = lns_step(view, current, neighborhood_routes, sub);
        used += std::max<long long>(1, st.moves_applied);
        stats.moves_applied += st.moves_applied;
        stats.moves_evaluated += st.moves_evaluated;
        if (st.objective_trace.size() > 1) {
            current = std::move(next);
            cost = st.objective_trace.back().objective;
            stats.objective_trace.push_back({deadline.elapsed_ms(), cost});
        }
    }
    return {current, stats};
}

} // namespace fsta
