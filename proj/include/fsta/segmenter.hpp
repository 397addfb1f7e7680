#pragma once

// Unstable-edge detection policies and scoring against the lookahead oracle.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include "fsta/backbone.hpp"
#include "fsta/gen_io.hpp"
#include "fsta/model.hpp"
#include "fsta/problem_view.hpp"
#include "fsta/random.hpp"

namespace fsta {

struct RandomPolicy {
    double fraction = 0.4;
    std::uint64_t seed = 0;
};

struct GeometricPolicy {
    int k_nn = 15;
    double internality_threshold = 0.8;
};

struct OraclePolicy {
    MoveBudget lookahead = MoveBudget::moves(100);
    BackboneMode mode = BackboneMode::Lns;
};

struct ExternalPolicy {
    enum class Mode { File, Subprocess };
    Mode mode = Mode::File;
    /// File path (an "{iter}" placeholder is replaced by the iteration) or
    /// shell command.
    std::string target;
    int timeout_ms = 30000;
};

using SegmenterPolicy = std::variant<RandomPolicy, GeometricPolicy, OraclePolicy, ExternalPolicy>;

/// Parses random:F | geometric:K:T | oracle:M | external-file:PATH | external-cmd:CMD.
inline SegmenterPolicy parse_policy(const std::string &text, BackboneMode oracle_mode = BackboneMode::Lns,
                                    std::uint64_t seed = 0) {
    const auto colon = text.find(':');
    const std::string kind = text.substr(0, colon);
    const std::string rest = colon == std::string::npos ? "" : text.substr(colon + 1);
    auto bad = [&]() { return Error("invalid segmenter spec '" + text + "'"); };
    if (kind == "random") {
        const auto f = parse_number(rest);
        if (!f || !(*f > 0.0) || *f > 1.0) throw bad();
        return RandomPolicy{*f, seed};
    }
    if (kind == "geometric") {
        GeometricPolicy g;
        if (!rest.empty()) {
            const auto c2 = rest.find(':');
            const auto k = parse_integer(rest.substr(0, c2));
            if (!k || *k < 1) throw bad();
            g.k_nn = static_cast<int>(*k);
            if (c2 != std::string::npos) {
                const auto t = parse_number(rest.substr(c2 + 1));
                if (!t) throw bad();
                g.internality_threshold = *t;
            }
        }
        return g;
    }
    if (kind == "oracle") {
        const auto m = parse_integer(rest);
        if (!m || *m < 0) throw bad();
        return OraclePolicy{MoveBudget::moves(*m, seed), oracle_mode};
    }
    if (kind == "external-file" && !rest.empty()) return ExternalPolicy{ExternalPolicy::Mode::File, rest};
    if (kind == "external-cmd" && !rest.empty()) {
        std::string cmd = rest;
        if (cmd.size() >= 2 && cmd.front() == '"' && cmd.back() == '"') cmd = cmd.substr(1, cmd.size() - 2);
        return ExternalPolicy{ExternalPolicy::Mode::Subprocess, cmd};
    }
    throw bad();
}

inline std::string describe(const SegmenterPolicy &p) {
    struct V {
        std::string operator()(const RandomPolicy &r) const { return "random:" + format_number(r.fraction); }
        std::string operator()(const GeometricPolicy &g) const {
            return "geometric:" + std::to_string(g.k_nn) + ":" + format_number(g.internality_threshold);
        }
        std::string operator()(const OraclePolicy &o) const {
            return "oracle:" + (o.lookahead.max_moves ? std::to_string(*o.lookahead.max_moves) : std::string("t"));
        }
        std::string operator()(const ExternalPolicy &e) const {
            return (e.mode == ExternalPolicy::Mode::File ? "external-file:" : "external-cmd:") + e.target;
        }
    };
    return std::visit(V{}, p);
}

// ---------------------------------------------------------------------------
// Policies

/// Every non-depot solution edge independently with probability `fraction`.
inline EdgeSet detect_random(const Solution &sol, double fraction, Rng &rng) {
    EdgeSet out;
    for (const auto &e : edge_set(sol).non_depot_edges())
        if (uniform01(rng) < fraction) out.insert(e.a, e.b);
    return out;
}

/// Fraction of each customer's k nearest customers that share its route.
inline std::vector<double> internality(const Instance &inst, const Solution &sol, int k_nn) {
    std::vector<int> route_of(inst.size(), -1);
    for (std::size_t r = 0; r < sol.routes.size(); ++r)
        for (int c : sol.routes[r]) route_of[c] = static_cast<int>(r);
    std::vector<double> out(inst.size(), 1.0);
    std::vector<std::pair<double, int>> cand;
    for (int i = 1; i < inst.size(); ++i) {
        cand.clear();
        for (int j = 1; j < inst.size(); ++j)
            if (j != i) cand.emplace_back(distance(inst, i, j), j);
        const int take = std::min<int>(k_nn, static_cast<int>(cand.size()));
        if (take == 0) continue;
        std::partial_sort(cand.begin(), cand.begin() + take, cand.end());
        int same = 0;
        for (int t = 0; t < take; ++t) same += route_of[cand[t].second] == route_of[i] ? 1 : 0;
        out[i] = static_cast<double>(same) / take;
    }
    return out;
}

inline EdgeSet detect_geometric(const Instance &inst, const Solution &sol, const GeometricPolicy &p) {
    const auto in = internality(inst, sol, p.k_nn);
    EdgeSet out;
    for (const auto &e : edge_set(sol).non_depot_edges())
        if (in[e.a] < p.internality_threshold || in[e.b] < p.internality_threshold) out.insert(e.a, e.b);
    return out;
}

/// Result of one lookahead: the improved solution and the solution edges
/// it changed (depot edges included).
struct OracleLookahead {
    Solution improved;
    EdgeSet unstable;
};

inline OracleLookahead oracle_lookahead(const ProblemView &view, const Solution &sol, const MoveBudget &budget,
                                        BackboneMode mode) {
    OracleLookahead out;
    out.improved = solve_warm(view, sol, budget, mode).first;
    const EdgeSet edges = edge_set(sol);
    out.unstable = edge_diff(sol, out.improved).intersected(edges).united(edges.depot_edges());
    return out;
}

// ---------------------------------------------------------------------------
// External subprocess protocol

class ChildProcess {
public:
    explicit ChildProcess(const std::string &command) {
        int to_child[2], from_child[2];
        if (pipe(to_child) != 0 || pipe(from_child) != 0) throw Error("segmenter subprocess: pipe failed");
        pid_ = fork();
        if (pid_ < 0) throw Error("segmenter subprocess: fork failed");
        if (pid_ == 0) {
            dup2(to_child[0], STDIN_FILENO);
            dup2(from_child[1], STDOUT_FILENO);
            close(to_child[0]);
            close(to_child[1]);
            close(from_child[0]);
            close(from_child[1]);
            execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char *>(nullptr));
            _exit(127);
        }
        close(to_child[0]);
        close(from_child[1]);
        in_ = to_child[1];
        out_ = from_child[0];
        fcntl(in_, F_SETFD, FD_CLOEXEC);
        fcntl(out_, F_SETFD, FD_CLOEXEC);
    }
    ChildProcess(const ChildProcess &) = delete;
    ChildProcess &operator=(const ChildProcess &) = delete;
    ~ChildProcess() {
        if (in_ >= 0) close(in_);
        if (out_ >= 0) close(out_);
        if (pid_ > 0) {
            int status = 0;
            if (waitpid(pid_, &status, WNOHANG) == 0) {
                kill(pid_, SIGTERM);
                waitpid(pid_, &status, 0);
            }
        }
    }

    void send(const std::string &text) {
        struct sigaction old{};
        struct sigaction act{};
        act.sa_handler = SIG_IGN;
        sigaction(SIGPIPE, &act, &old);
        std::size_t done = 0;
        while (done < text.size()) {
            const ssize_t w = write(in_, text.data() + done, text.size() - done);
            if (w <= 0) {
                sigaction(SIGPIPE, &old, nullptr);
                throw Error("segmenter subprocess: write failed (child exited?)");
            }
            done += static_cast<std::size_t>(w);
        }
        sigaction(SIGPIPE, &old, nullptr);
    }

    /// Next line from the child; throws on timeout or end of stream.
    std::string read_line(int timeout_ms) {
        const auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(timeout_ms);
        for (;;) {
            if (const auto nl = buffer_.find('\n'); nl != std::string::npos) {
                std::string line = buffer_.substr(0, nl);
                buffer_.erase(0, nl + 1);
                if (!line.empty() && line.back() == '\r') line.pop_back();
                return line;
            }
            const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
                                  deadline - std::chrono::steady_clock::now())
                                  .count();
            if (left <= 0) throw Error("segmenter subprocess: timed out waiting for response");
            pollfd pfd{out_, POLLIN, 0};
            const int rc = poll(&pfd, 1, static_cast<int>(left));
            if (rc == 0) throw Error("segmenter subprocess: timed out waiting for response");
            if (rc < 0) throw Error("segmenter subprocess: poll failed");
            char buf[4096];
            const ssize_t n = read(out_, buf, sizeof buf);
            if (n <= 0) throw Error("segmenter subprocess: protocol error: stream closed before DONE");
            buffer_.append(buf, static_cast<std::size_t>(n));
        }
    }

private:
    pid_t pid_ = -1;
    int in_ = -1;
    int out_ = -1;
    std::string buffer_;
};

/// Parses one `unstable <i> <j>` response line.
inline std::pair<int, int> parse_unstable_line(const std::string &line, const Instance &inst) {
    const auto tok = detail::split_ws(line);
    if (tok.size() != 3 || tok[0] != "unstable") throw Error("segmenter protocol error: unexpected line '" + line + "'");
    const auto i = parse_integer(tok[1]), j = parse_integer(tok[2]);
    if (!i || !j || *i < 0 || *j < 0 || *i >= inst.size() || *j >= inst.size() || *i == *j)
        throw Error("segmenter protocol error: invalid node pair in '" + line + "'");
    return {static_cast<int>(*i), static_cast<int>(*j)};
}

// ---------------------------------------------------------------------------
// Detection

struct DetectContext {
    const Instance &instance;
    const Solution &solution;
    const ProblemView *view = nullptr;  // full-problem view; required by Oracle
    int iteration = 0;
    std::optional<std::uint64_t> seed;  // overrides the oracle lookahead seed
};

/// A policy together with its owned state (RNG, subprocess).
class Segmenter {
public:
    explicit Segmenter(SegmenterPolicy policy) : policy_(std::move(policy)) {
        if (const auto *r = std::get_if<RandomPolicy>(&policy_)) {
            if (!(r->fraction > 0.0) || r->fraction > 1.0) throw Error("random fraction must lie in (0,1]");
            rng_.seed(r->seed);
        }
        if (const auto *o = std::get_if<OraclePolicy>(&policy_)) o->lookahead.validate();
    }

    const SegmenterPolicy &policy() const { return policy_; }
    bool is_oracle() const { return std::holds_alternative<OraclePolicy>(policy_); }

    /// Unstable edges: a subset of the solution edges, always including every
    /// depot edge of the solution.
    EdgeSet detect(const DetectContext &ctx) {
        const EdgeSet edges = edge_set(ctx.solution);
        EdgeSet raw;
        if (const auto *r = std::get_if<RandomPolicy>(&policy_)) {
            raw = detect_random(ctx.solution, r->fraction, rng_);
        } else if (const auto *g = std::get_if<GeometricPolicy>(&policy_)) {
            raw = detect_geometric(ctx.instance, ctx.solution, *g);
        } else if (const auto *o = std::get_if<OraclePolicy>(&policy_)) {
            if (!ctx.view) throw Error("oracle segmenter requires a backbone view");
            MoveBudget b = o->lookahead;
            if (ctx.seed) b.seed = *ctx.seed;
            last_lookahead_ = oracle_lookahead(*ctx.view, ctx.solution, b, o->mode);
            raw = last_lookahead_->unstable;
        } else {
            raw = detect_external(std::get<ExternalPolicy>(policy_), ctx);
        }
        return raw.intersected(edges).united(edges.depot_edges());
    }

    /// Improved solution found by the most recent oracle call.
    const std::optional<OracleLookahead> &last_lookahead() const { return last_lookahead_; }

private:
    EdgeSet detect_external(const ExternalPolicy &p, const DetectContext &ctx) {
        if (p.mode == ExternalPolicy::Mode::File) {
            std::string path = p.target;
            if (const auto at = path.find("{iter}"); at != std::string::npos)
                path.replace(at, 6, std::to_string(ctx.iteration));
            std::ifstream in(path);
            if (!in) throw Error("cannot read prediction file " + path);
            std::stringstream ss;
            ss << in.rdbuf();
            return read_prediction(ss.str(), ctx.instance);
        }
        if (!child_) child_ = std::make_unique<ChildProcess>(p.target);
        child_->send("BEGIN " + ctx.instance.id + " " + std::to_string(ctx.iteration) + "\n" +
                     write_solution(ctx.instance, ctx.solution) + "END\n");
        EdgeSet out;
        for (;;) {
            const std::string line = child_->read_line(p.timeout_ms);
            if (line == "DONE") break;
            const auto [i, j] = parse_unstable_line(line, ctx.instance);
            out.insert(i, j);
        }
        return out;
    }

    SegmenterPolicy policy_;
    Rng rng_;
    std::unique_ptr<ChildProcess> child_;
    std::optional<OracleLookahead> last_lookahead_;
};

inline EdgeSet detect(const SegmenterPolicy &policy, const DetectContext &ctx) {
    Segmenter s(policy);
    return s.detect(ctx);
}

// ---------------------------------------------------------------------------
// Scoring

struct SegmenterScore {
    double recall = 1.0;
    double tnr = 1.0;
    int predicted_count = 0;
    int oracle_count = 0;
};

inline SegmenterScore score(const EdgeSet &predicted, const EdgeSet &oracle, const EdgeSet &universe) {
    if (!predicted.is_subset_of(universe)) throw Error("score: predicted set is not a subset of the universe");
    if (!oracle.is_subset_of(universe)) throw Error("score: oracle set is not a subset of the universe");
    SegmenterScore s;
    s.predicted_count = static_cast<int>(predicted.size());
    s.oracle_count = static_cast<int>(oracle.size());
    if (!oracle.empty()) s.recall = static_cast<double>(predicted.intersected(oracle).size()) / oracle.size();
    const EdgeSet stable_oracle = universe.minus(oracle);
    const EdgeSet stable_pred = universe.minus(predicted);
    if (!stable_oracle.empty())
        s.tnr = static_cast<double>(stable_pred.intersected(stable_oracle).size()) / stable_oracle.size();
    return s;
}

} // namespace fsta
