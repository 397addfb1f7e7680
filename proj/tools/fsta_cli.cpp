// Command-line front end: generation, solving, FSTA runs, labels, traces
// and verification.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fsta/driver.hpp"

namespace {

using namespace fsta;

std::string slurp(const std::string &path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot read " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void emit(const std::string &path, const std::string &text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path);
    out << text;
}

struct InstanceOpts {
    std::string instance_path;
    std::string variant = "CVRP";
    int n = 100;
    double capacity = 50;
    std::string demand_model = "uniform_1_9";
    int clusters = 0;
    std::uint64_t seed = 0;
};

void add_instance_opts(CLI::App *app, InstanceOpts &o) {
    app->add_option("--instance", o.instance_path, "Instance document or CVRPLib file");
    app->add_option("--variant", o.variant, "CVRP | VRPTW | VRPB | OnePDP");
    app->add_option("--n", o.n, "Number of customers");
    app->add_option("--capacity", o.capacity, "Vehicle capacity");
    app->add_option("--demand-model", o.demand_model, "uniform_1_9 | skewed_hetero");
    app->add_option("--clusters", o.clusters, "Clustered layout with this many centers (0: uniform)");
    app->add_option("--seed", o.seed, "Random seed");
}

GenSpec spec_of(const InstanceOpts &o, std::uint64_t seed) {
    GenSpec spec;
    spec.variant = variant_from_string(o.variant);
    spec.n_customers = o.n;
    spec.capacity = o.capacity;
    spec.demand_model = demand_model_from_string(o.demand_model);
    if (o.clusters > 0) {
        spec.spatial = SpatialModel::Clustered;
        spec.clusters = o.clusters;
    }
    spec.seed = seed;
    return spec;
}

Instance load_instance(const InstanceOpts &o) {
    if (o.instance_path.empty()) return generate(spec_of(o, o.seed));
    const std::string text = slurp(o.instance_path);
    if (text.rfind("fsta-instance", 0) == 0) return read_instance(text);
    return parse_cvrplib(text);
}

struct LoopOpts {
    std::string segmenter = "random:1";
    std::string backbone = "lns";
    long long moves_per_iter = 100;
    long long time_limit_ms = 0;
    int iters = 0;
    bool oracle_free_time = false;
    std::string init_path;
    long long sweep_moves = 200;
};

void add_loop_opts(CLI::App *app, LoopOpts &o, bool with_segmenter) {
    if (with_segmenter)
        app->add_option("--segmenter", o.segmenter,
                        "random:F | geometric:K:T | oracle:M | external-file:PATH | external-cmd:CMD");
    app->add_option("--backbone", o.backbone, "ls | lns");
    app->add_option("--moves-per-iter", o.moves_per_iter, "Backbone move budget per iteration");
    app->add_option("--time-limit-ms", o.time_limit_ms, "Total wall budget in milliseconds (0: none)");
    app->add_option("--iters", o.iters, "Iteration budget (0: none)");
    app->add_flag("--oracle-free-time", o.oracle_free_time, "Exclude oracle lookahead time from the budget");
    app->add_option("--init", o.init_path, "Initial solution document (default: sweep)");
    app->add_option("--sweep-moves", o.sweep_moves, "Backbone moves per sweep group");
}

LoopConfig loop_config(const LoopOpts &o, std::uint64_t seed) {
    LoopConfig cfg;
    cfg.mode = backbone_mode_from_string(o.backbone);
    cfg.segmenter = parse_policy(o.segmenter, cfg.mode, seed);
    cfg.moves_per_iter = o.moves_per_iter;
    if (o.iters > 0) cfg.iterations = o.iters;
    if (o.time_limit_ms > 0) cfg.time_limit_ms = o.time_limit_ms;
    if (!cfg.iterations && !cfg.time_limit_ms) cfg.iterations = 10;
    cfg.oracle_free_time = o.oracle_free_time;
    cfg.seed = seed;
    return cfg;
}

Solution initial_solution(const Instance &inst, const LoopOpts &o, std::uint64_t seed) {
    if (!o.init_path.empty()) return read_solution(slurp(o.init_path)).solution;
    return initial_solution_sweep(inst, SweepParams{}, MoveBudget::moves(o.sweep_moves, seed));
}

void write_stats_file(const std::string &path, const RunStats &stats) {
    if (path.empty()) return;
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path);
    write_stats(out, stats);
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"FSTA decomposition engine for iterative VRP re-optimization"};
    app.require_subcommand(1);

    InstanceOpts io;
    LoopOpts lo;
    std::string out_path, stats_path, trace_path, solution_path, format = "doc";
    double eta_improv = 0.0, alpha_ac = 0.4, fraction = 0.5;
    int instances = 1, trials = 500;

    auto *gen = app.add_subcommand("generate", "Generate a random instance");
    add_instance_opts(gen, io);
    gen->add_option("--format", format, "doc | cvrplib");
    gen->add_option("--out", out_path, "Output path (default: stdout)");

    auto *solve = app.add_subcommand("solve", "Plain backbone loop from a sweep start");
    add_instance_opts(solve, io);
    add_loop_opts(solve, lo, false);
    solve->add_option("--out", out_path, "Solution document");
    solve->add_option("--stats", stats_path, "Per-iteration stats (JSON lines)");

    auto *run = app.add_subcommand("fsta-run", "Iterative FSTA loop");
    add_instance_opts(run, io);
    add_loop_opts(run, lo, true);
    run->add_option("--out", out_path, "Solution document");
    run->add_option("--stats", stats_path, "Per-iteration stats (JSON lines)");

    auto *label = app.add_subcommand("oracle-label", "Lookahead-oracle unstable edges as a prediction document");
    add_instance_opts(label, io);
    add_loop_opts(label, lo, false);
    label->add_option("--solution", solution_path, "Current solution document (default: sweep)");
    label->add_option("--out", out_path, "Prediction document");

    auto *traces = app.add_subcommand("export-traces", "NAR/AR training traces");
    add_instance_opts(traces, io);
    add_loop_opts(traces, lo, false);
    traces->add_option("--instances", instances, "Number of generated instances (N_P)");
    traces->add_option("--eta-improv", eta_improv, "Minimum component improvement");
    traces->add_option("--alpha-ac", alpha_ac, "AR acceptance probability");
    traces->add_option("--trace", trace_path, "Trace stream output (JSON lines)");

    auto *eval = app.add_subcommand("eval-segmenter", "Recall/TNR of a segmenter against the oracle");
    add_instance_opts(eval, io);
    add_loop_opts(eval, lo, true);
    eval->add_option("--instances", instances, "Number of generated instances");
    eval->add_option("--stats", stats_path, "Per-iteration stats of all runs (JSON lines)");

    auto *red = app.add_subcommand("redundancy", "Changed-edge fraction per backbone iteration");
    add_instance_opts(red, io);
    add_loop_opts(red, lo, false);

    auto *verify = app.add_subcommand("verify-theorem", "Check feasibility transfer and order preservation");
    add_instance_opts(verify, io);
    add_loop_opts(verify, lo, false);
    verify->add_option("--solution", solution_path, "Solution document (default: sweep)");
    verify->add_option("--fraction", fraction, "Probability that a non-depot edge is unstable");
    verify->add_option("--trials", trials, "Sampled pairs when enumeration is too large");

    auto *parse = app.add_subcommand("parse", "Parse a CVRPLib file and print a summary");
    parse->add_option("--instance", io.instance_path, "CVRPLib file")->required();
    parse->add_option("--out", out_path, "Write the instance document here");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*gen) {
            const Instance inst = generate(spec_of(io, io.seed));
            if (format == "cvrplib")
                emit(out_path, write_cvrplib(inst));
            else if (format == "doc")
                emit(out_path, write_instance(inst));
            else
                throw Error("unknown format " + format);
        } else if (*solve || *run) {
            const Instance inst = load_instance(io);
            const Solution init = initial_solution(inst, lo, io.seed);
            const LoopConfig cfg = loop_config(lo, io.seed);
            auto [sol, stats] = *solve ? run_plain_loop(inst, init, cfg) : run_fsta_loop(inst, init, cfg);
            write_stats_file(stats_path, stats);
            emit(out_path, write_solution(inst, sol));
            std::cerr << "initial " << stats.initial_objective << " final " << stats.final_objective
                      << " iterations " << stats.iterations.size() << '\n';
            if (stats.aborted) {
                std::cerr << "aborted: " << *stats.aborted << '\n';
                return 1;
            }
        } else if (*label) {
            const Instance inst = load_instance(io);
            const Solution sol = solution_path.empty() ? initial_solution(inst, lo, io.seed)
                                                       : read_solution(slurp(solution_path)).solution;
            const ProblemView view = ProblemView::of(inst);
            const auto look = oracle_lookahead(view, sol, MoveBudget::moves(lo.moves_per_iter, io.seed),
                                               backbone_mode_from_string(lo.backbone));
            emit(out_path, write_prediction(inst.id, look.unstable));
        } else if (*traces) {
            std::vector<Instance> list;
            for (int k = 0; k < instances; ++k) list.push_back(generate(spec_of(io, derive_seed(io.seed, k))));
            TraceConfig cfg;
            cfg.iterations = lo.iters > 0 ? lo.iters : 40;
            cfg.eta_improv = eta_improv;
            cfg.alpha_ac = alpha_ac;
            cfg.mode = backbone_mode_from_string(lo.backbone);
            cfg.moves_per_iter = lo.moves_per_iter;
            cfg.sweep_moves = lo.sweep_moves;
            cfg.seed = io.seed;
            std::ofstream file;
            if (!trace_path.empty()) {
                file.open(trace_path);
                if (!file) throw Error("cannot write " + trace_path);
            }
            const TraceSummary s = export_traces(list, cfg, trace_path.empty() ? std::cout : file);
            std::cerr << "records " << s.records << " ar_sequences " << s.ar_sequences << " components "
                      << s.components << " skipped " << s.skipped_components << " unassigned "
                      << s.unassigned_components << " filtered " << s.filtered_components << '\n';
        } else if (*eval) {
            std::vector<std::pair<Instance, Solution>> cases;
            for (int k = 0; k < instances; ++k) {
                Instance inst = io.instance_path.empty() ? generate(spec_of(io, derive_seed(io.seed, k)))
                                                         : load_instance(io);
                Solution init = initial_solution(inst, lo, derive_seed(io.seed, k));
                cases.emplace_back(std::move(inst), std::move(init));
            }
            const LoopConfig cfg = loop_config(lo, io.seed);
            const EvalSummary s = eval_segmenter(cases, cfg.segmenter, cfg);
            if (!stats_path.empty()) {
                std::ofstream out(stats_path);
                for (const auto &r : s.runs) write_stats(out, r);
            }
            nlohmann::json j{{"recall", s.mean_recall},
                             {"tnr", s.mean_tnr},
                             {"size_ratio", s.mean_size_ratio},
                             {"iterations", s.iterations}};
            std::cout << j.dump() << '\n';
        } else if (*red) {
            const Instance inst = load_instance(io);
            const Solution init = initial_solution(inst, lo, io.seed);
            BackboneConfig cfg{backbone_mode_from_string(lo.backbone), lo.moves_per_iter, io.seed};
            const auto fr = measure_redundancy(inst, init, cfg, lo.iters > 0 ? lo.iters : 10);
            std::cout << nlohmann::json(fr).dump() << '\n';
        } else if (*verify) {
            const Instance inst = load_instance(io);
            const Solution sol = solution_path.empty() ? initial_solution(inst, lo, io.seed)
                                                       : read_solution(slurp(solution_path)).solution;
            Rng rng(io.seed);
            const EdgeSet unstable = detect_random(sol, fraction, rng);
            const TheoremReport rep = verify_theorem(inst, sol, unstable, trials, io.seed);
            nlohmann::json j{{"passed", rep.passed},
                             {"exhaustive", rep.exhaustive},
                             {"reduced_solutions", rep.reduced_solutions},
                             {"pairs_checked", rep.pairs_checked},
                             {"failure", rep.failure}};
            if (rep.witness) j["witness"] = {rep.witness->first.routes, rep.witness->second.routes};
            std::cout << j.dump() << '\n';
            return rep.passed ? 0 : 1;
        } else if (*parse) {
            const Instance inst = parse_cvrplib(slurp(io.instance_path));
            double total = 0.0;
            for (const auto &n : inst.nodes) total += n.demand;
            std::cerr << "name " << inst.id << " nodes " << inst.size() << " capacity " << inst.capacity
                      << " total_demand " << total << '\n';
            if (!out_path.empty()) emit(out_path, write_instance(inst));
        }
    } catch (const Error &e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
