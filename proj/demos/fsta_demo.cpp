// Runs the plain backbone and oracle-guided FSTA on one generated CVRP
// instance and prints the objective of each.

#include <iostream>

#include "fsta/driver.hpp"

int main() {
    using namespace fsta;
    GenSpec spec;
    spec.n_customers = 200;
    spec.capacity = 50;
    spec.seed = 1;
    const Instance inst = generate(spec);
    const Solution init = initial_solution_sweep(inst, SweepParams{}, MoveBudget::moves(200, 1));

    LoopConfig cfg;
    cfg.iterations = 30;
    cfg.moves_per_iter = 50;
    cfg.seed = 7;
    const auto plain = run_plain_loop(inst, init, cfg).second;

    cfg.segmenter = OraclePolicy{MoveBudget::moves(50), BackboneMode::Lns};
    cfg.oracle_free_time = true;
    const auto fsta_run = run_fsta_loop(inst, init, cfg).second;

    double ratio = 0.0;
    for (const auto &it : fsta_run.iterations) ratio += it.size_ratio;
    std::cout << "initial        " << plain.initial_objective << '\n'
              << "plain backbone " << plain.final_objective << '\n'
              << "oracle FSTA    " << fsta_run.final_objective << '\n'
              << "mean size ratio " << ratio / static_cast<double>(fsta_run.iterations.size()) << '\n';
}
