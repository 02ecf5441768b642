// scratch reproduction harness (not part of the build targets; compiled ad hoc)
#include <chrono>
#include <iostream>

#include "expt/dataset.hpp"
#include "qp/feasibility.hpp"
#include "grid/case.hpp"
#include "grid/network.hpp"
#include "qp/builder.hpp"
#include "solver/ipm.hpp"
#include "train/trainer.hpp"
#include "common.hpp"

using namespace mpadnn;

int main(int argc, char** argv) {
  std::string mode = argc > 1 ? argv[1] : "train";

  grid::GridCase c = grid::load_case("tests/fixtures/toy3.case");
  if (mode == "train") {
    expt::DatasetSpec spec;
    spec.k = 60;
    spec.horizon = 4;
    spec.seed = 21;
    auto scenarios = expt::generate_dataset(spec, c).scenarios;
    train::TrainConfig cfg;
    cfg.mode = train::TrainMode::MpaUnsup;
    cfg.max_epochs = 40;
    cfg.patience = 40;
    cfg.learning_rate = 1e-3;
    cfg.seed = 1;
    cfg.verbose = 1;
    try {
      auto result = train::train(c, scenarios, nullptr, cfg, 5);
      std::cout << "best gap " << result.record.best_val_gap << "\n";
    } catch (const std::exception& e) {
      std::cout << "threw: " << e.what() << "\n";
    }
  } else if (mode == "bench") {
    grid::GridCase c39 = grid::load_case("cases/ieee39.case");
    auto gsf = grid::compute_gsf(c39);
    auto maps = grid::build_incidence(c39);
    qp::QpBuilder builder(c39, gsf, maps, 24);
    expt::DatasetSpec spec;
    spec.k = 5;
    spec.seed = 7;
    auto ds = expt::generate_dataset(spec, c39);
    solver::IpmSolver ipm;

    auto t0 = std::chrono::steady_clock::now();
    int iters = 0;
    for (int rep = 0; rep < 5; ++rep) {
      qp::QpData data = builder.build(ds.scenarios[static_cast<std::size_t>(rep)]);
      auto res = ipm.solve(solver::make_opf_program(data, c39));
      iters += res.iterations;
      std::cout << "opf status " << static_cast<int>(res.status) << " iters " << res.iterations
                << " obj " << res.objective << " polished " << res.polished << "\n";
    }
    auto dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cout << "exact solves: " << dt / 5 << " s each, iters avg " << iters / 5.0 << "\n";

    // projection benchmark with wild z
    qp::QpData data = builder.build(ds.scenarios[0]);
    Rng rng(1);
    const auto& layout = builder.layout();
    Eigen::VectorXd box(layout.size());
    for (int t = 0; t < layout.T; ++t) {
      for (int g = 0; g < layout.n_g; ++g)
        box[layout.gen_index(t, g)] = c39.generators[static_cast<std::size_t>(g)].p_max;
      box[layout.charge_index(t, 0)] = 50;
      box[layout.discharge_index(t, 0)] = 50;
    }
    t0 = std::chrono::steady_clock::now();
    iters = 0;
    int npr = 20;
    double worst_res = 0, worst_kkt = 0;
    for (int rep = 0; rep < npr; ++rep) {
      Eigen::VectorXd z(layout.size());
      for (int i = 0; i < z.size(); ++i) z[i] = rng.next_uniform(-2 * box[i], 2 * box[i]);
      auto prog = solver::make_projection_program(data, z);
      auto res = ipm.solve(prog);
      if (res.status != solver::SolveStatus::Optimal) {
        std::cout << "projection " << rep << " FAILED status " << static_cast<int>(res.status)
                  << "\n";
        continue;
      }
      iters += res.iterations;
      auto kkt = solver::check_kkt(res, prog);
      worst_kkt = std::max({worst_kkt, kkt.stationarity, kkt.primal_eq, kkt.comp});
      auto rep2 = qp::check_feasibility(qp::devectorize(res.x_star, layout), c39, gsf,
                                        ds.scenarios[0]);
      worst_res = std::max(worst_res, rep2.max_residual());
    }
    dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cout << "projections: " << dt / npr << " s each, iters avg " << iters / (double)npr
              << " worst feas " << worst_res << " worst kkt " << worst_kkt << "\n";
  }
  return 0;
}

// appended probe
#include "expt/evaluate.hpp"
namespace {
[[maybe_unused]] int probe_entry = [] { return 0; }();
}
