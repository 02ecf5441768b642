#include "train/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iostream>
#include <limits>
#include <thread>

#include "common.hpp"
#include "diff/projection_diff.hpp"
#include "qp/feasibility.hpp"

namespace mpadnn::train {

namespace {

qp::DemandScenario period_slice(const qp::DemandScenario& demand, int t) {
  return qp::DemandScenario{demand.p_d.col(t)};
}

Eigen::VectorXd flatten_demand(const qp::DemandScenario& demand) {
  return Eigen::Map<const Eigen::VectorXd>(demand.p_d.data(), demand.p_d.size());
}

}  // namespace

TrainMode parse_mode(const std::string& name) {
  if (name == "mpa_unsup") return TrainMode::MpaUnsup;
  if (name == "mpa_sup") return TrainMode::MpaSup;
  if (name == "mpp_sup") return TrainMode::MppSup;
  if (name == "spa_unsup") return TrainMode::SpaUnsup;
  throw config_error("unknown training mode '" + name +
                     "' (expected mpa_unsup, mpa_sup, mpp_sup or spa_unsup)");
}

const char* mode_name(TrainMode mode) {
  switch (mode) {
    case TrainMode::MpaUnsup: return "mpa_unsup";
    case TrainMode::MpaSup: return "mpa_sup";
    case TrainMode::MppSup: return "mpp_sup";
    case TrainMode::SpaUnsup: return "spa_unsup";
  }
  return "?";
}

SplitIndices split_dataset(int k, std::uint64_t seed, double r_train, double r_val, double r_test) {
  if (std::abs(r_train + r_val + r_test - 1.0) > 1e-9)
    throw config_error("split ratios must sum to 1");
  std::vector<int> idx(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) idx[static_cast<std::size_t>(i)] = i;
  Rng rng(derive_seed(seed, 0x73706c6974 /* "split" */));
  for (int i = k - 1; i > 0; --i) {
    int j = static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(i + 1));
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
  }
  SplitIndices s;
  int n_train = static_cast<int>(std::lround(r_train * k));
  int n_val = static_cast<int>(std::lround(r_val * k));
  n_train = std::clamp(n_train, 0, k);
  n_val = std::clamp(n_val, 0, k - n_train);
  s.train.assign(idx.begin(), idx.begin() + n_train);
  s.val.assign(idx.begin() + n_train, idx.begin() + n_train + n_val);
  s.test.assign(idx.begin() + n_train + n_val, idx.end());
  return s;
}

Eigen::VectorXd cost_gradient(const grid::GridCase& c, const qp::DecisionLayout& layout) {
  Eigen::VectorXd g = Eigen::VectorXd::Zero(layout.size());
  for (int t = 0; t < layout.T; ++t)
    for (int j = 0; j < layout.n_g; ++j)
      g[layout.gen_index(t, j)] = c.generators[static_cast<std::size_t>(j)].cost_at(t);
  return g;
}

ModelRunner::ModelRunner(const grid::GridCase& c, int horizon, bool line_limits)
    : case_(c),
      gsf_(grid::compute_gsf(c)),
      maps_(grid::build_incidence(c)),
      full_(c, gsf_, maps_, horizon, qp::BuildOptions{line_limits, true}),
      per_period_(c, gsf_, maps_, 1, qp::BuildOptions{line_limits, false}) {}

Eigen::MatrixXd ModelRunner::project_full(const Eigen::VectorXd& z, const qp::DemandScenario& demand,
                                          solver::SolveResult* result_out) {
  qp::QpData data = full_.build(demand);
  auto prog = solver::make_projection_program(data, z);
  auto res = ipm_.solve(prog);
  if (res.status != solver::SolveStatus::Optimal)
    throw Error(res.status == solver::SolveStatus::Infeasible ? ErrorCode::Infeasible
                                                              : ErrorCode::MaxIterations,
                "projection failed");
  Eigen::MatrixXd x = qp::devectorize(res.x_star, full_.layout());
  if (result_out) *result_out = std::move(res);
  return x;
}

Eigen::MatrixXd ModelRunner::infer(const nn::Checkpoint& ck, const qp::DemandScenario& demand) {
  const TrainMode mode = parse_mode(ck.mode);
  const int T = demand.horizon();
  if (mode == TrainMode::SpaUnsup) {
    const auto& layout = per_period_.layout();
    Eigen::MatrixXd x(layout.p(), T);
    for (int t = 0; t < T; ++t) {
      Eigen::VectorXd z = nn::forward(ck.params, demand.p_d.col(t));
      qp::QpData data = per_period_.build(period_slice(demand, t));
      auto prog = solver::make_projection_program(data, z);
      auto res = ipm_.solve(prog);
      if (res.status != solver::SolveStatus::Optimal)
        throw Error(ErrorCode::Infeasible, "per-period projection failed at t=" + std::to_string(t));
      x.col(t) = res.x_star;
    }
    return x;
  }
  Eigen::VectorXd z = nn::forward(ck.params, flatten_demand(demand));
  return project_full(z, demand);
}

namespace {

struct ValMetrics {
  double mae_pu = 0.0;
  double gap_pct = 0.0;
};

ValMetrics validate(const nn::Checkpoint& ck, const std::vector<qp::DemandScenario>& scenarios,
                    const std::vector<const expt::Label*>& labels, const grid::GridCase& c,
                    int horizon, bool line_limits, int jobs) {
  const int n = static_cast<int>(scenarios.size());
  if (n == 0) return {};
  std::vector<double> mae(static_cast<std::size_t>(n)), gap(static_cast<std::size_t>(n));

  auto worker_range = [&](ModelRunner& runner, int begin, int end) {
    for (int i = begin; i < end; ++i) {
      Eigen::MatrixXd x = runner.infer(ck, scenarios[static_cast<std::size_t>(i)]);
      const auto& lab = *labels[static_cast<std::size_t>(i)];
      const int ng = c.n_g();
      const int T = static_cast<int>(x.cols());
      mae[static_cast<std::size_t>(i)] = (x.topRows(ng) - lab.x_star.topRows(ng)).cwiseAbs().sum() /
                                         (static_cast<double>(ng * T) * c.base_mva);
      gap[static_cast<std::size_t>(i)] =
          (expt::generation_cost(x, c) - lab.cost) / lab.cost * 100.0;
    }
  };

  const int threads = std::max(1, std::min(jobs, n));
  if (threads == 1) {
    ModelRunner runner(c, horizon, line_limits);
    worker_range(runner, 0, n);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(threads));
    int chunk = (n + threads - 1) / threads;
    for (int w = 0; w < threads; ++w) {
      int begin = w * chunk, end = std::min(n, begin + chunk);
      pool.emplace_back([&, begin, end, w] {
        try {
          ModelRunner runner(c, horizon, line_limits);
          worker_range(runner, begin, end);
        } catch (...) {
          errors[static_cast<std::size_t>(w)] = std::current_exception();
        }
      });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }

  ValMetrics out;
  for (int i = 0; i < n; ++i) {
    out.mae_pu += mae[static_cast<std::size_t>(i)];
    out.gap_pct += gap[static_cast<std::size_t>(i)];
  }
  out.mae_pu /= n;
  out.gap_pct /= n;
  return out;
}

}  // namespace

TrainResult train(const grid::GridCase& c, const std::vector<qp::DemandScenario>& scenarios,
                  const std::vector<expt::Label>* labels, const TrainConfig& config,
                  std::uint64_t split_seed) {
  if (scenarios.empty()) throw validation_error("train: empty dataset");
  const int T = scenarios.front().horizon();
  if (T < 2 && config.mode != TrainMode::SpaUnsup)
    throw config_error("train: multi-period modes need a horizon of at least 2");
  const bool supervised = config.mode == TrainMode::MpaSup || config.mode == TrainMode::MppSup;
  if (supervised && labels == nullptr)
    throw config_error("train: mode " + std::string(mode_name(config.mode)) +
                       " requires exact-solver labels");

  SplitIndices split = split_dataset(static_cast<int>(scenarios.size()), split_seed,
                                     config.split_train, config.split_val, config.split_test);
  if (split.train.empty() || split.val.empty())
    throw config_error("train: split leaves train or validation empty");

  ModelRunner runner(c, T, config.line_limits);
  const auto& layout = runner.full_builder().layout();

  // Validation labels: take the provided ones or solve them now.
  std::vector<expt::Label> own_labels;
  std::vector<const expt::Label*> val_labels(split.val.size());
  if (labels) {
    if (labels->size() != scenarios.size())
      throw dimension_error("train: labels must align with scenarios");
    for (std::size_t i = 0; i < split.val.size(); ++i)
      val_labels[i] = &(*labels)[static_cast<std::size_t>(split.val[i])];
  } else {
    std::vector<qp::DemandScenario> val_scen;
    for (int i : split.val) val_scen.push_back(scenarios[static_cast<std::size_t>(i)]);
    own_labels = expt::label_dataset(val_scen, runner.full_builder(), c, config.jobs);
    for (std::size_t i = 0; i < split.val.size(); ++i) val_labels[i] = &own_labels[i];
  }

  // Network setup. One normalization constant scales demand inputs down and
  // raw outputs up to MW.
  const double norm = c.total_nominal_load();
  nn::MlpSpec spec;
  if (config.mode == TrainMode::SpaUnsup) {
    spec.input = c.n_d();
    spec.output = layout.p();
  } else {
    spec.input = c.n_d() * T;
    spec.output = layout.size();
  }
  nn::MlpParams params = nn::init_params(spec, config.seed, norm, norm, 0.0);
  nn::AdamState adam = nn::AdamState::like(params);

  const Eigen::VectorXd cost_vec = cost_gradient(c, layout);
  const Eigen::MatrixXd gsf_phi = grid::compute_gsf(c).phi;
  const grid::GsfMatrix gsf{gsf_phi};
  const int pT = layout.size();

  TrainRecord record;
  record.best_val_gap = std::numeric_limits<double>::infinity();
  nn::Checkpoint best;
  best.case_fingerprint = c.fingerprint;
  best.mode = mode_name(config.mode);
  best.horizon = T;
  best.params = params;
  best.adam = adam;

  // Warm starts per training sample (and per period for the single-period
  // model); correctness does not depend on them.
  std::vector<solver::SolveResult> warm(split.train.size());
  std::vector<std::vector<solver::SolveResult>> warm_spa;
  if (config.mode == TrainMode::SpaUnsup)
    warm_spa.assign(split.train.size(), std::vector<solver::SolveResult>(static_cast<std::size_t>(T)));

  solver::IpmSolver ipm;
  int epochs_since_best = 0;

  for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
    auto t0 = std::chrono::steady_clock::now();
    EpochStats stats;
    stats.epoch = epoch;
    double loss_sum = 0.0;
    int loss_count = 0;

    for (std::size_t k = 0; k < split.train.size(); ++k) {
      const auto& demand = scenarios[static_cast<std::size_t>(split.train[k])];
      const expt::Label* label =
          labels ? &(*labels)[static_cast<std::size_t>(split.train[k])] : nullptr;

      if (config.mode == TrainMode::SpaUnsup) {
        double sample_cost = 0.0;
        bool skipped = false;
        for (int t = 0; t < T && !skipped; ++t) {
          nn::ForwardCache cache;
          Eigen::VectorXd z = nn::forward(params, demand.p_d.col(t), &cache);
          qp::QpData data = runner.period_builder().build(period_slice(demand, t));
          auto prog = solver::make_projection_program(data, z);
          auto& warm_slot = warm_spa[k][static_cast<std::size_t>(t)];
          auto res = ipm.solve(prog, warm_slot.x_star.size() ? &warm_slot : nullptr);
          if (res.status != solver::SolveStatus::Optimal) {
            ++stats.skipped;
            skipped = true;
            break;
          }
          diff::VjpWorkspace ws = diff::VjpWorkspace::build(res, data);
          stats.degenerate += ws.degenerate_count();
          Eigen::VectorXd grad_x(layout.p());
          grad_x.setZero();
          for (int j = 0; j < layout.n_g; ++j)
            grad_x[j] = c.generators[static_cast<std::size_t>(j)].cost_at(t);
          Eigen::VectorXd grad_z = ws.vjp(grad_x);
          auto grads = nn::backward(params, cache, grad_z);
          nn::adam_step(params, grads, adam, config.learning_rate);
          for (int j = 0; j < layout.n_g; ++j)
            sample_cost += grad_x[j] * res.x_star[j];
          warm_slot = std::move(res);
        }
        if (!skipped) {
          loss_sum += sample_cost;
          ++loss_count;
        }
        continue;
      }

      nn::ForwardCache cache;
      Eigen::VectorXd z = nn::forward(params, flatten_demand(demand), &cache);

      if (config.mode == TrainMode::MppSup) {
        Eigen::VectorXd target = qp::vectorize(label->x_star, layout);
        Eigen::VectorXd diff = z - target;
        double loss = diff.squaredNorm() / pT;
        Eigen::VectorXd grad_z = 2.0 / pT * diff;
        auto grads = nn::backward(params, cache, grad_z);
        nn::adam_step(params, grads, adam, config.learning_rate);
        loss_sum += loss;
        ++loss_count;
        continue;
      }

      // Projection-aware paths (unsupervised cost or supervised mse).
      qp::QpData data = runner.full_builder().build(demand);
      auto prog = solver::make_projection_program(data, z);
      auto res = ipm.solve(prog, warm[k].x_star.size() ? &warm[k] : nullptr);
      if (res.status != solver::SolveStatus::Optimal) {
        ++stats.skipped;
        if (config.verbose)
          std::cerr << "[train] epoch " << epoch << ": projection failed on sample "
                    << split.train[k] << ", skipping\n";
        continue;
      }
      diff::VjpWorkspace ws = diff::VjpWorkspace::build(res, data);
      stats.degenerate += ws.degenerate_count();

      Eigen::MatrixXd x = qp::devectorize(res.x_star, layout);
      auto feas = qp::check_feasibility(x, c, gsf, demand, runner.full_builder().statics().opts);
      stats.max_train_residual = std::max(stats.max_train_residual, feas.max_residual());

      double loss;
      Eigen::VectorXd grad_x;
      if (config.mode == TrainMode::MpaUnsup) {
        loss = cost_vec.dot(res.x_star);
        grad_x = cost_vec;
      } else {  // MpaSup
        Eigen::VectorXd target = qp::vectorize(label->x_star, layout);
        Eigen::VectorXd diff = res.x_star - target;
        loss = diff.squaredNorm() / pT;
        grad_x = 2.0 / pT * diff;
      }
      Eigen::VectorXd grad_z = ws.vjp(grad_x);
      auto grads = nn::backward(params, cache, grad_z);
      nn::adam_step(params, grads, adam, config.learning_rate);
      loss_sum += loss;
      ++loss_count;
      warm[k] = std::move(res);
    }

    stats.train_loss = loss_count > 0 ? loss_sum / loss_count : 0.0;

    nn::Checkpoint current;
    current.case_fingerprint = c.fingerprint;
    current.mode = mode_name(config.mode);
    current.horizon = T;
    current.params = params;
    current.adam = adam;

    std::vector<qp::DemandScenario> val_scen;
    for (int i : split.val) val_scen.push_back(scenarios[static_cast<std::size_t>(i)]);
    ValMetrics vm = validate(current, val_scen, val_labels, c, T, config.line_limits, config.jobs);
    stats.val_mae_pu = vm.mae_pu;
    stats.val_gap_pct = vm.gap_pct;
    stats.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    record.epochs.push_back(stats);

    if (config.verbose)
      std::cerr << "[train] epoch " << epoch << " loss " << stats.train_loss << " val_mae "
                << stats.val_mae_pu << " val_gap " << stats.val_gap_pct << "% skipped "
                << stats.skipped << "\n";

    if (vm.gap_pct < record.best_val_gap) {
      record.best_val_gap = vm.gap_pct;
      record.best_epoch = epoch;
      best = current;
      epochs_since_best = 0;
    } else if (++epochs_since_best >= config.patience) {
      break;
    }
  }

  TrainResult result;
  result.checkpoint = std::move(best);
  result.record = std::move(record);
  result.split = std::move(split);
  return result;
}

}  // namespace mpadnn::train
