#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "expt/dataset.hpp"
#include "expt/evaluate.hpp"
#include "grid/case.hpp"
#include "nn/mlp.hpp"
#include "qp/builder.hpp"
#include "solver/ipm.hpp"

namespace mpadnn::train {

enum class TrainMode { MpaUnsup, MpaSup, MppSup, SpaUnsup };

TrainMode parse_mode(const std::string& name);
const char* mode_name(TrainMode mode);

struct TrainConfig {
  TrainMode mode = TrainMode::MpaUnsup;
  int max_epochs = 30;
  int patience = 10;             // epochs without validation-gap improvement
  double learning_rate = 1e-4;
  std::uint64_t seed = 1;
  double split_train = 0.5;
  double split_val = 0.3;
  double split_test = 0.2;
  bool line_limits = true;
  int jobs = 1;                  // validation-time parallelism only
  int verbose = 0;
};

struct EpochStats {
  int epoch = 0;
  double train_loss = 0.0;       // mean per-sample loss (cost for unsupervised)
  double val_mae_pu = 0.0;
  double val_gap_pct = 0.0;
  long degenerate = 0;           // weakly-active rows seen in training vjps
  long skipped = 0;              // samples skipped on projection failure
  double max_train_residual = 0.0;  // worst feasibility residual of training outputs
  double wall_seconds = 0.0;
};

struct TrainRecord {
  std::vector<EpochStats> epochs;
  int best_epoch = -1;
  double best_val_gap = 0.0;
};

struct SplitIndices {
  std::vector<int> train, val, test;
};

// Seeded shuffle, then 5:3:2-style partition.
SplitIndices split_dataset(int k, std::uint64_t seed, double r_train, double r_val, double r_test);

struct TrainResult {
  nn::Checkpoint checkpoint;  // best-validation parameters
  TrainRecord record;
  SplitIndices split;
};

// Trains on the train split of `scenarios`, validating each epoch on the val
// split. Labels must align with `scenarios` when given; supervised modes
// require them, unsupervised modes label the validation split internally when
// they are absent. Updates are strictly serial for reproducibility.
TrainResult train(const grid::GridCase& c, const std::vector<qp::DemandScenario>& scenarios,
                  const std::vector<expt::Label>* labels, const TrainConfig& config,
                  std::uint64_t split_seed);

// Inference for a trained checkpoint: forward pass plus the projection the
// mode prescribes (full-horizon for multi-period models, per-period for the
// single-period model). One runner serves one thread at a time.
class ModelRunner {
 public:
  ModelRunner(const grid::GridCase& c, int horizon, bool line_limits);

  Eigen::MatrixXd infer(const nn::Checkpoint& ck, const qp::DemandScenario& demand);
  Eigen::MatrixXd project_full(const Eigen::VectorXd& z, const qp::DemandScenario& demand,
                               solver::SolveResult* result_out = nullptr);

  const qp::QpBuilder& full_builder() const { return full_; }
  const qp::QpBuilder& period_builder() const { return per_period_; }
  const grid::GridCase& grid_case() const { return case_; }

 private:
  grid::GridCase case_;
  grid::GsfMatrix gsf_;
  grid::IncidenceMaps maps_;
  qp::QpBuilder full_;
  qp::QpBuilder per_period_;
  solver::IpmSolver ipm_;
};

// Flattened cost vector (per-period generator costs, zeros on storage slots).
Eigen::VectorXd cost_gradient(const grid::GridCase& c, const qp::DecisionLayout& layout);

}  // namespace mpadnn::train
