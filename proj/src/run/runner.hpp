#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace mpadnn::run {

inline constexpr const char* kVersion = "0.1.0";

struct GenDataOptions {
  std::string case_path;
  std::string out_dir;  // empty: runs/<timestamp>_seed<seed>
  int samples = 500;
  int horizon = 24;
  double load_scale = 1.0;
  double noise = 0.10;
  std::string shape = "default";
  std::uint64_t seed = 7;
  int jobs = 1;
};

struct SolveOptions {
  std::string case_path;
  std::string dataset_dir;
  std::string out_dir;
  bool line_limits = true;
  int jobs = 1;
  int verbose = 0;
};

struct TrainOptions {
  std::string case_path;
  std::string dataset_dir;
  std::string labels_dir;  // optional; required for supervised modes
  std::string out_dir;
  std::string mode = "mpa_unsup";
  int max_epochs = 30;
  int patience = 10;
  double learning_rate = 1e-4;
  double split_train = 0.5;
  double split_val = 0.3;
  double split_test = 0.2;
  std::uint64_t seed = 1;
  bool line_limits = true;
  int jobs = 1;
  int verbose = 0;
};

struct EvalOptions {
  std::string case_path;
  std::string dataset_dir;                // scale-1.0 dataset
  std::vector<std::string> checkpoints;   // one row per model
  std::string out_dir;
  std::vector<double> scales{1.0, 1.025, 1.05};
  std::vector<int> hours{15, 16, 17};     // 1-based, for the hourly-cost table
  double split_train = 0.5;               // must match the training split
  double split_val = 0.3;
  double split_test = 0.2;
  bool line_limits = true;
  int jobs = 1;
  int verbose = 0;
};

// Each returns the run directory it wrote (dataset/solutions/checkpoint/
// reports plus a manifest.json).
std::string run_gen_data(const GenDataOptions& opts);
std::string run_solve(const SolveOptions& opts);
std::string run_train(const TrainOptions& opts);
std::string run_eval(const EvalOptions& opts);

}  // namespace mpadnn::run
