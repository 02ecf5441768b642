#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "grid/case.hpp"
#include "qp/builder.hpp"

namespace mpadnn::expt {

// Named 24-point load shapes (fraction of nominal load per hour).
//  - "default": moderate double-peak day used for training datasets.
//  - "steep": low-noise evaluation profile with one pronounced afternoon
//    step, for exercising single-period models against ramp limits.
Eigen::VectorXd load_shape(const std::string& name, int horizon);

struct DatasetSpec {
  int k = 500;
  double load_scale = 1.0;
  std::uint64_t seed = 7;
  int horizon = 24;
  double noise = 0.10;  // uniform multiplicative half-width per load per hour
  std::string shape = "default";
};

struct Dataset {
  DatasetSpec spec;
  std::string case_fingerprint;
  std::vector<qp::DemandScenario> scenarios;
  std::vector<int> attempts;  // resamples used per scenario (0 = first draw)
};

// Draws K scenarios = base shape x nominal loads x per-(load,hour) noise x
// load_scale, resampling any draw the exact solver reports infeasible
// (max 10 tries per scenario). Deterministic per seed and independent of
// evaluation order.
Dataset generate_dataset(const DatasetSpec& spec, const grid::GridCase& c, int jobs = 1);

// Uniformly rescale demands (evaluation at shifted load levels).
std::vector<qp::DemandScenario> scale_scenarios(const std::vector<qp::DemandScenario>& scenarios,
                                                double factor);

void save_dataset(const Dataset& ds, const std::string& dir);
Dataset load_dataset(const std::string& dir, const grid::GridCase& c);

std::string dataset_csv_path(const std::string& dir);

}  // namespace mpadnn::expt
