#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "grid/case.hpp"
#include "grid/network.hpp"
#include "qp/builder.hpp"
#include "solver/ipm.hpp"

namespace mpadnn::expt {

double generation_cost(const Eigen::MatrixXd& x, const grid::GridCase& c);
Eigen::VectorXd hourly_generation_cost(const Eigen::MatrixXd& x, const grid::GridCase& c);

struct Label {
  Eigen::MatrixXd x_star;  // p x T
  double cost = 0.0;
  solver::KktReport kkt;
  int iterations = 0;
};

// Exact-solver labels with KKT certification; throws naming the scenario
// index when one is infeasible.
std::vector<Label> label_dataset(const std::vector<qp::DemandScenario>& scenarios,
                                 const qp::QpBuilder& builder, const grid::GridCase& c,
                                 int jobs = 1);

struct EvalReport {
  int samples = 0;
  double mae_pu = 0.0;               // mean |gen - gen*| in per-unit (base MVA)
  double gap_pct = 0.0;              // mean (cost - cost*)/cost* * 100
  int violation_samples = 0;         // samples with any ramp limit exceeded > tol
  double max_feasibility_residual = 0.0;
  Eigen::VectorXd hourly_cost_mean;  // T entries, currency/h
  double ramp_tol = 1e-6;
};

EvalReport evaluate(const std::vector<Eigen::MatrixXd>& outputs, const std::vector<Label>& labels,
                    const std::vector<qp::DemandScenario>& demands, const grid::GridCase& c,
                    const grid::GsfMatrix& gsf, const qp::BuildOptions& opts = {});

// Published reference values for the full-scale (10,000-sample) protocol this
// pipeline mirrors at desk scale; carried in report footers as context only.
struct ReferenceContextRow {
  double scale;
  const char* method;
  double mae_pu;
  double gap_pct;
};
const std::vector<ReferenceContextRow>& reference_context();

}  // namespace mpadnn::expt
