#pragma once

#include <Eigen/Dense>

#include "grid/case.hpp"
#include "grid/network.hpp"
#include "qp/builder.hpp"

namespace mpadnn::qp {

// Constraint residuals computed directly from the dispatch formulas, without
// touching the assembled A/G matrices. Positive values are violations (MW or
// MWh); feasible schedules have all maxima <= tolerance.
struct FeasibilityReport {
  double balance = 0.0;        // |sum g - sum ch + sum dis - sum d| per period, max
  double gen_bounds = 0.0;
  double ess_power_bounds = 0.0;
  double ramp = 0.0;
  double soc_bounds = 0.0;
  double terminal_soc = 0.0;   // |e_T - e_init|
  double line_flow = 0.0;

  double max_residual() const {
    double m = balance;
    m = std::max(m, gen_bounds);
    m = std::max(m, ess_power_bounds);
    m = std::max(m, ramp);
    m = std::max(m, soc_bounds);
    m = std::max(m, terminal_soc);
    m = std::max(m, line_flow);
    return m;
  }
  bool ramp_violated(double tol) const { return ramp > tol; }
};

FeasibilityReport check_feasibility(const Eigen::MatrixXd& x, const grid::GridCase& c,
                                    const grid::GsfMatrix& gsf, const DemandScenario& demand,
                                    const BuildOptions& opts = {});

}  // namespace mpadnn::qp
