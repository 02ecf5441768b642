#pragma once

#include <Eigen/Dense>
#include <vector>

#include "qp/builder.hpp"
#include "solver/ipm.hpp"

namespace mpadnn::diff {

struct Thresholds {
  double tau_act = 1e-6;    // dual above this => strongly active
  double tau_slack = 1e-6;  // slack below tau_slack*(1+|h_i|) => at the boundary
};

struct ActiveSet {
  std::vector<int> active_rows;
  int weakly_active = 0;  // boundary rows with vanishing dual, treated inactive
};

ActiveSet identify_active(const solver::SolveResult& sol, const qp::QpData& qp,
                          const Thresholds& thr = {});

// Sensitivity of the Euclidean projection at a solved point. The local
// Jacobian is the orthogonal projector onto the null space of the active
// constraint rows stacked with the equalities:
//   J = I - C' (C C' + delta I)^{-1} C.
// Weakly active rows (mu ~ 0 and slack ~ 0) take the inactive branch and are
// counted; the Tikhonov term keeps redundant active sets factorizable.
class VjpWorkspace {
 public:
  static VjpWorkspace build(const solver::SolveResult& sol, const qp::QpData& qp,
                            const Thresholds& thr = {});

  // grad_z = J' grad_x via one factorized solve (J is symmetric).
  Eigen::VectorXd vjp(const Eigen::VectorXd& grad_x) const;

  const ActiveSet& active() const { return active_; }
  int degenerate_count() const { return active_.weakly_active; }

 private:
  ActiveSet active_;
  Eigen::MatrixXd c_rows_;             // (n_eq + |active|) x n
  Eigen::LLT<Eigen::MatrixXd> llt_;    // of C C' + delta I
  int n_ = 0;
};

}  // namespace mpadnn::diff
