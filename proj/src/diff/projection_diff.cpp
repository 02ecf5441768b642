#include "diff/projection_diff.hpp"

#include <cmath>

#include "common.hpp"

namespace mpadnn::diff {

ActiveSet identify_active(const solver::SolveResult& sol, const qp::QpData& qp,
                          const Thresholds& thr) {
  if (sol.status != solver::SolveStatus::Optimal)
    throw Error(ErrorCode::Internal, "identify_active: solution is not optimal");
  ActiveSet out;
  const int q = qp.q();
  for (int i = 0; i < q; ++i) {
    const double slack_scale = 1.0 + std::abs(qp.h_vec[i]);
    const bool at_boundary = sol.slack[i] < thr.tau_slack * slack_scale;
    if (sol.mu_star[i] > thr.tau_act)
      out.active_rows.push_back(i);
    else if (at_boundary)
      ++out.weakly_active;
  }
  return out;
}

VjpWorkspace VjpWorkspace::build(const solver::SolveResult& sol, const qp::QpData& qp,
                                 const Thresholds& thr) {
  VjpWorkspace ws;
  ws.n_ = qp.n();
  ws.active_ = identify_active(sol, qp, thr);

  const int m = qp.n_eq();
  const int k = static_cast<int>(ws.active_.active_rows.size());
  ws.c_rows_ = Eigen::MatrixXd::Zero(m + k, ws.n_);
  if (m > 0) ws.c_rows_.topRows(m) = Eigen::MatrixXd(qp.a_mat());
  const auto& g = qp.g_mat();
  for (int i = 0; i < k; ++i) {
    const int row = ws.active_.active_rows[static_cast<std::size_t>(i)];
    for (qp::SpMat::InnerIterator it(g, row); it; ++it) ws.c_rows_(m + i, it.col()) = it.value();
  }

  if (m + k > 0) {
    Eigen::MatrixXd gram = ws.c_rows_ * ws.c_rows_.transpose();
    gram.diagonal().array() += 1e-10;
    ws.llt_.compute(gram);
    if (ws.llt_.info() != Eigen::Success)
      throw Error(ErrorCode::DegenerateActiveSet,
                  "build_sensitivity: active-set system singular beyond regularization");
  }
  return ws;
}

Eigen::VectorXd VjpWorkspace::vjp(const Eigen::VectorXd& grad_x) const {
  if (grad_x.size() != n_) throw dimension_error("vjp: cotangent length mismatch");
  if (c_rows_.rows() == 0) return grad_x;
  Eigen::VectorXd cg = c_rows_ * grad_x;
  return grad_x - c_rows_.transpose() * llt_.solve(cg);
}

}  // namespace mpadnn::diff
