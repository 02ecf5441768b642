#pragma once

#include <Eigen/Dense>
#include <ostream>

#include "qp/builder.hpp"

namespace mpadnn::solver {

// min 1/2 x' diag(q_diag) x + lin' x   s.t.  A x = b,  G x <= h.
// The projection instance uses q_diag = 1, lin = -z; the exact dispatch
// instance uses q_diag = epsilon (regularized linear cost).
struct ConvexProgram {
  Eigen::VectorXd q_diag;
  Eigen::VectorXd lin;
  const qp::QpData* qp = nullptr;

  double objective(const Eigen::VectorXd& x) const {
    return 0.5 * x.dot(q_diag.cwiseProduct(x)) + lin.dot(x);
  }
};

ConvexProgram make_projection_program(const qp::QpData& qp, const Eigen::VectorXd& z);
ConvexProgram make_opf_program(const qp::QpData& qp, const grid::GridCase& c,
                               double regularization = 1e-8);

enum class SolveStatus { Optimal, Infeasible, MaxIterations };

struct Residuals {
  double primal_eq = 0.0;    // ||Ax - b||_inf
  double primal_ineq = 0.0;  // max(Gx - h)_+
  double dual = 0.0;         // ||Qx + lin + A'lambda + G'mu||_inf
  double comp = 0.0;         // s' mu / q
};

struct SolveResult {
  Eigen::VectorXd x_star;
  Eigen::VectorXd lambda_star;
  Eigen::VectorXd mu_star;
  Eigen::VectorXd slack;
  SolveStatus status = SolveStatus::MaxIterations;
  int iterations = 0;
  Residuals residuals;
  bool polished = false;
  double objective = 0.0;
};

struct SolverOptions {
  double tol_feas = 1e-10;   // relative primal/dual feasibility target
  double tol_gap = 1e-10;    // relative complementarity target
  double accept_tol = 1e-9;  // stalled iterates at this level still count as optimal
  int max_iterations = 200;
  bool polish = true;
  std::ostream* trace = nullptr;  // per-iteration residual log
};

struct KktReport {
  double stationarity = 0.0;
  double primal_eq = 0.0;
  double primal_ineq = 0.0;
  double comp = 0.0;  // ||mu .* (Gx - h)||_inf
  double mu_min = 0.0;
};

KktReport check_kkt(const SolveResult& result, const ConvexProgram& prog);

// Mehrotra-style predictor-corrector over the slack form
// Ax = b, Gx + s = h, s >= 0. Holds per-solve scratch memory: one solve at a
// time per instance; independent instances may run concurrently.
class IpmSolver {
 public:
  explicit IpmSolver(SolverOptions opts = {}) : opts_(opts) {}

  SolveResult solve(const ConvexProgram& prog, const SolveResult* warm_start = nullptr);

  const SolverOptions& options() const { return opts_; }
  SolverOptions& options() { return opts_; }

 private:
  SolverOptions opts_;

  // scratch (sized per solve)
  Eigen::MatrixXd h_mat_, a_dense_, hinv_at_;
  Eigen::LDLT<Eigen::MatrixXd> ldlt_h_;
  Eigen::LDLT<Eigen::MatrixXd> schur_;

  void factor(const ConvexProgram& prog, const Eigen::VectorXd& w, double delta);
  void solve_kkt(const Eigen::VectorXd& rx, const Eigen::VectorXd& ry, Eigen::VectorXd& dx,
                 Eigen::VectorXd& dlambda) const;
  bool polish(const ConvexProgram& prog, SolveResult& result) const;
};

}  // namespace mpadnn::solver
