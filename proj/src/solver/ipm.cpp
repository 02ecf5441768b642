#include "solver/ipm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "common.hpp"

namespace mpadnn::solver {

namespace {

double inf_norm(const Eigen::VectorXd& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

double pos_part_max(const Eigen::VectorXd& v) {
  return v.size() ? std::max(0.0, v.maxCoeff()) : 0.0;
}

// largest alpha in (0, 1] with v + alpha*dv >= 0
double max_step(const Eigen::VectorXd& v, const Eigen::VectorXd& dv) {
  double alpha = 1.0;
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (dv[i] < 0.0) alpha = std::min(alpha, -v[i] / dv[i]);
  return alpha;
}

}  // namespace

ConvexProgram make_projection_program(const qp::QpData& qp, const Eigen::VectorXd& z) {
  if (z.size() != qp.n()) throw dimension_error("make_projection_program: z length mismatch");
  ConvexProgram prog;
  prog.q_diag = Eigen::VectorXd::Ones(qp.n());
  prog.lin = -z;
  prog.qp = &qp;
  return prog;
}

ConvexProgram make_opf_program(const qp::QpData& qp, const grid::GridCase& c,
                               double regularization) {
  const auto& layout = qp.layout();
  if (layout.n_g != c.n_g() || layout.n_e != c.n_e())
    throw dimension_error("make_opf_program: case does not match QpData layout");
  ConvexProgram prog;
  prog.q_diag = Eigen::VectorXd::Constant(qp.n(), regularization);
  prog.lin = Eigen::VectorXd::Zero(qp.n());
  for (int t = 0; t < layout.T; ++t)
    for (int g = 0; g < layout.n_g; ++g)
      prog.lin[layout.gen_index(t, g)] = c.generators[static_cast<std::size_t>(g)].cost_at(t);
  prog.qp = &qp;
  return prog;
}

KktReport check_kkt(const SolveResult& r, const ConvexProgram& prog) {
  const auto& qp = *prog.qp;
  KktReport rep;
  Eigen::VectorXd stat = prog.q_diag.cwiseProduct(r.x_star) + prog.lin;
  if (qp.n_eq() > 0) stat += qp.a_mat().transpose() * r.lambda_star;
  if (qp.q() > 0) stat += qp.g_mat().transpose() * r.mu_star;
  rep.stationarity = inf_norm(stat);
  if (qp.n_eq() > 0) rep.primal_eq = inf_norm(qp.a_mat() * r.x_star - qp.b_vec);
  if (qp.q() > 0) {
    Eigen::VectorXd gap = qp.g_mat() * r.x_star - qp.h_vec;
    rep.primal_ineq = pos_part_max(gap);
    rep.comp = inf_norm(r.mu_star.cwiseProduct(gap));
    rep.mu_min = r.mu_star.size() ? r.mu_star.minCoeff() : 0.0;
  }
  return rep;
}

void IpmSolver::factor(const ConvexProgram& prog, const Eigen::VectorXd& w, double delta_rel) {
  const auto& qp = *prog.qp;
  h_mat_.setZero();
  h_mat_.diagonal() = prog.q_diag;

  // H += G' diag(w) G, accumulated on the lower triangle row by row.
  const auto& g = qp.g_mat();
  std::vector<int> idx;
  std::vector<double> val;
  for (int r = 0; r < g.outerSize(); ++r) {
    const double wi = w[r];
    if (wi == 0.0) continue;
    idx.clear();
    val.clear();
    for (qp::SpMat::InnerIterator it(g, r); it; ++it) {
      idx.push_back(static_cast<int>(it.col()));
      val.push_back(it.value());
    }
    for (std::size_t a = 0; a < idx.size(); ++a) {
      const double wa = wi * val[a];
      for (std::size_t b = 0; b <= a; ++b) {
        int i = idx[a], j = idx[b];
        if (i >= j)
          h_mat_(i, j) += wa * val[b];
        else
          h_mat_(j, i) += wa * val[b];
      }
    }
  }
  if (delta_rel > 0.0) {
    const double scale = 1.0 + h_mat_.diagonal().maxCoeff();
    h_mat_.diagonal().array() += delta_rel * scale;
  }
  if (!h_mat_.allFinite()) throw Error(ErrorCode::Internal, "ipm: non-finite barrier matrix");

  ldlt_h_.compute(h_mat_);
  if (ldlt_h_.info() != Eigen::Success)
    throw Error(ErrorCode::Internal, "ipm: H factorization failed");

  const int m = qp.n_eq();
  if (m > 0) {
    hinv_at_ = ldlt_h_.solve(a_dense_.transpose());
    schur_.compute(a_dense_ * hinv_at_);
    if (schur_.info() != Eigen::Success)
      throw Error(ErrorCode::Internal, "ipm: Schur factorization failed");
  }
}

void IpmSolver::solve_kkt(const Eigen::VectorXd& rx, const Eigen::VectorXd& ry,
                          Eigen::VectorXd& dx, Eigen::VectorXd& dlambda) const {
  Eigen::VectorXd t1 = ldlt_h_.solve(rx);
  if (ry.size() > 0) {
    dlambda = schur_.solve(a_dense_ * t1 - ry);
    dx = t1 - hinv_at_ * dlambda;
  } else {
    dlambda.resize(0);
    dx = t1;
  }
}

SolveResult IpmSolver::solve(const ConvexProgram& prog, const SolveResult* warm_start) {
  const auto& qp = *prog.qp;
  const int n = qp.n();
  const int m = qp.n_eq();
  const int q = qp.q();
  if (prog.q_diag.size() != n || prog.lin.size() != n)
    throw dimension_error("ipm: program vectors do not match QpData");

  const auto& A = qp.a_mat();
  const auto& G = qp.g_mat();
  const Eigen::VectorXd& b = qp.b_vec;
  const Eigen::VectorXd& h = qp.h_vec;

  const double scale_b = 1.0 + inf_norm(b);
  const double scale_h = 1.0 + inf_norm(h);
  // residuals are measured against the problem data, never against the
  // iterate: inflated multipliers must not mask dual infeasibility
  const double scale_c = 1.0 + std::max({inf_norm(prog.lin), inf_norm(b), inf_norm(h)});

  h_mat_.resize(n, n);
  a_dense_ = Eigen::MatrixXd(A);

  SolveResult res;
  res.lambda_star = Eigen::VectorXd::Zero(m);

  // ----- equality-constrained shortcut (no inequalities) -----
  if (q == 0) {
    factor(prog, Eigen::VectorXd::Zero(0), 0.0);
    Eigen::VectorXd dx, dl;
    solve_kkt(-prog.lin, b, dx, dl);
    res.x_star = dx;
    res.lambda_star = m > 0 ? dl : Eigen::VectorXd::Zero(0);
    res.mu_star.resize(0);
    res.slack.resize(0);
    res.status = SolveStatus::Optimal;
    res.iterations = 1;
    auto rep = check_kkt(res, prog);
    res.residuals = {rep.primal_eq, 0.0, rep.stationarity, 0.0};
    res.objective = prog.objective(res.x_star);
    return res;
  }

  // ----- starting point -----
  Eigen::VectorXd x, lambda, s, mu;
  bool warmed = false;
  if (warm_start && warm_start->x_star.size() == n && warm_start->mu_star.size() == q &&
      warm_start->lambda_star.size() == m) {
    x = warm_start->x_star;
    lambda = warm_start->lambda_star;
    s = (h - G * x).cwiseMax(1e-4 * scale_h);
    mu = warm_start->mu_star.cwiseMax(1e-4);
    warmed = true;
  } else {
    if (m > 0) {
      Eigen::MatrixXd aat = a_dense_ * a_dense_.transpose();
      x = a_dense_.transpose() * Eigen::LDLT<Eigen::MatrixXd>(aat).solve(b);
    } else {
      x = Eigen::VectorXd::Zero(n);
    }
    lambda = Eigen::VectorXd::Zero(m);
    // shifted slacks with balanced complementarity products
    Eigen::VectorXd s0 = h - G * x;
    double shift = std::max(0.0, -1.5 * s0.minCoeff());
    s = s0.array() + shift + 1.0;
    mu = Eigen::VectorXd::Ones(q);
    double dot = s.dot(mu);
    s.array() += 0.5 * dot / mu.sum();
    mu.array() += 0.5 * dot / s.sum();
  }
  (void)warmed;

  Eigen::VectorXd rd(n), rp(m), rg(q), rs(q), w(q);
  Eigen::VectorXd dx_a(n), dl_a(m), ds_a(q), dmu_a(q);
  Eigen::VectorXd dx(n), dl(m), ds(q), dmu(q);

  int stall_count = 0;
  double delta = 0.0;
  double best_merit = std::numeric_limits<double>::infinity();
  int best_merit_iter = 0;
  bool try_polish_rescue = false;

  const double mu0_norm = mu.lpNorm<1>() + lambda.lpNorm<1>() + 1.0;

  for (int iter = 0; iter < opts_.max_iterations; ++iter) {
    if (!x.allFinite() || !s.allFinite() || !mu.allFinite()) {
      res.status = SolveStatus::MaxIterations;
      res.iterations = iter;
      break;
    }
    rd = prog.q_diag.cwiseProduct(x) + prog.lin + G.transpose() * mu;
    if (m > 0) rd += A.transpose() * lambda;
    if (m > 0)
      rp = A * x - b;
    else
      rp.resize(0);
    Eigen::VectorXd gx = G * x;
    rg = gx + s - h;

    const double mu_hat = s.dot(mu) / q;
    const double res_p_eq = inf_norm(rp) / scale_b;
    const double res_p_in = pos_part_max(gx - h) / scale_h;
    const double res_slack = inf_norm(rg) / scale_h;
    const double res_d = inf_norm(rd) / (scale_c + inf_norm(mu) + inf_norm(lambda));
    const double res_gap = mu_hat / (1.0 + std::abs(prog.objective(x)));

    if (opts_.trace)
      (*opts_.trace) << "iter " << iter << " p_eq " << res_p_eq << " p_in " << res_p_in
                     << " slack " << res_slack << " dual " << res_d << " gap " << res_gap << "\n";

    const double primal_level = std::max({res_p_eq, res_p_in, res_slack});
    const double merit = std::max({primal_level, res_d, res_gap});
    if (primal_level <= opts_.tol_feas && res_d <= opts_.tol_feas && res_gap <= opts_.tol_gap) {
      res.status = SolveStatus::Optimal;
      res.iterations = iter;
      break;
    }
    // stalled but already below the acceptance level
    if (merit <= opts_.accept_tol) {
      ++stall_count;
      if (stall_count >= 3) {
        res.status = SolveStatus::Optimal;
        res.iterations = iter;
        break;
      }
    } else {
      stall_count = 0;
    }

    // no sustained progress: hand a near-converged iterate to the polish step,
    // which must then certify optimality on its own
    if (merit < 0.5 * best_merit) {
      best_merit = merit;
      best_merit_iter = iter;
    } else if (iter - best_merit_iter >= 10 && merit <= 1e-6) {
      try_polish_rescue = true;
      res.iterations = iter;
      break;
    }

    // divergence => primal infeasible (dual objective unbounded)
    const double dual_mass = mu.lpNorm<1>() + lambda.lpNorm<1>();
    if (primal_level > 1e-7 && dual_mass > 1e9 * mu0_norm) {
      res.status = SolveStatus::Infeasible;
      res.iterations = iter;
      break;
    }

    w = mu.cwiseQuotient(s).cwiseMin(1e12).cwiseMax(1e-12);
    bool ok = false;
    for (int attempt = 0; attempt < 6 && !ok; ++attempt) {
      try {
        factor(prog, w, delta);
        ok = true;
      } catch (const Error&) {
        delta = delta == 0.0 ? 1e-14 : delta * 1000.0;
        if (attempt == 5) throw;
      }
    }

    // predictor
    rs = s.cwiseProduct(mu);
    Eigen::VectorXd rhs_x = -rd - G.transpose() * (w.cwiseProduct(rg) - rs.cwiseQuotient(s));
    solve_kkt(rhs_x, -rp, dx_a, dl_a);
    ds_a = -rg - G * dx_a;
    dmu_a = -w.cwiseProduct(ds_a) - rs.cwiseQuotient(s);

    const double alpha_p_a = max_step(s, ds_a);
    const double alpha_d_a = max_step(mu, dmu_a);
    const double mu_aff =
        (s + alpha_p_a * ds_a).dot(mu + alpha_d_a * dmu_a) / q;
    double sigma = std::pow(std::max(0.0, mu_aff / mu_hat), 3.0);
    sigma = std::min(sigma, 0.99);

    // corrector
    rs = s.cwiseProduct(mu) + ds_a.cwiseProduct(dmu_a) -
         Eigen::VectorXd::Constant(q, sigma * mu_hat);
    rhs_x = -rd - G.transpose() * (w.cwiseProduct(rg) - rs.cwiseQuotient(s));
    solve_kkt(rhs_x, -rp, dx, dl);
    ds = -rg - G * dx;
    dmu = -w.cwiseProduct(ds) - rs.cwiseQuotient(s);

    double alpha = 0.995 * std::min(max_step(s, ds), max_step(mu, dmu));
    alpha = std::min(alpha, 1.0);

    x += alpha * dx;
    s += alpha * ds;
    mu += alpha * dmu;
    if (m > 0) lambda += alpha * dl;

    res.iterations = iter + 1;
  }

  if (res.status != SolveStatus::Optimal && res.status != SolveStatus::Infeasible &&
      !try_polish_rescue)
    res.status = SolveStatus::MaxIterations;

  res.x_star = x;
  res.lambda_star = lambda;
  res.mu_star = mu;
  res.slack = h - G * x;

  if ((res.status == SolveStatus::Optimal || try_polish_rescue) && opts_.polish) {
    if (polish(prog, res)) res.polished = true;
  }
  if (try_polish_rescue)
    // a stalled iterate counts as solved only if the polish certified it
    res.status = res.polished ? SolveStatus::Optimal : SolveStatus::MaxIterations;

  auto rep = check_kkt(res, prog);
  res.residuals = {rep.primal_eq, rep.primal_ineq, rep.stationarity,
                   res.mu_star.size() ? res.slack.dot(res.mu_star) / q : 0.0};
  res.objective = prog.objective(res.x_star);
  return res;
}

bool IpmSolver::polish(const ConvexProgram& prog, SolveResult& res) const {
  const auto& qp = *prog.qp;
  const int n = qp.n();
  const int m = qp.n_eq();
  const int q = qp.q();
  const auto& G = qp.g_mat();
  const auto& h = qp.h_vec;

  const double scale_b = 1.0 + inf_norm(qp.b_vec);
  const double dual_scale = 1.0 + inf_norm(prog.lin) + inf_norm(res.mu_star) + inf_norm(res.lambda_star);

  std::vector<int> active;
  for (int i = 0; i < q; ++i)
    if (res.mu_star[i] > res.slack[i] || res.slack[i] <= 1e-7 * (1.0 + std::abs(h[i])))
      active.push_back(i);

  const bool lp_like = prog.q_diag.minCoeff() <= 1e-6;

  for (int attempt = 0; attempt < 3; ++attempt) {
    const int k = static_cast<int>(active.size());
    Eigen::MatrixXd C(m + k, n);
    Eigen::VectorXd r(m + k);
    C.topRows(m) = a_dense_;
    r.head(m) = qp.b_vec;
    for (int i = 0; i < k; ++i) {
      C.row(m + i).setZero();
      for (qp::SpMat::InnerIterator it(G, active[static_cast<std::size_t>(i)]); it; ++it)
        C(m + i, it.col()) = it.value();
      r[m + i] = h[active[static_cast<std::size_t>(i)]];
    }

    Eigen::VectorXd x_new, nu;
    if (!lp_like) {
      // Schur complement on the diagonal quadratic term.
      Eigen::VectorXd dinv = prog.q_diag.cwiseInverse();
      Eigen::MatrixXd cd = C * dinv.asDiagonal();
      Eigen::MatrixXd K = cd * C.transpose();
      Eigen::VectorXd rhs = -(r + cd * prog.lin);
      Eigen::LLT<Eigen::MatrixXd> kllt(K);
      if (kllt.info() != Eigen::Success) {
        K.diagonal().array() += 1e-10 * (1.0 + K.diagonal().maxCoeff());
        kllt.compute(K);
        if (kllt.info() != Eigen::Success) return false;
      }
      nu = kllt.solve(rhs);
      for (int refine = 0; refine < 2; ++refine) nu += kllt.solve(rhs - K * nu);
      x_new = -dinv.cwiseProduct(prog.lin + C.transpose() * nu);
    } else {
      // Vertex-style polish: the active rows pin x; duals from least squares.
      Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(C);
      if (qr.rank() < n) return false;
      x_new = qr.solve(r);
      for (int refine = 0; refine < 2; ++refine) x_new += qr.solve(r - C * x_new);
      Eigen::VectorXd grad = prog.q_diag.cwiseProduct(x_new) + prog.lin;
      Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(C.transpose());
      nu = cod.solve(-grad);
      for (int refine = 0; refine < 2; ++refine)
        nu += cod.solve(-grad - C.transpose() * nu);
    }

    // verification
    Eigen::VectorXd gap = G * x_new - h;
    double worst_inactive = 0.0;
    std::vector<int> to_add;
    {
      std::vector<char> is_active(static_cast<std::size_t>(q), 0);
      for (int i : active) is_active[static_cast<std::size_t>(i)] = 1;
      for (int i = 0; i < q; ++i) {
        if (is_active[static_cast<std::size_t>(i)]) continue;
        double v = gap[i] / (1.0 + std::abs(h[i]));
        worst_inactive = std::max(worst_inactive, v);
        if (v > 1e-9) to_add.push_back(i);
      }
    }
    std::vector<int> keep;
    double worst_dual = 0.0;
    for (int i = 0; i < k; ++i) {
      double d = nu[m + i];
      if (d < -1e-9 * dual_scale)
        worst_dual = std::min(worst_dual, d);
      else
        keep.push_back(active[static_cast<std::size_t>(i)]);
    }

    double eq_res = m > 0 ? inf_norm(a_dense_ * x_new - qp.b_vec) : 0.0;
    Eigen::VectorXd stat = prog.q_diag.cwiseProduct(x_new) + prog.lin + C.transpose() * nu;
    if (eq_res <= 1e-8 * scale_b && worst_inactive <= 1e-9 && worst_dual >= -1e-9 * dual_scale &&
        inf_norm(stat) <= 1e-7 * dual_scale) {
      res.x_star = x_new;
      res.lambda_star = nu.head(m);
      res.mu_star = Eigen::VectorXd::Zero(q);
      for (int i = 0; i < k; ++i)
        res.mu_star[active[static_cast<std::size_t>(i)]] = std::max(0.0, nu[m + i]);
      res.slack = h - G * x_new;
      return true;
    }

    // shrink/grow the working set once or twice, then give up
    if (!to_add.empty()) {
      for (int i : to_add) keep.push_back(i);
      std::sort(keep.begin(), keep.end());
    }
    if (keep == active) return false;
    active = std::move(keep);
  }
  return false;
}

}  // namespace mpadnn::solver
