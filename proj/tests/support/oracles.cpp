#include "support/oracles.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "solver/ipm.hpp"

namespace testsupport {

using namespace mpadnn;

Eigen::MatrixXd fd_projection_jacobian(const qp::QpData& data, const Eigen::VectorXd& z,
                                       double step) {
  const int n = data.n();
  solver::IpmSolver ipm;
  Eigen::MatrixXd jac(n, n);
  for (int j = 0; j < n; ++j) {
    Eigen::VectorXd zp = z, zm = z;
    zp[j] += step;
    zm[j] -= step;
    auto rp = ipm.solve(solver::make_projection_program(data, zp));
    auto rm = ipm.solve(solver::make_projection_program(data, zm));
    if (rp.status != solver::SolveStatus::Optimal || rm.status != solver::SolveStatus::Optimal)
      throw std::runtime_error("fd_projection_jacobian: projection solve failed");
    jac.col(j) = (rp.x_star - rm.x_star) / (2.0 * step);
  }
  return jac;
}

Eigen::VectorXd tree_flows(const grid::GridCase& c, const Eigen::VectorXd& injections) {
  const int nb = c.n_b;
  const int nl = c.n_l();
  if (nl != nb - 1) throw std::runtime_error("tree_flows: network is not a tree");
  if (std::abs(injections.sum()) > 1e-9) throw std::runtime_error("tree_flows: unbalanced injections");

  std::vector<std::vector<std::pair<int, int>>> adj(static_cast<std::size_t>(nb));  // (neighbor, line)
  for (int l = 0; l < nl; ++l) {
    adj[static_cast<std::size_t>(c.lines[static_cast<std::size_t>(l)].from_bus)].push_back(
        {c.lines[static_cast<std::size_t>(l)].to_bus, l});
    adj[static_cast<std::size_t>(c.lines[static_cast<std::size_t>(l)].to_bus)].push_back(
        {c.lines[static_cast<std::size_t>(l)].from_bus, l});
  }

  // iterative post-order from bus 0: subtree injection sums
  Eigen::VectorXd subtree = injections;
  std::vector<int> order, parent(static_cast<std::size_t>(nb), -1), parent_line(static_cast<std::size_t>(nb), -1);
  std::vector<char> seen(static_cast<std::size_t>(nb), 0);
  std::vector<int> stack{0};
  seen[0] = 1;
  while (!stack.empty()) {
    int u = stack.back();
    stack.pop_back();
    order.push_back(u);
    for (auto [v, l] : adj[static_cast<std::size_t>(u)])
      if (!seen[static_cast<std::size_t>(v)]) {
        seen[static_cast<std::size_t>(v)] = 1;
        parent[static_cast<std::size_t>(v)] = u;
        parent_line[static_cast<std::size_t>(v)] = l;
        stack.push_back(v);
      }
  }
  Eigen::VectorXd flows(nl);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    int u = *it;
    if (parent[static_cast<std::size_t>(u)] < 0) continue;
    int l = parent_line[static_cast<std::size_t>(u)];
    // u's subtree exports its net injection through the parent edge.
    flows[l] = c.lines[static_cast<std::size_t>(l)].from_bus == u ? subtree[u] : -subtree[u];
    subtree[parent[static_cast<std::size_t>(u)]] += subtree[u];
  }
  return flows;
}

std::optional<VertexSolution> enumerate_vertices(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                                                 const Eigen::MatrixXd& g, const Eigen::VectorXd& h,
                                                 const Eigen::VectorXd& cost) {
  const int n = static_cast<int>(g.cols());
  const int m = static_cast<int>(a.rows());
  const int q = static_cast<int>(g.rows());

  // null-space reduction of the equalities: x = x0 + N y
  Eigen::VectorXd x0;
  Eigen::MatrixXd nullsp;
  if (m > 0) {
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(a);
    x0 = cod.solve(b);
    if ((a * x0 - b).cwiseAbs().maxCoeff() > 1e-8)
      throw std::runtime_error("enumerate_vertices: equalities inconsistent");
    Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
    nullsp = lu.kernel();
  } else {
    x0 = Eigen::VectorXd::Zero(n);
    nullsp = Eigen::MatrixXd::Identity(n, n);
  }
  const int dim = static_cast<int>(nullsp.cols());
  if (dim == 0) {
    // fully determined by the equalities
    if (((g * x0 - h).array() <= 1e-7).all())
      return VertexSolution{cost.dot(x0), x0, 0.0, 1};
    return std::nullopt;
  }

  Eigen::MatrixXd gr = g * nullsp;           // q x dim
  Eigen::VectorXd hr = h - g * x0;           // q
  Eigen::VectorXd cr = nullsp.transpose() * cost;

  // rows that can never be active together (gi = -gj with positive total rhs)
  std::vector<std::vector<int>> excluded(static_cast<std::size_t>(q));
  for (int i = 0; i < q; ++i)
    for (int j = i + 1; j < q; ++j)
      if ((gr.row(i) + gr.row(j)).cwiseAbs().maxCoeff() < 1e-12 && hr[i] + hr[j] > 1e-9) {
        excluded[static_cast<std::size_t>(i)].push_back(j);
        excluded[static_cast<std::size_t>(j)].push_back(i);
      }

  std::vector<int> combo(static_cast<std::size_t>(dim));
  for (int i = 0; i < dim; ++i) combo[static_cast<std::size_t>(i)] = i;

  VertexSolution best;
  best.objective = std::numeric_limits<double>::infinity();
  double runner_up = std::numeric_limits<double>::infinity();
  long checked = 0;

  Eigen::MatrixXd sub(dim, dim);
  Eigen::VectorXd rhs(dim), y(dim), xg(q);
  const double feas_tol = 1e-7 * (1.0 + hr.cwiseAbs().maxCoeff());

  auto conflicted = [&]() {
    for (int i = 0; i < dim; ++i)
      for (int j : excluded[static_cast<std::size_t>(combo[static_cast<std::size_t>(i)])])
        for (int k2 = i + 1; k2 < dim; ++k2)
          if (combo[static_cast<std::size_t>(k2)] == j) return true;
    return false;
  };

  while (true) {
    if (!conflicted()) {
      ++checked;
      for (int i = 0; i < dim; ++i) {
        sub.row(i) = gr.row(combo[static_cast<std::size_t>(i)]);
        rhs[i] = hr[combo[static_cast<std::size_t>(i)]];
      }
      Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(sub);
      if (qr.rank() == dim) {
        y = qr.solve(rhs);
        xg.noalias() = gr * y;
        if ((xg - hr).maxCoeff() <= feas_tol) {
          double obj = cr.dot(y) + cost.dot(x0);
          Eigen::VectorXd x = x0 + nullsp * y;
          if (obj < best.objective - 1e-12) {
            if (best.x.size() && (best.x - x).norm() > 1e-6) runner_up = best.objective;
            best.objective = obj;
            best.x = x;
          } else if (best.x.size() && (best.x - x).norm() > 1e-6) {
            runner_up = std::min(runner_up, obj);
          }
        }
      }
    }
    // next combination
    int i = dim - 1;
    while (i >= 0 && combo[static_cast<std::size_t>(i)] == q - dim + i) --i;
    if (i < 0) break;
    ++combo[static_cast<std::size_t>(i)];
    for (int j2 = i + 1; j2 < dim; ++j2)
      combo[static_cast<std::size_t>(j2)] = combo[static_cast<std::size_t>(j2 - 1)] + 1;
  }

  if (!best.x.size()) return std::nullopt;
  best.runner_up_gap = runner_up - best.objective;
  best.vertices_checked = checked;
  return best;
}

Eigen::VectorXd naive_mlp_forward(const nn::MlpParams& params, const Eigen::VectorXd& input) {
  std::vector<double> act(static_cast<std::size_t>(input.size()));
  for (Eigen::Index i = 0; i < input.size(); ++i)
    act[static_cast<std::size_t>(i)] = input[i] / params.input_scale;

  for (int l = 0; l < params.layers(); ++l) {
    const auto& w = params.w[static_cast<std::size_t>(l)];
    const auto& bias = params.b[static_cast<std::size_t>(l)];
    std::vector<double> next(static_cast<std::size_t>(w.rows()));
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      double s = bias[r];
      for (Eigen::Index cidx = 0; cidx < w.cols(); ++cidx)
        s += w(r, cidx) * act[static_cast<std::size_t>(cidx)];
      if (l + 1 < params.layers() && s <= 0.0) s = std::exp(s) - 1.0;
      next[static_cast<std::size_t>(r)] = s;
    }
    act = std::move(next);
  }
  Eigen::VectorXd out(static_cast<Eigen::Index>(act.size()));
  for (std::size_t i = 0; i < act.size(); ++i)
    out[static_cast<Eigen::Index>(i)] = act[i] * params.output_scale;
  return out;
}

}  // namespace testsupport
