#include "grid/network.hpp"

#include <vector>

#include "common.hpp"

namespace mpadnn::grid {

namespace {

void check_connected(const GridCase& c) {
  std::vector<std::vector<int>> adj(static_cast<std::size_t>(c.n_b));
  for (const auto& l : c.lines) {
    adj[static_cast<std::size_t>(l.from_bus)].push_back(l.to_bus);
    adj[static_cast<std::size_t>(l.to_bus)].push_back(l.from_bus);
  }
  std::vector<char> seen(static_cast<std::size_t>(c.n_b), 0);
  std::vector<int> stack{c.slack_bus};
  seen[static_cast<std::size_t>(c.slack_bus)] = 1;
  int count = 0;
  while (!stack.empty()) {
    int u = stack.back();
    stack.pop_back();
    ++count;
    for (int v : adj[static_cast<std::size_t>(u)]) {
      if (!seen[static_cast<std::size_t>(v)]) {
        seen[static_cast<std::size_t>(v)] = 1;
        stack.push_back(v);
      }
    }
  }
  if (count != c.n_b) throw validation_error("compute_gsf: network is disconnected");
}

}  // namespace

GsfMatrix compute_gsf(const GridCase& c) {
  check_connected(c);
  const int nb = c.n_b;
  const int nl = c.n_l();
  GsfMatrix out;
  out.phi = Eigen::MatrixXd::Zero(nl, nb);
  if (nl == 0) return out;

  // Branch susceptance times incidence: Bf(l, from) = 1/x, Bf(l, to) = -1/x.
  Eigen::MatrixXd bf = Eigen::MatrixXd::Zero(nl, nb);
  for (int l = 0; l < nl; ++l) {
    double y = 1.0 / c.lines[static_cast<std::size_t>(l)].reactance;
    bf(l, c.lines[static_cast<std::size_t>(l)].from_bus) += y;
    bf(l, c.lines[static_cast<std::size_t>(l)].to_bus) -= y;
  }

  // Nodal susceptance matrix with the slack row/column removed.
  Eigen::MatrixXd bbus = Eigen::MatrixXd::Zero(nb, nb);
  for (int l = 0; l < nl; ++l) {
    int i = c.lines[static_cast<std::size_t>(l)].from_bus;
    int j = c.lines[static_cast<std::size_t>(l)].to_bus;
    double y = 1.0 / c.lines[static_cast<std::size_t>(l)].reactance;
    bbus(i, i) += y;
    bbus(j, j) += y;
    bbus(i, j) -= y;
    bbus(j, i) -= y;
  }

  std::vector<int> keep;
  keep.reserve(static_cast<std::size_t>(nb - 1));
  for (int b = 0; b < nb; ++b)
    if (b != c.slack_bus) keep.push_back(b);
  const int nr = static_cast<int>(keep.size());
  if (nr == 0) return out;  // single-bus network: phi stays zero

  Eigen::MatrixXd bred(nr, nr);
  for (int i = 0; i < nr; ++i)
    for (int j = 0; j < nr; ++j) bred(i, j) = bbus(keep[static_cast<std::size_t>(i)], keep[static_cast<std::size_t>(j)]);

  Eigen::LLT<Eigen::MatrixXd> llt(bred);
  if (llt.info() != Eigen::Success)
    throw validation_error("compute_gsf: reduced susceptance matrix is singular");

  Eigen::MatrixXd bf_red(nl, nr);
  for (int j = 0; j < nr; ++j) bf_red.col(j) = bf.col(keep[static_cast<std::size_t>(j)]);

  // phi_red = Bf_red * Bred^{-1}
  Eigen::MatrixXd phi_red = llt.solve(bf_red.transpose()).transpose();
  for (int j = 0; j < nr; ++j) out.phi.col(keep[static_cast<std::size_t>(j)]) = phi_red.col(j);
  return out;
}

IncidenceMaps build_incidence(const GridCase& c) {
  IncidenceMaps maps;
  maps.m_g = Eigen::MatrixXd::Zero(c.n_b, c.n_g());
  maps.m_d = Eigen::MatrixXd::Zero(c.n_b, c.n_d());
  maps.m_e = Eigen::MatrixXd::Zero(c.n_b, c.n_e());
  for (int j = 0; j < c.n_g(); ++j) maps.m_g(c.generators[static_cast<std::size_t>(j)].bus, j) = 1.0;
  for (int j = 0; j < c.n_d(); ++j) maps.m_d(c.loads[static_cast<std::size_t>(j)].bus, j) = 1.0;
  for (int j = 0; j < c.n_e(); ++j) maps.m_e(c.ess_units[static_cast<std::size_t>(j)].bus, j) = 1.0;
  return maps;
}

}  // namespace mpadnn::grid
