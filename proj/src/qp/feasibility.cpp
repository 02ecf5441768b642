#include "qp/feasibility.hpp"

#include <cmath>

namespace mpadnn::qp {

FeasibilityReport check_feasibility(const Eigen::MatrixXd& x, const grid::GridCase& c,
                                    const grid::GsfMatrix& gsf, const DemandScenario& demand,
                                    const BuildOptions& opts) {
  DecisionLayout layout{c.n_g(), c.n_e(), demand.horizon()};
  if (x.rows() != layout.p() || x.cols() != layout.T)
    throw dimension_error("check_feasibility: decision shape mismatch");

  const int T = layout.T;
  const int ng = c.n_g();
  const int ne = c.n_e();
  FeasibilityReport rep;

  for (int t = 0; t < T; ++t) {
    double gen = x.col(t).head(ng).sum();
    double ch = ne > 0 ? x.col(t).segment(ng, ne).sum() : 0.0;
    double dis = ne > 0 ? x.col(t).tail(ne).sum() : 0.0;
    rep.balance = std::max(rep.balance, std::abs(gen - ch + dis - demand.total_at(t)));

    for (int g = 0; g < ng; ++g) {
      const auto& spec = c.generators[static_cast<std::size_t>(g)];
      rep.gen_bounds = std::max(rep.gen_bounds, x(g, t) - spec.p_max);
      rep.gen_bounds = std::max(rep.gen_bounds, spec.p_min - x(g, t));
      if (t > 0) {
        double delta = x(g, t) - x(g, t - 1);
        rep.ramp = std::max(rep.ramp, delta - spec.ramp_up);
        rep.ramp = std::max(rep.ramp, -delta - spec.ramp_down);
      }
    }
    for (int e = 0; e < ne; ++e) {
      const auto& spec = c.ess_units[static_cast<std::size_t>(e)];
      double chv = x(ng + e, t);
      double disv = x(ng + ne + e, t);
      rep.ess_power_bounds = std::max(rep.ess_power_bounds, chv - spec.p_ch_max);
      rep.ess_power_bounds = std::max(rep.ess_power_bounds, -chv);
      rep.ess_power_bounds = std::max(rep.ess_power_bounds, disv - spec.p_dis_max);
      rep.ess_power_bounds = std::max(rep.ess_power_bounds, -disv);
    }
  }

  if (opts.soc_coupling && ne > 0) {
    Eigen::MatrixXd e = soc_trajectory(x, c, layout);
    for (int u = 0; u < ne; ++u) {
      const auto& spec = c.ess_units[static_cast<std::size_t>(u)];
      for (int t = 0; t < T; ++t) {
        rep.soc_bounds = std::max(rep.soc_bounds, e(u, t) - spec.e_max);
        rep.soc_bounds = std::max(rep.soc_bounds, spec.e_min - e(u, t));
      }
      rep.terminal_soc = std::max(rep.terminal_soc, std::abs(e(u, T - 1) - spec.e_init()));
    }
  }

  if (opts.line_limits && c.n_l() > 0) {
    auto maps = grid::build_incidence(c);
    for (int t = 0; t < T; ++t) {
      Eigen::VectorXd inj = maps.m_g * x.col(t).head(ng) - maps.m_d * demand.p_d.col(t);
      if (ne > 0)
        inj += maps.m_e * (x.col(t).tail(ne) - x.col(t).segment(ng, ne));
      Eigen::VectorXd flow = gsf.phi * inj;
      for (int l = 0; l < c.n_l(); ++l)
        rep.line_flow = std::max(rep.line_flow,
                                 std::abs(flow[l]) - c.lines[static_cast<std::size_t>(l)].flow_limit);
    }
  }

  return rep;
}

}  // namespace mpadnn::qp
