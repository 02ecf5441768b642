#include "qp/builder.hpp"

#include <vector>

namespace mpadnn::qp {

namespace {

using Triplet = Eigen::Triplet<double>;

SpMat from_triplets(int rows, int cols, const std::vector<Triplet>& trips) {
  SpMat m(rows, cols);
  m.setFromTriplets(trips.begin(), trips.end());
  m.makeCompressed();
  return m;
}

}  // namespace

const char* family_name(RowFamily f) {
  switch (f) {
    case RowFamily::GenUpper: return "gen_upper";
    case RowFamily::GenLower: return "gen_lower";
    case RowFamily::ChargeUpper: return "charge_upper";
    case RowFamily::ChargeLower: return "charge_lower";
    case RowFamily::DischargeUpper: return "discharge_upper";
    case RowFamily::DischargeLower: return "discharge_lower";
    case RowFamily::RampUp: return "ramp_up";
    case RowFamily::RampDown: return "ramp_down";
    case RowFamily::SocUpper: return "soc_upper";
    case RowFamily::SocLower: return "soc_lower";
    case RowFamily::LineUpper: return "line_upper";
    case RowFamily::LineLower: return "line_lower";
  }
  return "?";
}

const char* family_name(EqFamily f) {
  switch (f) {
    case EqFamily::Balance: return "balance";
    case EqFamily::TerminalSoc: return "terminal_soc";
  }
  return "?";
}

SelectionMatrices SelectionMatrices::build(const DecisionLayout& layout) {
  const int p = layout.p();
  const int ng = layout.n_g;
  const int ne = layout.n_e;
  const int T = layout.T;
  SelectionMatrices sel;

  std::vector<Triplet> tg, tch, tdis;
  for (int g = 0; g < ng; ++g) tg.emplace_back(g, g, 1.0);
  for (int e = 0; e < ne; ++e) tch.emplace_back(e, ng + e, 1.0);
  for (int e = 0; e < ne; ++e) tdis.emplace_back(e, ng + ne + e, 1.0);
  sel.u_g = from_triplets(ng, p, tg);
  sel.u_ch = from_triplets(ne, p, tch);
  sel.u_dis = from_triplets(ne, p, tdis);

  auto replicate = [&](const std::vector<Triplet>& base, int rows_per_t) {
    std::vector<Triplet> out;
    out.reserve(base.size() * static_cast<std::size_t>(T));
    for (int t = 0; t < T; ++t)
      for (const auto& tr : base) out.emplace_back(t * rows_per_t + tr.row(), t * p + tr.col(), tr.value());
    return out;
  };
  sel.v_g = from_triplets(ng * T, p * T, replicate(tg, ng));
  sel.v_ch = from_triplets(ne * T, p * T, replicate(tch, ne));
  sel.v_dis = from_triplets(ne * T, p * T, replicate(tdis, ne));

  std::vector<Triplet> td;
  for (int t = 0; t + 1 < T; ++t) {
    td.emplace_back(t, t, -1.0);
    td.emplace_back(t, t + 1, 1.0);
  }
  sel.d = from_triplets(T > 0 ? T - 1 : 0, T, td);

  std::vector<Triplet> ts;
  for (int i = 0; i < T; ++i)
    for (int j = 0; j <= i; ++j) ts.emplace_back(i, j, 1.0);
  sel.s = from_triplets(T, T, ts);

  return sel;
}

namespace {

struct Assembly {
  std::shared_ptr<StaticConstraints> st;

  Assembly(const grid::GridCase& c, const grid::GsfMatrix& gsf, const grid::IncidenceMaps& maps,
           int horizon, BuildOptions opts) {
    if (horizon < 1) throw dimension_error("QpBuilder: horizon must be >= 1");
    st = std::make_shared<StaticConstraints>();
    st->layout = DecisionLayout{c.n_g(), c.n_e(), horizon};
    st->opts = opts;

    const int T = horizon;
    const int ng = c.n_g();
    const int ne = c.n_e();
    const int nl = c.n_l();
    const auto& L = st->layout;

    // ----- equalities: T balance rows, then n_e terminal-SoC rows -----
    std::vector<Triplet> ta;
    int row = 0;
    st->eq_labels[static_cast<std::size_t>(EqFamily::Balance)] = {row, row + T};
    for (int t = 0; t < T; ++t, ++row) {
      for (int g = 0; g < ng; ++g) ta.emplace_back(row, L.gen_index(t, g), 1.0);
      for (int e = 0; e < ne; ++e) ta.emplace_back(row, L.charge_index(t, e), -1.0);
      for (int e = 0; e < ne; ++e) ta.emplace_back(row, L.discharge_index(t, e), 1.0);
    }
    const int n_terminal = opts.soc_coupling ? ne : 0;
    st->eq_labels[static_cast<std::size_t>(EqFamily::TerminalSoc)] = {row, row + n_terminal};
    for (int e = 0; e < n_terminal; ++e, ++row) {
      const auto& u = c.ess_units[static_cast<std::size_t>(e)];
      for (int t = 0; t < T; ++t) {
        ta.emplace_back(row, L.charge_index(t, e), u.eta_ch);
        ta.emplace_back(row, L.discharge_index(t, e), -1.0 / u.eta_dis);
      }
    }
    st->n_eq = row;
    st->a_mat = from_triplets(st->n_eq, L.size(), ta);

    // ----- inequalities -----
    std::vector<Triplet> tg;
    std::vector<double> h;
    row = 0;
    auto begin_family = [&](RowFamily f) {
      st->row_labels[static_cast<std::size_t>(f)].begin = row;
    };
    auto end_family = [&](RowFamily f) {
      st->row_labels[static_cast<std::size_t>(f)].end = row;
    };

    begin_family(RowFamily::GenUpper);
    for (int t = 0; t < T; ++t)
      for (int g = 0; g < ng; ++g, ++row) {
        tg.emplace_back(row, L.gen_index(t, g), 1.0);
        h.push_back(c.generators[static_cast<std::size_t>(g)].p_max);
      }
    end_family(RowFamily::GenUpper);

    begin_family(RowFamily::GenLower);
    for (int t = 0; t < T; ++t)
      for (int g = 0; g < ng; ++g, ++row) {
        tg.emplace_back(row, L.gen_index(t, g), -1.0);
        h.push_back(-c.generators[static_cast<std::size_t>(g)].p_min);
      }
    end_family(RowFamily::GenLower);

    begin_family(RowFamily::ChargeUpper);
    for (int t = 0; t < T; ++t)
      for (int e = 0; e < ne; ++e, ++row) {
        tg.emplace_back(row, L.charge_index(t, e), 1.0);
        h.push_back(c.ess_units[static_cast<std::size_t>(e)].p_ch_max);
      }
    end_family(RowFamily::ChargeUpper);

    begin_family(RowFamily::ChargeLower);
    for (int t = 0; t < T; ++t)
      for (int e = 0; e < ne; ++e, ++row) {
        tg.emplace_back(row, L.charge_index(t, e), -1.0);
        h.push_back(0.0);
      }
    end_family(RowFamily::ChargeLower);

    begin_family(RowFamily::DischargeUpper);
    for (int t = 0; t < T; ++t)
      for (int e = 0; e < ne; ++e, ++row) {
        tg.emplace_back(row, L.discharge_index(t, e), 1.0);
        h.push_back(c.ess_units[static_cast<std::size_t>(e)].p_dis_max);
      }
    end_family(RowFamily::DischargeUpper);

    begin_family(RowFamily::DischargeLower);
    for (int t = 0; t < T; ++t)
      for (int e = 0; e < ne; ++e, ++row) {
        tg.emplace_back(row, L.discharge_index(t, e), -1.0);
        h.push_back(0.0);
      }
    end_family(RowFamily::DischargeLower);

    // Ramp rows pair p_{t+1} - p_t <= R_u with p_t - p_{t+1} <= R_d.
    begin_family(RowFamily::RampUp);
    for (int t = 0; t + 1 < T; ++t)
      for (int g = 0; g < ng; ++g, ++row) {
        tg.emplace_back(row, L.gen_index(t + 1, g), 1.0);
        tg.emplace_back(row, L.gen_index(t, g), -1.0);
        h.push_back(c.generators[static_cast<std::size_t>(g)].ramp_up);
      }
    end_family(RowFamily::RampUp);

    begin_family(RowFamily::RampDown);
    for (int t = 0; t + 1 < T; ++t)
      for (int g = 0; g < ng; ++g, ++row) {
        tg.emplace_back(row, L.gen_index(t + 1, g), -1.0);
        tg.emplace_back(row, L.gen_index(t, g), 1.0);
        h.push_back(c.generators[static_cast<std::size_t>(g)].ramp_down);
      }
    end_family(RowFamily::RampDown);

    // SoC rows accumulate the energy change, so the bounds are offset by the
    // initial energy.
    const int n_soc_t = opts.soc_coupling ? T : 0;
    begin_family(RowFamily::SocUpper);
    for (int t = 0; t < n_soc_t; ++t)
      for (int e = 0; e < ne; ++e, ++row) {
        const auto& u = c.ess_units[static_cast<std::size_t>(e)];
        for (int tau = 0; tau <= t; ++tau) {
          tg.emplace_back(row, L.charge_index(tau, e), u.eta_ch);
          tg.emplace_back(row, L.discharge_index(tau, e), -1.0 / u.eta_dis);
        }
        h.push_back(u.e_max - u.e_init());
      }
    end_family(RowFamily::SocUpper);

    begin_family(RowFamily::SocLower);
    for (int t = 0; t < n_soc_t; ++t)
      for (int e = 0; e < ne; ++e, ++row) {
        const auto& u = c.ess_units[static_cast<std::size_t>(e)];
        for (int tau = 0; tau <= t; ++tau) {
          tg.emplace_back(row, L.charge_index(tau, e), -u.eta_ch);
          tg.emplace_back(row, L.discharge_index(tau, e), 1.0 / u.eta_dis);
        }
        h.push_back(u.e_init() - u.e_min);
      }
    end_family(RowFamily::SocLower);

    // Line flows: the demand part of the rhs is stamped per scenario through
    // line_to_load; h_static holds only the limit.
    const int n_line_t = opts.line_limits ? T : 0;
    auto stamp_line_row = [&](int r, int t, int l, double sign) {
      for (int g = 0; g < ng; ++g) {
        double v = gsf.phi(l, c.generators[static_cast<std::size_t>(g)].bus);
        if (v != 0.0) tg.emplace_back(r, L.gen_index(t, g), sign * v);
      }
      for (int e = 0; e < ne; ++e) {
        double v = gsf.phi(l, c.ess_units[static_cast<std::size_t>(e)].bus);
        if (v != 0.0) {
          tg.emplace_back(r, L.charge_index(t, e), -sign * v);
          tg.emplace_back(r, L.discharge_index(t, e), sign * v);
        }
      }
    };

    begin_family(RowFamily::LineUpper);
    for (int t = 0; t < n_line_t; ++t)
      for (int l = 0; l < nl; ++l, ++row) {
        stamp_line_row(row, t, l, 1.0);
        h.push_back(c.lines[static_cast<std::size_t>(l)].flow_limit);
      }
    end_family(RowFamily::LineUpper);

    begin_family(RowFamily::LineLower);
    for (int t = 0; t < n_line_t; ++t)
      for (int l = 0; l < nl; ++l, ++row) {
        stamp_line_row(row, t, l, -1.0);
        h.push_back(c.lines[static_cast<std::size_t>(l)].flow_limit);
      }
    end_family(RowFamily::LineLower);

    st->q = row;
    st->g_mat = from_triplets(st->q, L.size(), tg);
    st->h_static = Eigen::Map<const Eigen::VectorXd>(h.data(), static_cast<Eigen::Index>(h.size()));
    st->line_to_load = opts.line_limits && nl > 0 ? Eigen::MatrixXd(gsf.phi * maps.m_d)
                                                  : Eigen::MatrixXd::Zero(nl, c.n_d());
  }
};

void stamp_rhs(const StaticConstraints& st, const grid::GridCase& c, const DemandScenario& demand,
               Eigen::VectorXd& b, Eigen::VectorXd& h) {
  const int T = st.layout.T;
  if (demand.p_d.rows() != c.n_d() || demand.horizon() != T)
    throw dimension_error("QpBuilder: demand must be n_d x T (" + std::to_string(c.n_d()) + "x" +
                          std::to_string(T) + "), got " + std::to_string(demand.p_d.rows()) + "x" +
                          std::to_string(demand.p_d.cols()));
  if (!(demand.p_d.array() >= 0.0).all())
    throw validation_error("QpBuilder: demand entries must be >= 0");

  b = Eigen::VectorXd::Zero(st.n_eq);
  for (int t = 0; t < T; ++t) b[st.range(EqFamily::Balance).begin + t] = demand.total_at(t);
  // terminal-SoC rows have rhs 0

  h = st.h_static;
  if (st.opts.line_limits && st.line_to_load.rows() > 0) {
    const int nl = static_cast<int>(st.line_to_load.rows());
    const auto& up = st.range(RowFamily::LineUpper);
    const auto& lo = st.range(RowFamily::LineLower);
    for (int t = 0; t < T; ++t) {
      Eigen::VectorXd offset = st.line_to_load * demand.p_d.col(t);
      h.segment(up.begin + t * nl, nl) += offset;
      h.segment(lo.begin + t * nl, nl) -= offset;
    }
  }
}

}  // namespace

QpBuilder::QpBuilder(const grid::GridCase& c, const grid::GsfMatrix& gsf,
                     const grid::IncidenceMaps& maps, int horizon, BuildOptions opts) {
  Assembly a(c, gsf, maps, horizon, opts);
  case_ref_ = std::make_shared<grid::GridCase>(c);
  statics_ = a.st;
}

QpData QpBuilder::build(const DemandScenario& demand) const {
  QpData out;
  out.statics = statics_;
  stamp_rhs(*statics_, *case_ref_, demand, out.b_vec, out.h_vec);
  return out;
}

std::pair<SpMat, Eigen::VectorXd> build_equalities(const grid::GridCase& c,
                                                   const DemandScenario& demand, BuildOptions opts) {
  auto gsf = grid::compute_gsf(c);
  auto maps = grid::build_incidence(c);
  QpBuilder builder(c, gsf, maps, demand.horizon(), opts);
  QpData data = builder.build(demand);
  return {data.a_mat(), data.b_vec};
}

std::tuple<SpMat, Eigen::VectorXd, std::array<RowRange, 12>> build_inequalities(
    const grid::GridCase& c, const DemandScenario& demand, const grid::GsfMatrix& gsf,
    const grid::IncidenceMaps& maps, BuildOptions opts) {
  QpBuilder builder(c, gsf, maps, demand.horizon(), opts);
  QpData data = builder.build(demand);
  return {data.g_mat(), data.h_vec, data.row_labels()};
}

Eigen::MatrixXd soc_trajectory(const Eigen::MatrixXd& x, const grid::GridCase& c,
                               const DecisionLayout& layout) {
  if (x.rows() != layout.p() || x.cols() != layout.T)
    throw dimension_error("soc_trajectory: decision shape mismatch");
  const int ne = layout.n_e;
  const int T = layout.T;
  Eigen::MatrixXd e(ne, T);
  for (int u = 0; u < ne; ++u) {
    const auto& spec = c.ess_units[static_cast<std::size_t>(u)];
    double level = spec.e_init();
    for (int t = 0; t < T; ++t) {
      double ch = x(layout.n_g + u, t);
      double dis = x(layout.n_g + ne + u, t);
      level += spec.eta_ch * ch - dis / spec.eta_dis;
      e(u, t) = level;
    }
  }
  return e;
}

void QpData::dump(std::ostream& os) const {
  const auto& st = *statics;
  os << "qpdata n " << n() << " n_eq " << n_eq() << " q " << q() << " p " << st.layout.p()
     << " T " << st.layout.T << "\n";
  os << "eq_labels\n";
  for (int f = 0; f < 2; ++f) {
    const auto& r = st.eq_labels[static_cast<std::size_t>(f)];
    os << family_name(static_cast<EqFamily>(f)) << " " << r.begin << " " << r.end << "\n";
  }
  os << "row_labels\n";
  for (int f = 0; f < 12; ++f) {
    const auto& r = st.row_labels[static_cast<std::size_t>(f)];
    os << family_name(static_cast<RowFamily>(f)) << " " << r.begin << " " << r.end << "\n";
  }
  auto dump_sparse = [&os](const char* tag, const SpMat& m) {
    os << tag << " triplets " << m.nonZeros() << "\n";
    for (int k = 0; k < m.outerSize(); ++k)
      for (SpMat::InnerIterator it(m, k); it; ++it)
        os << it.row() << " " << it.col() << " " << format_double(it.value()) << "\n";
  };
  dump_sparse("A", st.a_mat);
  dump_sparse("G", st.g_mat);
  os << "b " << b_vec.size() << "\n";
  for (Eigen::Index i = 0; i < b_vec.size(); ++i) os << format_double(b_vec[i]) << "\n";
  os << "h " << h_vec.size() << "\n";
  for (Eigen::Index i = 0; i < h_vec.size(); ++i) os << format_double(h_vec[i]) << "\n";
}

}  // namespace mpadnn::qp
