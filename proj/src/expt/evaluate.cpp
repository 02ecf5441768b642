#include "expt/evaluate.hpp"

#include <cmath>
#include <thread>

#include "common.hpp"
#include "qp/feasibility.hpp"

namespace mpadnn::expt {

double generation_cost(const Eigen::MatrixXd& x, const grid::GridCase& c) {
  return hourly_generation_cost(x, c).sum();
}

Eigen::VectorXd hourly_generation_cost(const Eigen::MatrixXd& x, const grid::GridCase& c) {
  const int T = static_cast<int>(x.cols());
  Eigen::VectorXd out(T);
  for (int t = 0; t < T; ++t) {
    double v = 0.0;
    for (int g = 0; g < c.n_g(); ++g)
      v += c.generators[static_cast<std::size_t>(g)].cost_at(t) * x(g, t);
    out[t] = v;
  }
  return out;
}

std::vector<Label> label_dataset(const std::vector<qp::DemandScenario>& scenarios,
                                 const qp::QpBuilder& builder, const grid::GridCase& c, int jobs) {
  const int n = static_cast<int>(scenarios.size());
  std::vector<Label> labels(static_cast<std::size_t>(n));

  auto worker_range = [&](int begin, int end) {
    solver::IpmSolver ipm;
    for (int i = begin; i < end; ++i) {
      qp::QpData data = builder.build(scenarios[static_cast<std::size_t>(i)]);
      auto prog = solver::make_opf_program(data, c);
      auto res = ipm.solve(prog);
      if (res.status == solver::SolveStatus::Infeasible)
        throw Error(ErrorCode::Infeasible, "label_dataset: scenario " + std::to_string(i) + " infeasible");
      if (res.status != solver::SolveStatus::Optimal)
        throw Error(ErrorCode::MaxIterations,
                    "label_dataset: scenario " + std::to_string(i) + " did not converge");
      Label lab;
      lab.x_star = qp::devectorize(res.x_star, builder.layout());
      lab.cost = generation_cost(lab.x_star, c);
      lab.kkt = solver::check_kkt(res, prog);
      lab.iterations = res.iterations;
      labels[static_cast<std::size_t>(i)] = std::move(lab);
    }
  };

  const int threads = std::max(1, std::min(jobs, n));
  if (threads == 1) {
    worker_range(0, n);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(threads));
    int chunk = (n + threads - 1) / threads;
    for (int w = 0; w < threads; ++w) {
      int begin = w * chunk, end = std::min(n, begin + chunk);
      pool.emplace_back([&, w, begin, end] {
        try {
          worker_range(begin, end);
        } catch (...) {
          errors[static_cast<std::size_t>(w)] = std::current_exception();
        }
      });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }
  return labels;
}

EvalReport evaluate(const std::vector<Eigen::MatrixXd>& outputs, const std::vector<Label>& labels,
                    const std::vector<qp::DemandScenario>& demands, const grid::GridCase& c,
                    const grid::GsfMatrix& gsf, const qp::BuildOptions& opts) {
  if (outputs.size() != labels.size() || outputs.size() != demands.size())
    throw dimension_error("evaluate: outputs, labels and demands must align");
  EvalReport rep;
  rep.samples = static_cast<int>(outputs.size());
  if (rep.samples == 0) return rep;

  const int T = static_cast<int>(outputs.front().cols());
  const int ng = c.n_g();
  rep.hourly_cost_mean = Eigen::VectorXd::Zero(T);

  double mae_sum = 0.0;
  double gap_sum = 0.0;
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    const auto& x = outputs[i];
    const auto& lab = labels[i];
    mae_sum += (x.topRows(ng) - lab.x_star.topRows(ng)).cwiseAbs().sum() /
               static_cast<double>(ng * T);
    double cost = generation_cost(x, c);
    gap_sum += (cost - lab.cost) / lab.cost * 100.0;
    rep.hourly_cost_mean += hourly_generation_cost(x, c);

    auto feas = qp::check_feasibility(x, c, gsf, demands[i], opts);
    rep.max_feasibility_residual = std::max(rep.max_feasibility_residual, feas.max_residual());
    if (feas.ramp_violated(rep.ramp_tol)) ++rep.violation_samples;
  }
  rep.mae_pu = mae_sum / rep.samples / c.base_mva;
  rep.gap_pct = gap_sum / rep.samples;
  rep.hourly_cost_mean /= rep.samples;
  return rep;
}

const std::vector<ReferenceContextRow>& reference_context() {
  static const std::vector<ReferenceContextRow> rows = {
      {1.000, "mpp_sup", 0.0320, 0.1333},  {1.000, "mpa_sup", 0.0175, 0.0272},
      {1.000, "mpa_unsup", 0.0160, 0.0236}, {1.025, "mpp_sup", 0.0337, 0.1436},
      {1.025, "mpa_sup", 0.0210, 0.0242},  {1.025, "mpa_unsup", 0.0157, 0.0209},
      {1.050, "mpp_sup", 0.0349, 0.1725},  {1.050, "mpa_sup", 0.0296, 0.0321},
      {1.050, "mpa_unsup", 0.0155, 0.0179},
  };
  return rows;
}

}  // namespace mpadnn::expt
