#include <doctest.h>

#include <Eigen/Dense>
#include <filesystem>
#include <fstream>

#include "common.hpp"
#include "expt/dataset.hpp"
#include "expt/evaluate.hpp"
#include "grid/case.hpp"
#include "grid/network.hpp"
#include "qp/feasibility.hpp"
#include "solver/ipm.hpp"
#include "support/oracles.hpp"

using namespace mpadnn;
namespace fs = std::filesystem;

namespace {

std::string fixture(const std::string& name) { return std::string(FIXTURE_DIR) + "/" + name; }

}  // namespace

TEST_CASE("zero noise reproduces shape x nominal x scale exactly") {
  grid::GridCase c = grid::load_case(fixture("toy3.case"));
  expt::DatasetSpec spec;
  spec.k = 3;
  spec.noise = 0.0;
  spec.horizon = 24;
  spec.load_scale = 1.3;
  expt::Dataset ds = expt::generate_dataset(spec, c);
  Eigen::VectorXd shape = expt::load_shape("default", 24);
  for (const auto& scen : ds.scenarios)
    for (int t = 0; t < 24; ++t)
      CHECK(scen.p_d(0, t) == doctest::Approx(50.0 * shape[t] * 1.3).epsilon(1e-12));
}

TEST_CASE("scaled dataset is an exact multiple of its base at matching seed") {
  grid::GridCase c = grid::load_case(fixture("toy3.case"));
  expt::DatasetSpec spec;
  spec.k = 5;
  spec.horizon = 12;
  spec.seed = 99;
  expt::Dataset base = expt::generate_dataset(spec, c);
  spec.load_scale = 1.05;
  expt::Dataset scaled = expt::generate_dataset(spec, c);
  for (int i = 0; i < spec.k; ++i) {
    REQUIRE(base.attempts[static_cast<std::size_t>(i)] == 0);
    REQUIRE(scaled.attempts[static_cast<std::size_t>(i)] == 0);
    Eigen::MatrixXd ratio =
        scaled.scenarios[static_cast<std::size_t>(i)].p_d.cwiseQuotient(
            base.scenarios[static_cast<std::size_t>(i)].p_d);
    CHECK((ratio.array() - 1.05).abs().maxCoeff() < 1e-12);
  }
  // scale_scenarios applies the same multiple in memory
  auto rescaled = expt::scale_scenarios(base.scenarios, 1.05);
  for (int i = 0; i < spec.k; ++i)
    CHECK((rescaled[static_cast<std::size_t>(i)].p_d -
           scaled.scenarios[static_cast<std::size_t>(i)].p_d)
              .cwiseAbs()
              .maxCoeff() < 1e-12);
}

TEST_CASE("dataset regeneration is bit-identical and survives a save/load round trip") {
  grid::GridCase c = grid::load_case(fixture("toy3.case"));
  expt::DatasetSpec spec;
  spec.k = 20;
  spec.horizon = 8;
  spec.seed = 4242;
  expt::Dataset a = expt::generate_dataset(spec, c);
  expt::Dataset b = expt::generate_dataset(spec, c, 2);  // jobs must not matter
  for (int i = 0; i < spec.k; ++i)
    CHECK((a.scenarios[static_cast<std::size_t>(i)].p_d -
           b.scenarios[static_cast<std::size_t>(i)].p_d)
              .cwiseAbs()
              .maxCoeff() == 0.0);

  fs::path dir = fs::temp_directory_path() / "mpadnn_dataset_test";
  fs::remove_all(dir);
  expt::save_dataset(a, dir.string());
  expt::Dataset back = expt::load_dataset(dir.string(), c);
  CHECK(back.spec.seed == spec.seed);
  for (int i = 0; i < spec.k; ++i)
    CHECK((a.scenarios[static_cast<std::size_t>(i)].p_d -
           back.scenarios[static_cast<std::size_t>(i)].p_d)
              .cwiseAbs()
              .maxCoeff() == 0.0);

  // byte-identical regeneration of the csv
  std::ifstream f1(expt::dataset_csv_path(dir.string()), std::ios::binary);
  std::string s1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
  fs::path dir2 = fs::temp_directory_path() / "mpadnn_dataset_test2";
  fs::remove_all(dir2);
  expt::save_dataset(b, dir2.string());
  std::ifstream f2(expt::dataset_csv_path(dir2.string()), std::ios::binary);
  std::string s2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
  CHECK(s1 == s2);
  CHECK(!s1.empty());
  fs::remove_all(dir);
  fs::remove_all(dir2);
}

TEST_CASE("persistently infeasible demand errors out") {
  grid::GridCase c = grid::load_case(fixture("toy3.case"));
  expt::DatasetSpec spec;
  spec.k = 1;
  spec.horizon = 4;
  spec.load_scale = 50.0;  // far beyond fleet capacity
  CHECK_THROWS_AS(expt::generate_dataset(spec, c), Error);
}

TEST_CASE("labels are feasible, optimal against the oracle, and beat heuristics") {
  grid::GridCase c = grid::load_case(fixture("toyacc.case"));
  auto gsf = grid::compute_gsf(c);
  auto maps = grid::build_incidence(c);
  qp::QpBuilder builder(c, gsf, maps, 3);

  std::vector<qp::DemandScenario> scenarios;
  Eigen::MatrixXd d(1, 3);
  d << 55, 80, 95;
  scenarios.push_back(qp::DemandScenario{d});

  auto labels = expt::label_dataset(scenarios, builder, c, 1);
  REQUIRE(labels.size() == 1);
  const auto& lab = labels[0];
  CHECK(lab.kkt.stationarity <= 1e-8);

  auto feas = qp::check_feasibility(lab.x_star, c, gsf, scenarios[0]);
  CHECK(feas.max_residual() <= 1e-6);

  // the label never costs more than a feasible heuristic: project a flat
  // demand-proportional dispatch and price it
  solver::IpmSolver ipm;
  qp::QpData data = builder.build(scenarios[0]);
  Eigen::VectorXd z = Eigen::VectorXd::Zero(data.n());
  const auto& layout = data.layout();
  for (int t = 0; t < 3; ++t)
    for (int g = 0; g < 2; ++g) z[layout.gen_index(t, g)] = d(0, t) / 2.0;
  auto proj = ipm.solve(solver::make_projection_program(data, z));
  REQUIRE(proj.status == solver::SolveStatus::Optimal);
  double heuristic_cost = expt::generation_cost(qp::devectorize(proj.x_star, layout), c);
  CHECK(lab.cost <= heuristic_cost + 1e-6);
}

TEST_CASE("evaluate: outputs equal to labels give zero error everywhere") {
  grid::GridCase c = grid::load_case(fixture("toy3.case"));
  auto gsf = grid::compute_gsf(c);
  auto maps = grid::build_incidence(c);
  qp::QpBuilder builder(c, gsf, maps, 4);

  expt::DatasetSpec spec;
  spec.k = 4;
  spec.horizon = 4;
  spec.seed = 5;
  expt::Dataset ds = expt::generate_dataset(spec, c);
  auto labels = expt::label_dataset(ds.scenarios, builder, c, 1);

  std::vector<Eigen::MatrixXd> outputs;
  for (const auto& l : labels) outputs.push_back(l.x_star);
  auto rep = expt::evaluate(outputs, labels, ds.scenarios, c, gsf);
  CHECK(rep.mae_pu == doctest::Approx(0.0));
  CHECK(std::abs(rep.gap_pct) < 1e-9);
  CHECK(rep.violation_samples == 0);
  CHECK(rep.max_feasibility_residual <= 1e-6);
  CHECK(rep.hourly_cost_mean.size() == 4);

  // evaluation is a pure function: identical calls, identical reports
  auto rep2 = expt::evaluate(outputs, labels, ds.scenarios, c, gsf);
  CHECK(rep.mae_pu == rep2.mae_pu);
  CHECK(rep.gap_pct == rep2.gap_pct);
  CHECK(rep.hourly_cost_mean == rep2.hourly_cost_mean);
}

TEST_CASE("evaluate counts ramp violations") {
  grid::GridCase c = grid::load_case(fixture("ramp2.case"));
  auto gsf = grid::compute_gsf(c);
  auto maps = grid::build_incidence(c);
  qp::QpBuilder builder(c, gsf, maps, 2);

  std::vector<qp::DemandScenario> scenarios;
  Eigen::MatrixXd d(1, 2);
  d << 40, 60;
  scenarios.push_back(qp::DemandScenario{d});
  auto labels = expt::label_dataset(scenarios, builder, c, 1);

  // jump the cheap unit by 20 MW against its 10 MW limit
  Eigen::MatrixXd bad(2, 2);
  bad << 40, 60, 0, 0;
  auto rep = expt::evaluate({bad}, labels, scenarios, c, gsf);
  CHECK(rep.violation_samples == 1);
  CHECK(rep.max_feasibility_residual >= 10.0 - 1e-9);
}

TEST_CASE("steep shape exists and the reference context rows are present") {
  Eigen::VectorXd steep = expt::load_shape("steep", 24);
  CHECK(steep.size() == 24);
  CHECK(steep[15] - steep[14] > 0.015);  // the afternoon step
  CHECK_THROWS_AS(expt::load_shape("bogus", 24), Error);
  CHECK(expt::reference_context().size() == 9);
}
