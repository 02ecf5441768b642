#include <doctest.h>

#include <Eigen/Dense>

#include "common.hpp"
#include "grid/case.hpp"
#include "grid/network.hpp"
#include "support/oracles.hpp"

using namespace mpadnn;

namespace {

std::string fixture(const std::string& name) { return std::string(FIXTURE_DIR) + "/" + name; }

grid::GridCase two_bus_case() {
  // line oriented from bus 2 toward the slack at bus 1
  return grid::parse_case(R"([case]
name = twobus
[buses]
count = 2
slack = 1
[generators]
gen = 1 0 100 50 50 10
[lines]
line = 2 1 0.1 100
[loads]
load = 2 30
)",
                          "inline");
}

}  // namespace

TEST_CASE("39-bus case loads with the documented dimensions") {
  grid::GridCase c = grid::load_case(std::string(CASES_DIR) + "/ieee39.case");
  CHECK(c.n_b == 39);
  CHECK(c.n_g() == 10);
  CHECK(c.n_l() == 46);
  CHECK(c.n_d() == 21);
  CHECK(c.n_e() == 1);
  CHECK(c.slack_bus == 30);  // bus 31, 0-based
  CHECK(c.ess_units[0].bus == 18);  // bus 19, 0-based
  CHECK(c.total_nominal_load() == doctest::Approx(6254.23).epsilon(1e-6));
  CHECK(!c.fingerprint.empty());
}

TEST_CASE("3-bus toy fixture parses field by field") {
  grid::GridCase c = grid::load_case(fixture("toy3.case"));
  CHECK(c.name == "toy3");
  CHECK(c.n_b == 3);
  CHECK(c.n_g() == 2);
  CHECK(c.n_d() == 1);
  CHECK(c.n_l() == 2);
  CHECK(c.n_e() == 1);
  CHECK(c.generators[0].bus == 0);
  CHECK(c.generators[0].p_min == 5.0);
  CHECK(c.generators[0].p_max == 60.0);
  CHECK(c.generators[0].ramp_up == 20.0);
  CHECK(c.generators[0].cost == std::vector<double>{10.0});
  CHECK(c.generators[1].bus == 1);
  CHECK(c.generators[1].cost == std::vector<double>{25.0});
  CHECK(c.lines[0].from_bus == 0);
  CHECK(c.lines[0].to_bus == 2);
  CHECK(c.lines[0].reactance == 0.10);
  CHECK(c.lines[0].flow_limit == 30.0);
  CHECK(c.loads[0].bus == 2);
  CHECK(c.loads[0].p_nominal == 50.0);
  const auto& e = c.ess_units[0];
  CHECK(e.bus == 2);
  CHECK(e.p_ch_max == 10.0);
  CHECK(e.eta_ch == 0.9);
  CHECK(e.e_min == 2.0);
  CHECK(e.e_max == 20.0);
  CHECK(e.e_init() == doctest::Approx(10.0));
}

TEST_CASE("validation rejects p_min > p_max") {
  CHECK_THROWS_WITH_AS(grid::parse_case(R"([buses]
count = 1
slack = 1
[generators]
gen = 1 50 20 5 5 1
[loads]
load = 1 10
)",
                                        "inline"),
                       doctest::Contains("p_min <= p_max"), Error);
}

TEST_CASE("parser rejects unknown keys and sections with location") {
  CHECK_THROWS_WITH_AS(grid::parse_case("[buses]\ncount = 1\nwhat = 3\n", "inline"),
                       doctest::Contains("inline:3"), Error);
  CHECK_THROWS_AS(grid::parse_case("[nonsense]\nx = 1\n", "inline"), Error);
  CHECK_THROWS_AS(grid::load_case("/nonexistent/path.case"), Error);
}

TEST_CASE("gsf of a single line toward the slack is [0, 1]") {
  grid::GridCase c = two_bus_case();
  auto gsf = grid::compute_gsf(c);
  REQUIRE(gsf.phi.rows() == 1);
  CHECK(gsf.phi(0, 0) == doctest::Approx(0.0));
  CHECK(gsf.phi(0, 1) == doctest::Approx(1.0));
}

TEST_CASE("gsf slack column is zero on the 39-bus case") {
  grid::GridCase c = grid::load_case(std::string(CASES_DIR) + "/ieee39.case");
  auto gsf = grid::compute_gsf(c);
  CHECK(gsf.phi.col(c.slack_bus).cwiseAbs().maxCoeff() == doctest::Approx(0.0));
  // orientation consistency: the unit transfer from(l) -> to(l) loads line l
  // positively
  for (int l = 0; l < c.n_l(); ++l) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(c.n_b);
    v[c.lines[static_cast<std::size_t>(l)].from_bus] += 1.0;
    v[c.lines[static_cast<std::size_t>(l)].to_bus] -= 1.0;
    CHECK((gsf.phi.row(l) * v)(0) > 0.0);
  }
}

TEST_CASE("equal-reactance triangle splits a transfer 2/3 : 1/3") {
  grid::GridCase c = grid::parse_case(R"([buses]
count = 3
slack = 1
[generators]
gen = 2 0 10 5 5 1
[lines]
line = 2 3 0.2 10
line = 1 2 0.2 10
line = 1 3 0.2 10
[loads]
load = 3 1
)",
                                      "inline");
  auto gsf = grid::compute_gsf(c);
  Eigen::VectorXd inj = Eigen::VectorXd::Zero(3);
  inj[1] = 1.0;   // bus 2
  inj[2] = -1.0;  // bus 3
  Eigen::VectorXd flows = gsf.phi * inj;
  CHECK(flows[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-10));   // direct 2->3
  CHECK(flows[1] == doctest::Approx(-1.0 / 3.0).epsilon(1e-10));  // 1->2 carries 1/3 toward 2? sign below
  CHECK(flows[2] == doctest::Approx(1.0 / 3.0).epsilon(1e-10));   // 1->3
}

TEST_CASE("gsf matches depth-first accounting on random trees") {
  Rng rng(20240811);
  for (int trial = 0; trial < 20; ++trial) {
    int nb = 3 + static_cast<int>(rng.next_u64() % 8);
    grid::GridCase c;
    c.n_b = nb;
    c.slack_bus = static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(nb));
    c.generators.push_back({0, 0.0, 10.0, 5.0, 5.0, {1.0}});
    c.loads.push_back({nb - 1, 5.0});
    for (int v = 1; v < nb; ++v) {
      grid::LineSpec l;
      int u = static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(v));
      l.from_bus = rng.next_unit() < 0.5 ? u : v;
      l.to_bus = l.from_bus == u ? v : u;
      l.reactance = 0.05 + 0.2 * rng.next_unit();
      l.flow_limit = 100.0;
      c.lines.push_back(l);
    }
    grid::validate_case(c);
    auto gsf = grid::compute_gsf(c);

    Eigen::VectorXd inj(nb);
    for (int i = 0; i < nb; ++i) inj[i] = rng.next_uniform(-10.0, 10.0);
    inj[c.slack_bus] -= inj.sum();

    Eigen::VectorXd expected = testsupport::tree_flows(c, inj);
    Eigen::VectorXd actual = gsf.phi * inj;
    CHECK((expected - actual).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("disconnected network is rejected") {
  grid::GridCase c = grid::parse_case(R"([buses]
count = 4
slack = 1
[generators]
gen = 1 0 10 5 5 1
[lines]
line = 1 2 0.1 10
line = 3 4 0.1 10
[loads]
load = 2 1
)",
                                      "inline");
  CHECK_THROWS_WITH_AS(grid::compute_gsf(c), doctest::Contains("disconnected"), Error);
}

TEST_CASE("incidence maps put each device at its bus") {
  grid::GridCase c = grid::load_case(fixture("toy3.case"));
  auto maps = grid::build_incidence(c);
  CHECK(maps.m_g.rows() == 3);
  CHECK(maps.m_g.col(0)(0) == 1.0);
  CHECK(maps.m_g.col(1)(1) == 1.0);
  CHECK(maps.m_d.col(0)(2) == 1.0);
  CHECK(maps.m_e.col(0)(2) == 1.0);
  // every column sums to exactly one
  for (int j = 0; j < maps.m_g.cols(); ++j) CHECK(maps.m_g.col(j).sum() == 1.0);
  for (int j = 0; j < maps.m_d.cols(); ++j) CHECK(maps.m_d.col(j).sum() == 1.0);
  for (int j = 0; j < maps.m_e.cols(); ++j) CHECK(maps.m_e.col(j).sum() == 1.0);
}

TEST_CASE("39-bus storage column is the bus-19 unit vector; no storage means no columns") {
  grid::GridCase c39 = grid::load_case(std::string(CASES_DIR) + "/ieee39.case");
  auto maps = grid::build_incidence(c39);
  Eigen::VectorXd e19 = Eigen::VectorXd::Zero(39);
  e19[18] = 1.0;
  CHECK((maps.m_e.col(0) - e19).cwiseAbs().maxCoeff() == 0.0);

  grid::GridCase ramp2 = grid::load_case(fixture("ramp2.case"));
  auto maps2 = grid::build_incidence(ramp2);
  CHECK(maps2.m_e.cols() == 0);
}
