#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include "mpadnn.h"

namespace fs = std::filesystem;

namespace {

std::string fixture(const std::string& name) { return std::string(FIXTURE_DIR) + "/" + name; }

struct CaseHandle {
  mpadnn_case* ptr = nullptr;
  ~CaseHandle() { mpadnn_case_free(ptr); }
};

}  // namespace

TEST_CASE("version and status strings") {
  int major = -1, minor = -1, patch = -1;
  mpadnn_version(&major, &minor, &patch);
  CHECK(major == 0);
  CHECK(minor == 1);
  CHECK(std::strlen(mpadnn_status_string(MPADNN_ERR_INFEASIBLE)) > 0);
}

TEST_CASE("case loading, dims and fingerprint through the c surface") {
  CaseHandle h;
  REQUIRE(mpadnn_case_load((std::string(CASES_DIR) + "/ieee39.case").c_str(), &h.ptr) == MPADNN_OK);
  int nb, ng, nd, nl, ne;
  REQUIRE(mpadnn_case_dims(h.ptr, &nb, &ng, &nd, &nl, &ne) == MPADNN_OK);
  CHECK(nb == 39);
  CHECK(ng == 10);
  CHECK(nd == 21);
  CHECK(nl == 46);
  CHECK(ne == 1);
  char fp[17];
  REQUIRE(mpadnn_case_fingerprint(h.ptr, fp, sizeof(fp)) == MPADNN_OK);
  CHECK(std::strlen(fp) == 16);
}

TEST_CASE("error paths set codes and messages") {
  mpadnn_case* c = nullptr;
  CHECK(mpadnn_case_load("/no/such/file.case", &c) == MPADNN_ERR_IO);
  CHECK(std::strlen(mpadnn_last_error()) > 0);
  CHECK(c == nullptr);
  CHECK(mpadnn_case_load(nullptr, &c) == MPADNN_ERR_INVALID_ARG);
  CHECK(mpadnn_case_dims(nullptr, nullptr, nullptr, nullptr, nullptr, nullptr) ==
        MPADNN_ERR_INVALID_ARG);
}

TEST_CASE("projection and vjp through the c surface") {
  CaseHandle h;
  REQUIRE(mpadnn_case_load(fixture("toy3.case").c_str(), &h.ptr) == MPADNN_OK);

  const int T = 2;
  std::vector<double> demand = {30.0, 45.0};  // n_d = 1, column-major (load, period)
  mpadnn_projection* proj = nullptr;
  REQUIRE(mpadnn_projection_create(h.ptr, demand.data(), 1, T, 1, &proj) == MPADNN_OK);
  int n = 0;
  REQUIRE(mpadnn_projection_size(proj, &n) == MPADNN_OK);
  CHECK(n == 8);  // (2 gens + 2 storage slots) x 2 periods

  std::vector<double> z(static_cast<std::size_t>(n), 100.0);
  std::vector<double> x(static_cast<std::size_t>(n), 0.0);
  REQUIRE(mpadnn_projection_project(proj, z.data(), n, x.data()) == MPADNN_OK);
  for (double v : x) CHECK(std::isfinite(v));
  // balance: g1+g2-ch+dis == demand per period
  CHECK(x[0] + x[1] - x[2] + x[3] == doctest::Approx(30.0).epsilon(1e-7));
  CHECK(x[4] + x[5] - x[6] + x[7] == doctest::Approx(45.0).epsilon(1e-7));

  std::vector<double> grad(static_cast<std::size_t>(n), 1.0), gz(static_cast<std::size_t>(n));
  REQUIRE(mpadnn_projection_vjp(proj, grad.data(), n, gz.data()) == MPADNN_OK);
  for (double v : gz) CHECK(std::isfinite(v));

  // wrong length is rejected
  CHECK(mpadnn_projection_project(proj, z.data(), n - 1, x.data()) == MPADNN_ERR_DIMENSION);
  mpadnn_projection_free(proj);

  // vjp before project is a usage error
  mpadnn_projection* p2 = nullptr;
  REQUIRE(mpadnn_projection_create(h.ptr, demand.data(), 1, T, 1, &p2) == MPADNN_OK);
  CHECK(mpadnn_projection_vjp(p2, grad.data(), n, gz.data()) == MPADNN_ERR_CONFIG);
  mpadnn_projection_free(p2);
}

TEST_CASE("exact dispatch through the c surface, including infeasibility") {
  CaseHandle h;
  REQUIRE(mpadnn_case_load(fixture("toy3.case").c_str(), &h.ptr) == MPADNN_OK);
  std::vector<double> demand = {30.0, 45.0};
  std::vector<double> x(8);
  double cost = 0.0;
  REQUIRE(mpadnn_opf_solve(h.ptr, demand.data(), 1, 2, 1, x.data(), &cost) == MPADNN_OK);
  CHECK(cost > 0.0);
  CHECK(x[0] + x[1] - x[2] + x[3] == doctest::Approx(30.0).epsilon(1e-7));

  std::vector<double> too_much = {1000.0, 1000.0};
  CHECK(mpadnn_opf_solve(h.ptr, too_much.data(), 1, 2, 1, x.data(), &cost) ==
        MPADNN_ERR_INFEASIBLE);
}

TEST_CASE("gen-data workflow through the c surface produces a dataset") {
  fs::path dir = fs::temp_directory_path() / "mpadnn_capi_gendata";
  fs::remove_all(dir);
  mpadnn_gen_data_options opts;
  mpadnn_gen_data_options_init(&opts);
  std::string case_path = fixture("toy3.case");
  std::string out = dir.string();
  opts.case_path = case_path.c_str();
  opts.out_dir = out.c_str();
  opts.samples = 4;
  opts.horizon = 6;
  opts.seed = 11;
  char run_dir[512];
  REQUIRE(mpadnn_run_gen_data(&opts, run_dir, sizeof(run_dir)) == MPADNN_OK);
  CHECK(fs::exists(fs::path(run_dir) / "dataset.csv"));
  CHECK(fs::exists(fs::path(run_dir) / "manifest.json"));
  fs::remove_all(dir);
}
