#include "expt/dataset.hpp"

#include <array>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "common.hpp"
#include "grid/network.hpp"
#include "solver/ipm.hpp"

namespace mpadnn::expt {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::array<double, 24> kDefaultShape = {
    0.68, 0.64, 0.62, 0.62, 0.63, 0.66, 0.72, 0.77, 0.82, 0.86, 0.89, 0.90,
    0.89, 0.87, 0.85, 0.88, 0.92, 0.95, 0.97, 0.94, 0.89, 0.82, 0.76, 0.70};

// Calm profile with a single pronounced step into hour 16.
constexpr std::array<double, 24> kSteepShape = {
    0.760, 0.752, 0.746, 0.741, 0.738, 0.737, 0.740, 0.748, 0.758, 0.770, 0.782, 0.794,
    0.805, 0.814, 0.822, 0.844, 0.852, 0.858, 0.861, 0.858, 0.850, 0.838, 0.824, 0.810};

}  // namespace

Eigen::VectorXd load_shape(const std::string& name, int horizon) {
  const std::array<double, 24>* base = nullptr;
  if (name == "default")
    base = &kDefaultShape;
  else if (name == "steep")
    base = &kSteepShape;
  else
    throw config_error("unknown load shape '" + name + "' (expected 'default' or 'steep')");
  if (horizon < 1) throw dimension_error("load_shape: horizon must be >= 1");
  Eigen::VectorXd s(horizon);
  for (int t = 0; t < horizon; ++t) {
    // nearest-hour sampling keeps T=24 exact and short horizons sensible
    int idx = horizon == 24 ? t : (t * 24) / horizon;
    s[t] = (*base)[static_cast<std::size_t>(idx)];
  }
  return s;
}

Dataset generate_dataset(const DatasetSpec& spec, const grid::GridCase& c, int jobs) {
  if (spec.k < 1) throw validation_error("generate_dataset: K must be >= 1");
  if (!(spec.load_scale > 0.0)) throw validation_error("generate_dataset: load_scale must be > 0");
  if (spec.noise < 0.0 || spec.noise >= 1.0)
    throw validation_error("generate_dataset: noise must be in [0, 1)");

  const Eigen::VectorXd shape = load_shape(spec.shape, spec.horizon);
  const int nd = c.n_d();
  const int T = spec.horizon;

  auto gsf = grid::compute_gsf(c);
  auto maps = grid::build_incidence(c);
  qp::QpBuilder builder(c, gsf, maps, T);

  Dataset ds;
  ds.spec = spec;
  ds.case_fingerprint = c.fingerprint;
  ds.scenarios.assign(static_cast<std::size_t>(spec.k), {});
  ds.attempts.assign(static_cast<std::size_t>(spec.k), -1);

  auto draw = [&](int scenario, int attempt) {
    Rng rng(derive_seed(spec.seed, static_cast<std::uint64_t>(scenario),
                        static_cast<std::uint64_t>(attempt)));
    Eigen::MatrixXd p_d(nd, T);
    for (int d = 0; d < nd; ++d)
      for (int t = 0; t < T; ++t) {
        double noise = spec.noise > 0.0 ? rng.next_uniform(-spec.noise, spec.noise) : 0.0;
        p_d(d, t) = c.loads[static_cast<std::size_t>(d)].p_nominal * shape[t] * (1.0 + noise) *
                    spec.load_scale;
      }
    return qp::DemandScenario{std::move(p_d)};
  };

  auto worker_range = [&](int begin, int end) {
    solver::IpmSolver ipm;
    for (int i = begin; i < end; ++i) {
      for (int attempt = 0; attempt < 10; ++attempt) {
        qp::DemandScenario cand = draw(i, attempt);
        qp::QpData data = builder.build(cand);
        auto prog = solver::make_opf_program(data, c);
        auto res = ipm.solve(prog);
        if (res.status == solver::SolveStatus::Optimal) {
          ds.scenarios[static_cast<std::size_t>(i)] = std::move(cand);
          ds.attempts[static_cast<std::size_t>(i)] = attempt;
          break;
        }
      }
      if (ds.attempts[static_cast<std::size_t>(i)] < 0)
        throw Error(ErrorCode::Infeasible,
                    "generate_dataset: scenario " + std::to_string(i) +
                        " infeasible after 10 draws (demand exceeds capacity?)");
    }
  };

  const int threads = std::max(1, std::min(jobs, spec.k));
  if (threads == 1) {
    worker_range(0, spec.k);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(threads));
    int chunk = (spec.k + threads - 1) / threads;
    for (int w = 0; w < threads; ++w) {
      int begin = w * chunk, end = std::min(spec.k, begin + chunk);
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
  return ds;
}

std::vector<qp::DemandScenario> scale_scenarios(const std::vector<qp::DemandScenario>& scenarios,
                                                double factor) {
  std::vector<qp::DemandScenario> out;
  out.reserve(scenarios.size());
  for (const auto& s : scenarios) out.push_back(qp::DemandScenario{s.p_d * factor});
  return out;
}

std::string dataset_csv_path(const std::string& dir) {
  return (fs::path(dir) / "dataset.csv").string();
}

void save_dataset(const Dataset& ds, const std::string& dir) {
  fs::create_directories(dir);
  std::ofstream csv(dataset_csv_path(dir), std::ios::binary);
  if (!csv) throw io_error("cannot write " + dataset_csv_path(dir));
  csv << "scenario,hour,load_index,demand_mw\n";
  for (std::size_t i = 0; i < ds.scenarios.size(); ++i) {
    const auto& p = ds.scenarios[i].p_d;
    for (int t = 0; t < p.cols(); ++t)
      for (int d = 0; d < p.rows(); ++d)
        csv << i << "," << (t + 1) << "," << d << "," << format_double(p(d, t)) << "\n";
  }
  if (!csv) throw io_error("dataset write failed");
  csv.close();

  json manifest;
  manifest["kind"] = "dataset";
  manifest["case_fingerprint"] = ds.case_fingerprint;
  manifest["k"] = ds.spec.k;
  manifest["load_scale"] = ds.spec.load_scale;
  manifest["seed"] = ds.spec.seed;
  manifest["horizon"] = ds.spec.horizon;
  manifest["noise"] = ds.spec.noise;
  manifest["shape"] = ds.spec.shape;
  manifest["resample_attempts"] = ds.attempts;
  std::ofstream mf(fs::path(dir) / "manifest.json");
  mf << manifest.dump(2) << "\n";
}

Dataset load_dataset(const std::string& dir, const grid::GridCase& c) {
  std::ifstream mf(fs::path(dir) / "manifest.json");
  if (!mf) throw io_error("cannot open dataset manifest in " + dir);
  json manifest = json::parse(mf, nullptr, true);
  if (manifest.value("kind", "") != "dataset") throw parse_error("manifest is not a dataset manifest");

  Dataset ds;
  ds.spec.k = manifest.at("k").get<int>();
  ds.spec.load_scale = manifest.at("load_scale").get<double>();
  ds.spec.seed = manifest.at("seed").get<std::uint64_t>();
  ds.spec.horizon = manifest.at("horizon").get<int>();
  ds.spec.noise = manifest.at("noise").get<double>();
  ds.spec.shape = manifest.value("shape", "default");
  ds.case_fingerprint = manifest.at("case_fingerprint").get<std::string>();
  if (manifest.contains("resample_attempts"))
    ds.attempts = manifest.at("resample_attempts").get<std::vector<int>>();

  if (!c.fingerprint.empty() && ds.case_fingerprint != c.fingerprint)
    throw validation_error("dataset was generated from a different case file (fingerprint mismatch)");

  const int nd = c.n_d();
  const int T = ds.spec.horizon;
  ds.scenarios.assign(static_cast<std::size_t>(ds.spec.k),
                      qp::DemandScenario{Eigen::MatrixXd::Constant(nd, T, -1.0)});

  std::ifstream csv(dataset_csv_path(dir));
  if (!csv) throw io_error("cannot open " + dataset_csv_path(dir));
  std::string line;
  std::getline(csv, line);  // header
  if (line != "scenario,hour,load_index,demand_mw")
    throw parse_error("dataset.csv: unexpected header '" + line + "'");
  while (std::getline(csv, line)) {
    if (line.empty()) continue;
    std::istringstream is(line);
    std::string tok;
    long idx[3];
    for (int f = 0; f < 3; ++f) {
      if (!std::getline(is, tok, ',')) throw parse_error("dataset.csv: short row '" + line + "'");
      idx[f] = std::stol(tok);
    }
    if (!std::getline(is, tok)) throw parse_error("dataset.csv: short row '" + line + "'");
    double mw = std::stod(tok);
    if (idx[0] < 0 || idx[0] >= ds.spec.k || idx[1] < 1 || idx[1] > T || idx[2] < 0 || idx[2] >= nd)
      throw parse_error("dataset.csv: index out of range in row '" + line + "'");
    ds.scenarios[static_cast<std::size_t>(idx[0])].p_d(idx[2], idx[1] - 1) = mw;
  }
  for (const auto& s : ds.scenarios)
    if ((s.p_d.array() < 0.0).any()) throw parse_error("dataset.csv: missing demand entries");
  return ds;
}

}  // namespace mpadnn::expt
