#include "run/runner.hpp"

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "common.hpp"
#include "expt/dataset.hpp"
#include "expt/evaluate.hpp"
#include "grid/case.hpp"
#include "grid/network.hpp"
#include "nn/mlp.hpp"
#include "qp/feasibility.hpp"
#include "train/trainer.hpp"

namespace mpadnn::run {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string utc_timestamp() {
  auto now = std::chrono::system_clock::now();
  std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y%m%dT%H%M%SZ", &tm);
  return buf;
}

std::string ensure_run_dir(const std::string& requested, std::uint64_t seed) {
  std::string dir = requested;
  if (dir.empty()) dir = (fs::path("runs") / (utc_timestamp() + "_seed" + std::to_string(seed))).string();
  fs::create_directories(dir);
  return dir;
}

void write_manifest(const std::string& dir, const std::string& command, json config,
                    const std::string& case_fingerprint, std::uint64_t seed,
                    const std::vector<std::string>& outputs, const std::string& started) {
  json m;
  m["command"] = command;
  m["version"] = kVersion;
  m["case_fingerprint"] = case_fingerprint;
  m["seed"] = seed;
  m["config"] = std::move(config);
  m["outputs"] = outputs;
  m["started_utc"] = started;
  m["finished_utc"] = utc_timestamp();
  std::ofstream f(fs::path(dir) / "manifest.json");
  f << m.dump(2) << "\n";
}

std::string csv_num(double v) { return format_double(v); }

void write_labels(const std::string& dir, const std::vector<expt::Label>& labels,
                  const qp::DecisionLayout& layout) {
  std::ofstream sol(fs::path(dir) / "solutions.csv", std::ios::binary);
  sol << "scenario,hour,kind,index,value_mw\n";
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto& x = labels[i].x_star;
    for (int t = 0; t < layout.T; ++t) {
      for (int g = 0; g < layout.n_g; ++g)
        sol << i << "," << (t + 1) << ",g," << g << "," << csv_num(x(g, t)) << "\n";
      for (int e = 0; e < layout.n_e; ++e)
        sol << i << "," << (t + 1) << ",ch," << e << "," << csv_num(x(layout.n_g + e, t)) << "\n";
      for (int e = 0; e < layout.n_e; ++e)
        sol << i << "," << (t + 1) << ",dis," << e << ","
            << csv_num(x(layout.n_g + layout.n_e + e, t)) << "\n";
    }
  }

  std::ofstream sum(fs::path(dir) / "solve_summary.csv", std::ios::binary);
  sum << "scenario,status,objective,iterations,kkt_stationarity,kkt_primal_eq,kkt_primal_ineq,"
         "kkt_comp\n";
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto& l = labels[i];
    sum << i << ",optimal," << csv_num(l.cost) << "," << l.iterations << ","
        << csv_num(l.kkt.stationarity) << "," << csv_num(l.kkt.primal_eq) << ","
        << csv_num(l.kkt.primal_ineq) << "," << csv_num(l.kkt.comp) << "\n";
  }
}

std::vector<expt::Label> read_labels(const std::string& dir, const qp::DecisionLayout& layout,
                                     const grid::GridCase& c, std::size_t expected) {
  fs::path path = fs::path(dir) / "solutions.csv";
  std::ifstream f(path);
  if (!f) throw io_error("cannot open labels file " + path.string());
  std::string line;
  std::getline(f, line);
  if (line != "scenario,hour,kind,index,value_mw")
    throw parse_error("solutions.csv: unexpected header");
  std::vector<expt::Label> labels(expected);
  for (auto& l : labels) l.x_star = Eigen::MatrixXd::Zero(layout.p(), layout.T);
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::istringstream is(line);
    std::string s_id, s_hour, kind, s_idx, s_val;
    if (!std::getline(is, s_id, ',') || !std::getline(is, s_hour, ',') ||
        !std::getline(is, kind, ',') || !std::getline(is, s_idx, ',') || !std::getline(is, s_val))
      throw parse_error("solutions.csv: short row '" + line + "'");
    std::size_t id = std::stoul(s_id);
    int t = std::stoi(s_hour) - 1;
    int idx = std::stoi(s_idx);
    double v = std::stod(s_val);
    if (id >= expected || t < 0 || t >= layout.T) throw parse_error("solutions.csv: bad indices");
    int r;
    if (kind == "g")
      r = idx;
    else if (kind == "ch")
      r = layout.n_g + idx;
    else if (kind == "dis")
      r = layout.n_g + layout.n_e + idx;
    else
      throw parse_error("solutions.csv: unknown kind '" + kind + "'");
    labels[id].x_star(r, t) = v;
  }
  for (auto& l : labels) l.cost = expt::generation_cost(l.x_star, c);
  return labels;
}

}  // namespace

std::string run_gen_data(const GenDataOptions& opts) {
  const std::string started = utc_timestamp();
  grid::GridCase c = grid::load_case(opts.case_path);
  expt::DatasetSpec spec;
  spec.k = opts.samples;
  spec.horizon = opts.horizon;
  spec.load_scale = opts.load_scale;
  spec.noise = opts.noise;
  spec.shape = opts.shape;
  spec.seed = opts.seed;
  expt::Dataset ds = expt::generate_dataset(spec, c, opts.jobs);

  std::string dir = ensure_run_dir(opts.out_dir, opts.seed);
  expt::save_dataset(ds, dir);
  write_manifest(dir, "gen-data",
                 json{{"case", opts.case_path},
                      {"samples", opts.samples},
                      {"horizon", opts.horizon},
                      {"load_scale", opts.load_scale},
                      {"noise", opts.noise},
                      {"shape", opts.shape},
                      {"jobs", opts.jobs}},
                 c.fingerprint, opts.seed, {"dataset.csv"}, started);
  return dir;
}

std::string run_solve(const SolveOptions& opts) {
  const std::string started = utc_timestamp();
  grid::GridCase c = grid::load_case(opts.case_path);
  expt::Dataset ds = expt::load_dataset(opts.dataset_dir, c);

  auto gsf = grid::compute_gsf(c);
  auto maps = grid::build_incidence(c);
  qp::QpBuilder builder(c, gsf, maps, ds.spec.horizon, qp::BuildOptions{opts.line_limits, true});
  auto labels = expt::label_dataset(ds.scenarios, builder, c, opts.jobs);

  std::string dir = ensure_run_dir(opts.out_dir, ds.spec.seed);
  write_labels(dir, labels, builder.layout());
  write_manifest(dir, "solve",
                 json{{"case", opts.case_path},
                      {"dataset", opts.dataset_dir},
                      {"line_limits", opts.line_limits},
                      {"jobs", opts.jobs}},
                 c.fingerprint, ds.spec.seed, {"solutions.csv", "solve_summary.csv"}, started);
  if (opts.verbose)
    std::cerr << "[solve] labeled " << labels.size() << " scenarios -> " << dir << "\n";
  return dir;
}

std::string run_train(const TrainOptions& opts) {
  const std::string started = utc_timestamp();
  grid::GridCase c = grid::load_case(opts.case_path);
  expt::Dataset ds = expt::load_dataset(opts.dataset_dir, c);

  train::TrainConfig config;
  config.mode = train::parse_mode(opts.mode);
  config.max_epochs = opts.max_epochs;
  config.patience = opts.patience;
  config.learning_rate = opts.learning_rate;
  config.seed = opts.seed;
  config.split_train = opts.split_train;
  config.split_val = opts.split_val;
  config.split_test = opts.split_test;
  config.line_limits = opts.line_limits;
  config.jobs = opts.jobs;
  config.verbose = opts.verbose;

  std::vector<expt::Label> labels;
  const std::vector<expt::Label>* labels_ptr = nullptr;
  if (!opts.labels_dir.empty()) {
    auto gsf = grid::compute_gsf(c);
    auto maps = grid::build_incidence(c);
    qp::QpBuilder builder(c, gsf, maps, ds.spec.horizon, qp::BuildOptions{opts.line_limits, true});
    labels = read_labels(opts.labels_dir, builder.layout(), c, ds.scenarios.size());
    labels_ptr = &labels;
  }

  train::TrainResult result = train::train(c, ds.scenarios, labels_ptr, config, ds.spec.seed);

  std::string dir = ensure_run_dir(opts.out_dir, opts.seed);
  nn::save_checkpoint(result.checkpoint, (fs::path(dir) / "checkpoint.bin").string());

  {
    std::ofstream rec(fs::path(dir) / "train_record.csv", std::ios::binary);
    rec << "epoch,train_loss,val_mae_pu,val_gap_pct,degenerate,skipped,max_train_residual\n";
    for (const auto& e : result.record.epochs)
      rec << e.epoch << "," << csv_num(e.train_loss) << "," << csv_num(e.val_mae_pu) << ","
          << csv_num(e.val_gap_pct) << "," << e.degenerate << "," << e.skipped << ","
          << csv_num(e.max_train_residual) << "\n";
  }
  {
    std::ofstream tim(fs::path(dir) / "timings.csv", std::ios::binary);
    tim << "epoch,wall_seconds\n";
    for (const auto& e : result.record.epochs)
      tim << e.epoch << "," << csv_num(e.wall_seconds) << "\n";
  }
  {
    json split;
    split["train"] = result.split.train;
    split["val"] = result.split.val;
    split["test"] = result.split.test;
    std::ofstream sf(fs::path(dir) / "split.json");
    sf << split.dump(2) << "\n";
  }

  write_manifest(dir, "train",
                 json{{"case", opts.case_path},
                      {"dataset", opts.dataset_dir},
                      {"labels", opts.labels_dir},
                      {"mode", opts.mode},
                      {"max_epochs", opts.max_epochs},
                      {"patience", opts.patience},
                      {"learning_rate", opts.learning_rate},
                      {"split", {opts.split_train, opts.split_val, opts.split_test}},
                      {"line_limits", opts.line_limits},
                      {"best_epoch", result.record.best_epoch},
                      {"best_val_gap_pct", result.record.best_val_gap},
                      {"jobs", opts.jobs}},
                 c.fingerprint, opts.seed,
                 {"checkpoint.bin", "train_record.csv", "timings.csv", "split.json"}, started);
  return dir;
}

std::string run_eval(const EvalOptions& opts) {
  const std::string started = utc_timestamp();
  grid::GridCase c = grid::load_case(opts.case_path);
  expt::Dataset ds = expt::load_dataset(opts.dataset_dir, c);
  auto gsf = grid::compute_gsf(c);
  auto maps = grid::build_incidence(c);
  qp::QpBuilder builder(c, gsf, maps, ds.spec.horizon, qp::BuildOptions{opts.line_limits, true});

  // Table II protocol: models are trained once, evaluation happens on the
  // test split at each requested load scale.
  auto split = train::split_dataset(static_cast<int>(ds.scenarios.size()), ds.spec.seed,
                                    opts.split_train, opts.split_val, opts.split_test);
  std::vector<qp::DemandScenario> test_base;
  for (int i : split.test) test_base.push_back(ds.scenarios[static_cast<std::size_t>(i)]);
  if (test_base.empty()) throw validation_error("run_eval: empty test split");

  struct ModelEntry {
    std::string name;
    nn::Checkpoint ck;
  };
  std::vector<ModelEntry> models;
  for (const auto& path : opts.checkpoints) {
    ModelEntry e;
    e.ck = nn::load_checkpoint(path);
    if (e.ck.case_fingerprint != c.fingerprint)
      throw validation_error("checkpoint " + path + " was trained on a different case");
    if (e.ck.horizon != ds.spec.horizon)
      throw validation_error("checkpoint " + path + " horizon mismatch");
    e.name = e.ck.mode;
    models.push_back(std::move(e));
  }

  std::string dir = ensure_run_dir(opts.out_dir, ds.spec.seed);
  std::ofstream t2(fs::path(dir) / "table2.csv", std::ios::binary);
  t2 << "scale,method,mae_pu,opt_gap_pct\n";
  std::ofstream t3(fs::path(dir) / "table3.csv", std::ios::binary);
  t3 << "scale,method,violation_samples,samples\n";
  std::ofstream t4(fs::path(dir) / "table4.csv", std::ios::binary);
  t4 << "scale,hour,method,mean_cost\n";
  std::ofstream feas(fs::path(dir) / "feasibility.csv", std::ios::binary);
  feas << "scale,method,max_residual_mw\n";
  std::ostringstream summary;
  summary << "evaluation of " << models.size() << " model(s) on " << test_base.size()
          << " test scenarios, case " << c.name << "\n";

  qp::BuildOptions feas_opts{opts.line_limits, true};
  for (double scale : opts.scales) {
    auto demands = expt::scale_scenarios(test_base, scale);
    auto labels = expt::label_dataset(demands, builder, c, opts.jobs);

    // exact-solver row
    {
      std::vector<Eigen::MatrixXd> outputs;
      outputs.reserve(labels.size());
      for (const auto& l : labels) outputs.push_back(l.x_star);
      auto rep = expt::evaluate(outputs, labels, demands, c, gsf, feas_opts);
      t2 << csv_num(scale) << ",solver," << csv_num(rep.mae_pu) << "," << csv_num(rep.gap_pct)
         << "\n";
      t3 << csv_num(scale) << ",solver," << rep.violation_samples << "," << rep.samples << "\n";
      for (int hour : opts.hours)
        if (hour >= 1 && hour <= ds.spec.horizon)
          t4 << csv_num(scale) << "," << hour << ",solver,"
             << csv_num(rep.hourly_cost_mean[hour - 1]) << "\n";
      feas << csv_num(scale) << ",solver," << csv_num(rep.max_feasibility_residual) << "\n";
    }

    for (const auto& model : models) {
      const int n = static_cast<int>(demands.size());
      std::vector<Eigen::MatrixXd> outputs(static_cast<std::size_t>(n));
      const int threads = std::max(1, std::min(opts.jobs, n));
      auto infer_range = [&](int begin, int end) {
        train::ModelRunner runner(c, ds.spec.horizon, opts.line_limits);
        for (int i = begin; i < end; ++i)
          outputs[static_cast<std::size_t>(i)] =
              runner.infer(model.ck, demands[static_cast<std::size_t>(i)]);
      };
      if (threads == 1) {
        infer_range(0, n);
      } else {
        std::vector<std::thread> pool;
        std::vector<std::exception_ptr> errors(static_cast<std::size_t>(threads));
        int chunk = (n + threads - 1) / threads;
        for (int w = 0; w < threads; ++w) {
          int begin = w * chunk, end = std::min(n, begin + chunk);
          pool.emplace_back([&, begin, end, w] {
            try {
              infer_range(begin, end);
            } catch (...) {
              errors[static_cast<std::size_t>(w)] = std::current_exception();
            }
          });
        }
        for (auto& t : pool) t.join();
        for (auto& e : errors)
          if (e) std::rethrow_exception(e);
      }

      auto rep = expt::evaluate(outputs, labels, demands, c, gsf, feas_opts);
      t2 << csv_num(scale) << "," << model.name << "," << csv_num(rep.mae_pu) << ","
         << csv_num(rep.gap_pct) << "\n";
      t3 << csv_num(scale) << "," << model.name << "," << rep.violation_samples << ","
         << rep.samples << "\n";
      for (int hour : opts.hours)
        if (hour >= 1 && hour <= ds.spec.horizon)
          t4 << csv_num(scale) << "," << hour << "," << model.name << ","
             << csv_num(rep.hourly_cost_mean[hour - 1]) << "\n";
      feas << csv_num(scale) << "," << model.name << "," << csv_num(rep.max_feasibility_residual)
           << "\n";
      summary << "scale " << scale << " " << model.name << ": mae " << rep.mae_pu << " p.u., gap "
              << rep.gap_pct << "%, ramp violations " << rep.violation_samples << "/"
              << rep.samples << "\n";
    }
  }

  summary << "\nreference (full-scale 10k-sample protocol, context only):\n";
  for (const auto& row : expt::reference_context())
    summary << "  scale " << row.scale << " " << row.method << ": mae " << row.mae_pu
            << " p.u., gap " << row.gap_pct << "%\n";
  std::ofstream sf(fs::path(dir) / "summary.txt", std::ios::binary);
  sf << summary.str();

  json cfg{{"case", opts.case_path},
           {"dataset", opts.dataset_dir},
           {"checkpoints", opts.checkpoints},
           {"scales", opts.scales},
           {"hours", opts.hours},
           {"line_limits", opts.line_limits},
           {"jobs", opts.jobs}};
  write_manifest(dir, "eval", cfg, c.fingerprint, ds.spec.seed,
                 {"table2.csv", "table3.csv", "table4.csv", "feasibility.csv", "summary.txt"},
                 started);
  if (opts.verbose) std::cerr << "[eval] wrote reports to " << dir << "\n";
  return dir;
}

}  // namespace mpadnn::run
