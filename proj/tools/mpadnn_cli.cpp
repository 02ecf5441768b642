// Command-line front end for the mpadnn shared library. All heavy lifting
// happens behind the C API; this binary only parses flags and reports status.

#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mpadnn.h"

namespace {

// 0 = success, 1 = runtime/numerical failure, 2 = usage/validation error.
int exit_code_for(mpadnn_status status) {
  switch (status) {
    case MPADNN_OK:
      return 0;
    case MPADNN_ERR_INVALID_ARG:
    case MPADNN_ERR_IO:
    case MPADNN_ERR_PARSE:
    case MPADNN_ERR_VALIDATION:
    case MPADNN_ERR_CONFIG:
      return 2;
    default:
      return 1;
  }
}

int report(mpadnn_status status, const char* run_dir) {
  if (status == MPADNN_OK) {
    std::printf("ok: %s\n", run_dir);
    return 0;
  }
  std::fprintf(stderr, "error (%s): %s\n", mpadnn_status_string(status), mpadnn_last_error());
  return exit_code_for(status);
}

std::string join(const std::vector<std::string>& parts, char sep) {
  std::string out;
  for (const auto& p : parts) {
    if (!out.empty()) out.push_back(sep);
    out += p;
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mpadnn: multi-period DC dispatch surrogate pipeline"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Read defaults from an INI/TOML file (CLI flags win)");

  char run_dir[4096] = {0};

  // ---- gen-data ----
  mpadnn_gen_data_options gd;
  mpadnn_gen_data_options_init(&gd);
  std::string gd_case, gd_out, gd_shape = "default";
  int gd_samples = gd.samples, gd_horizon = gd.horizon, gd_jobs = gd.jobs;
  double gd_scale = gd.load_scale, gd_noise = gd.noise;
  std::uint64_t gd_seed = gd.seed;
  auto* gen = app.add_subcommand("gen-data", "Generate a demand-scenario dataset");
  gen->add_option("--case", gd_case, "Case file")->required();
  gen->add_option("--out", gd_out, "Output directory (default runs/<timestamp>_seed<seed>)");
  gen->add_option("--k,--samples", gd_samples, "Number of scenarios");
  gen->add_option("--horizon", gd_horizon, "Periods per scenario");
  gen->add_option("--scale", gd_scale, "Uniform load scale");
  gen->add_option("--noise", gd_noise, "Per-(load,hour) uniform noise half-width");
  gen->add_option("--shape", gd_shape, "Load shape preset: default | steep");
  gen->add_option("--seed", gd_seed, "RNG seed");
  gen->add_option("--jobs", gd_jobs, "Feasibility-check threads");

  // ---- solve ----
  mpadnn_solve_options so;
  mpadnn_solve_options_init(&so);
  std::string so_case, so_dataset, so_out;
  int so_jobs = so.jobs, so_verbose = 0;
  bool so_no_lines = false;
  auto* solve = app.add_subcommand("solve", "Label a dataset with the exact solver");
  solve->add_option("--case", so_case, "Case file")->required();
  solve->add_option("--dataset", so_dataset, "Dataset directory")->required();
  solve->add_option("--out", so_out, "Output directory");
  solve->add_flag("--no-line-limits", so_no_lines, "Drop line-flow constraints");
  solve->add_option("--jobs", so_jobs, "Solver threads");
  solve->add_flag("--verbose", so_verbose, "Progress output");

  // ---- train ----
  mpadnn_train_options tr;
  mpadnn_train_options_init(&tr);
  std::string tr_case, tr_dataset, tr_labels, tr_out, tr_mode = "mpa_unsup";
  int tr_epochs = tr.max_epochs, tr_patience = tr.patience, tr_jobs = tr.jobs, tr_verbose = 0;
  double tr_lr = tr.learning_rate;
  std::vector<double> tr_split{0.5, 0.3, 0.2};
  std::uint64_t tr_seed = tr.seed;
  bool tr_no_lines = false;
  auto* train = app.add_subcommand("train", "Train a dispatch surrogate");
  train->add_option("--case", tr_case, "Case file")->required();
  train->add_option("--dataset", tr_dataset, "Dataset directory")->required();
  train->add_option("--labels", tr_labels, "Labels directory (required for supervised modes)");
  train->add_option("--out", tr_out, "Output directory");
  train->add_option("--mode", tr_mode, "mpa_unsup | mpa_sup | mpp_sup | spa_unsup");
  train->add_option("--epochs", tr_epochs, "Maximum epochs");
  train->add_option("--patience", tr_patience, "Early-stop patience (validation gap)");
  train->add_option("--lr", tr_lr, "Learning rate");
  train->add_option("--split", tr_split, "Train/val/test ratios")->expected(3);
  train->add_option("--seed", tr_seed, "RNG seed");
  train->add_flag("--no-line-limits", tr_no_lines, "Drop line-flow constraints");
  train->add_option("--jobs", tr_jobs, "Validation threads");
  train->add_flag("--verbose", tr_verbose, "Per-epoch progress");

  // ---- eval ----
  mpadnn_eval_options ev;
  mpadnn_eval_options_init(&ev);
  std::string ev_case, ev_dataset, ev_out;
  std::vector<std::string> ev_ckpts;
  std::string ev_scales = "1.0,1.025,1.05", ev_hours = "15,16,17";
  std::vector<double> ev_split{0.5, 0.3, 0.2};
  int ev_jobs = ev.jobs, ev_verbose = 0;
  bool ev_no_lines = false;
  auto* eval = app.add_subcommand("eval", "Evaluate checkpoints across load scales");
  eval->add_option("--case", ev_case, "Case file")->required();
  eval->add_option("--dataset", ev_dataset, "Scale-1.0 dataset directory")->required();
  eval->add_option("--checkpoint", ev_ckpts, "Checkpoint path (repeatable)")->required();
  eval->add_option("--out", ev_out, "Output directory");
  eval->add_option("--scales", ev_scales, "Comma-separated load scales");
  eval->add_option("--hours", ev_hours, "Comma-separated hours for the cost table");
  eval->add_option("--split", ev_split, "Train/val/test ratios used at training time")->expected(3);
  eval->add_flag("--no-line-limits", ev_no_lines, "Drop line-flow constraints");
  eval->add_option("--jobs", ev_jobs, "Evaluation threads");
  eval->add_flag("--verbose", ev_verbose, "Progress output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  if (gen->parsed()) {
    gd.case_path = gd_case.c_str();
    gd.out_dir = gd_out.c_str();
    gd.samples = gd_samples;
    gd.horizon = gd_horizon;
    gd.load_scale = gd_scale;
    gd.noise = gd_noise;
    gd.shape = gd_shape.c_str();
    gd.seed = gd_seed;
    gd.jobs = gd_jobs;
    return report(mpadnn_run_gen_data(&gd, run_dir, sizeof(run_dir)), run_dir);
  }
  if (solve->parsed()) {
    so.case_path = so_case.c_str();
    so.dataset_dir = so_dataset.c_str();
    so.out_dir = so_out.c_str();
    so.enforce_line_limits = so_no_lines ? 0 : 1;
    so.jobs = so_jobs;
    so.verbose = so_verbose;
    return report(mpadnn_run_solve(&so, run_dir, sizeof(run_dir)), run_dir);
  }
  if (train->parsed()) {
    tr.case_path = tr_case.c_str();
    tr.dataset_dir = tr_dataset.c_str();
    tr.labels_dir = tr_labels.c_str();
    tr.out_dir = tr_out.c_str();
    tr.mode = tr_mode.c_str();
    tr.max_epochs = tr_epochs;
    tr.patience = tr_patience;
    tr.learning_rate = tr_lr;
    tr.split_train = tr_split[0];
    tr.split_val = tr_split[1];
    tr.split_test = tr_split[2];
    tr.seed = tr_seed;
    tr.enforce_line_limits = tr_no_lines ? 0 : 1;
    tr.jobs = tr_jobs;
    tr.verbose = tr_verbose;
    return report(mpadnn_run_train(&tr, run_dir, sizeof(run_dir)), run_dir);
  }
  if (eval->parsed()) {
    std::string ckpts = join(ev_ckpts, ';');
    ev.case_path = ev_case.c_str();
    ev.dataset_dir = ev_dataset.c_str();
    ev.checkpoints = ckpts.c_str();
    ev.out_dir = ev_out.c_str();
    ev.scales = ev_scales.c_str();
    ev.hours = ev_hours.c_str();
    ev.split_train = ev_split[0];
    ev.split_val = ev_split[1];
    ev.split_test = ev_split[2];
    ev.enforce_line_limits = ev_no_lines ? 0 : 1;
    ev.jobs = ev_jobs;
    ev.verbose = ev_verbose;
    return report(mpadnn_run_eval(&ev, run_dir, sizeof(run_dir)), run_dir);
  }
  return 2;
}
