#include "mpadnn.h"

#include <cstring>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "common.hpp"
#include "diff/projection_diff.hpp"
#include "grid/case.hpp"
#include "grid/network.hpp"
#include "qp/builder.hpp"
#include "run/runner.hpp"
#include "solver/ipm.hpp"

using namespace mpadnn;

namespace {

thread_local std::string t_last_error;

mpadnn_status status_from(ErrorCode code) {
  switch (code) {
    case ErrorCode::Io: return MPADNN_ERR_IO;
    case ErrorCode::Parse: return MPADNN_ERR_PARSE;
    case ErrorCode::Validation: return MPADNN_ERR_VALIDATION;
    case ErrorCode::Dimension: return MPADNN_ERR_DIMENSION;
    case ErrorCode::Infeasible: return MPADNN_ERR_INFEASIBLE;
    case ErrorCode::MaxIterations: return MPADNN_ERR_MAX_ITERATIONS;
    case ErrorCode::DegenerateActiveSet: return MPADNN_ERR_DEGENERATE;
    case ErrorCode::Config: return MPADNN_ERR_CONFIG;
    case ErrorCode::Internal: return MPADNN_ERR_INTERNAL;
  }
  return MPADNN_ERR_INTERNAL;
}

template <typename Fn>
mpadnn_status guarded(Fn&& fn) {
  try {
    fn();
    t_last_error.clear();
    return MPADNN_OK;
  } catch (const Error& e) {
    t_last_error = e.what();
    return status_from(e.code());
  } catch (const std::exception& e) {
    t_last_error = e.what();
    return MPADNN_ERR_INTERNAL;
  } catch (...) {
    t_last_error = "unknown error";
    return MPADNN_ERR_INTERNAL;
  }
}

mpadnn_status invalid_arg(const char* msg) {
  t_last_error = msg;
  return MPADNN_ERR_INVALID_ARG;
}

void copy_out_dir(const std::string& dir, char* buf, size_t buflen) {
  if (buf && buflen > 0) {
    std::strncpy(buf, dir.c_str(), buflen - 1);
    buf[buflen - 1] = '\0';
  }
}

std::vector<double> parse_double_list(const char* csv) {
  std::vector<double> out;
  if (!csv) return out;
  std::istringstream is(csv);
  std::string tok;
  while (std::getline(is, tok, ','))
    if (!tok.empty()) out.push_back(std::stod(tok));
  return out;
}

std::vector<int> parse_int_list(const char* csv) {
  std::vector<int> out;
  if (!csv) return out;
  std::istringstream is(csv);
  std::string tok;
  while (std::getline(is, tok, ','))
    if (!tok.empty()) out.push_back(std::stoi(tok));
  return out;
}

std::vector<std::string> parse_path_list(const char* semicolon) {
  std::vector<std::string> out;
  if (!semicolon) return out;
  std::istringstream is(semicolon);
  std::string tok;
  while (std::getline(is, tok, ';'))
    if (!tok.empty()) out.push_back(tok);
  return out;
}

}  // namespace

struct mpadnn_case {
  grid::GridCase c;
  grid::GsfMatrix gsf;
  grid::IncidenceMaps maps;
};

struct mpadnn_projection {
  qp::QpData data;
  solver::IpmSolver ipm;
  std::optional<solver::SolveResult> last;
  std::optional<diff::VjpWorkspace> vjp_ws;
};

extern "C" {

const char* mpadnn_status_string(mpadnn_status status) {
  switch (status) {
    case MPADNN_OK: return "ok";
    case MPADNN_ERR_INVALID_ARG: return "invalid argument";
    case MPADNN_ERR_IO: return "io error";
    case MPADNN_ERR_PARSE: return "parse error";
    case MPADNN_ERR_VALIDATION: return "validation error";
    case MPADNN_ERR_DIMENSION: return "dimension mismatch";
    case MPADNN_ERR_INFEASIBLE: return "infeasible";
    case MPADNN_ERR_MAX_ITERATIONS: return "iteration limit reached";
    case MPADNN_ERR_DEGENERATE: return "degenerate active set";
    case MPADNN_ERR_CONFIG: return "configuration error";
    case MPADNN_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* mpadnn_last_error(void) { return t_last_error.c_str(); }

void mpadnn_version(int* major, int* minor, int* patch) {
  if (major) *major = 0;
  if (minor) *minor = 1;
  if (patch) *patch = 0;
}

mpadnn_status mpadnn_case_load(const char* path, mpadnn_case** out_case) {
  if (!path || !out_case) return invalid_arg("mpadnn_case_load: null argument");
  *out_case = nullptr;
  return guarded([&] {
    auto holder = std::make_unique<mpadnn_case>();
    holder->c = grid::load_case(path);
    holder->gsf = grid::compute_gsf(holder->c);
    holder->maps = grid::build_incidence(holder->c);
    *out_case = holder.release();
  });
}

void mpadnn_case_free(mpadnn_case* c) { delete c; }

mpadnn_status mpadnn_case_dims(const mpadnn_case* c, int* n_bus, int* n_gen, int* n_load,
                               int* n_line, int* n_ess) {
  if (!c) return invalid_arg("mpadnn_case_dims: null case");
  if (n_bus) *n_bus = c->c.n_b;
  if (n_gen) *n_gen = c->c.n_g();
  if (n_load) *n_load = c->c.n_d();
  if (n_line) *n_line = c->c.n_l();
  if (n_ess) *n_ess = c->c.n_e();
  return MPADNN_OK;
}

mpadnn_status mpadnn_case_fingerprint(const mpadnn_case* c, char* buf, size_t buflen) {
  if (!c || !buf) return invalid_arg("mpadnn_case_fingerprint: null argument");
  if (buflen < 17) return invalid_arg("mpadnn_case_fingerprint: buffer must hold 17 bytes");
  std::strncpy(buf, c->c.fingerprint.c_str(), buflen - 1);
  buf[buflen - 1] = '\0';
  return MPADNN_OK;
}

mpadnn_status mpadnn_projection_create(const mpadnn_case* c, const double* demand, int n_load,
                                       int horizon, int enforce_line_limits,
                                       mpadnn_projection** out) {
  if (!c || !demand || !out) return invalid_arg("mpadnn_projection_create: null argument");
  *out = nullptr;
  return guarded([&] {
    if (n_load != c->c.n_d())
      throw dimension_error("projection_create: expected " + std::to_string(c->c.n_d()) +
                            " loads, got " + std::to_string(n_load));
    if (horizon < 1) throw dimension_error("projection_create: horizon must be >= 1");
    qp::DemandScenario scen{
        Eigen::Map<const Eigen::MatrixXd>(demand, n_load, horizon)};
    qp::QpBuilder builder(c->c, c->gsf, c->maps, horizon,
                          qp::BuildOptions{enforce_line_limits != 0, true});
    auto holder = std::make_unique<mpadnn_projection>();
    holder->data = builder.build(scen);
    *out = holder.release();
  });
}

void mpadnn_projection_free(mpadnn_projection* p) { delete p; }

mpadnn_status mpadnn_projection_size(const mpadnn_projection* p, int* n_vars) {
  if (!p || !n_vars) return invalid_arg("mpadnn_projection_size: null argument");
  *n_vars = p->data.n();
  return MPADNN_OK;
}

mpadnn_status mpadnn_projection_project(mpadnn_projection* p, const double* z, int n,
                                        double* x_out) {
  if (!p || !z || !x_out) return invalid_arg("mpadnn_projection_project: null argument");
  return guarded([&] {
    if (n != p->data.n())
      throw dimension_error("project: expected length " + std::to_string(p->data.n()));
    Eigen::Map<const Eigen::VectorXd> zv(z, n);
    auto prog = solver::make_projection_program(p->data, zv);
    auto res = p->ipm.solve(prog, p->last ? &*p->last : nullptr);
    if (res.status == solver::SolveStatus::Infeasible)
      throw Error(ErrorCode::Infeasible, "projection: feasible set is empty");
    if (res.status != solver::SolveStatus::Optimal)
      throw Error(ErrorCode::MaxIterations, "projection: iteration limit reached");
    Eigen::Map<Eigen::VectorXd>(x_out, n) = res.x_star;
    p->vjp_ws.reset();
    p->last = std::move(res);
  });
}

mpadnn_status mpadnn_projection_vjp(mpadnn_projection* p, const double* grad_x, int n,
                                    double* grad_z_out) {
  if (!p || !grad_x || !grad_z_out) return invalid_arg("mpadnn_projection_vjp: null argument");
  return guarded([&] {
    if (!p->last) throw Error(ErrorCode::Config, "vjp: call project first");
    if (n != p->data.n())
      throw dimension_error("vjp: expected length " + std::to_string(p->data.n()));
    if (!p->vjp_ws) p->vjp_ws = diff::VjpWorkspace::build(*p->last, p->data);
    Eigen::Map<const Eigen::VectorXd> g(grad_x, n);
    Eigen::Map<Eigen::VectorXd>(grad_z_out, n) = p->vjp_ws->vjp(g);
  });
}

mpadnn_status mpadnn_opf_solve(const mpadnn_case* c, const double* demand, int n_load, int horizon,
                               int enforce_line_limits, double* x_out, double* objective_out) {
  if (!c || !demand) return invalid_arg("mpadnn_opf_solve: null argument");
  return guarded([&] {
    if (n_load != c->c.n_d())
      throw dimension_error("opf_solve: expected " + std::to_string(c->c.n_d()) + " loads");
    if (horizon < 1) throw dimension_error("opf_solve: horizon must be >= 1");
    qp::DemandScenario scen{Eigen::Map<const Eigen::MatrixXd>(demand, n_load, horizon)};
    qp::QpBuilder builder(c->c, c->gsf, c->maps, horizon,
                          qp::BuildOptions{enforce_line_limits != 0, true});
    qp::QpData data = builder.build(scen);
    auto prog = solver::make_opf_program(data, c->c);
    solver::IpmSolver ipm;
    auto res = ipm.solve(prog);
    if (res.status == solver::SolveStatus::Infeasible)
      throw Error(ErrorCode::Infeasible, "opf_solve: scenario infeasible");
    if (res.status != solver::SolveStatus::Optimal)
      throw Error(ErrorCode::MaxIterations, "opf_solve: iteration limit reached");
    if (x_out) Eigen::Map<Eigen::VectorXd>(x_out, res.x_star.size()) = res.x_star;
    if (objective_out) {
      // report the pure generation cost, without the tiny regularization term
      double cost = 0.0;
      const auto& layout = data.layout();
      for (int t = 0; t < layout.T; ++t)
        for (int g = 0; g < layout.n_g; ++g)
          cost += c->c.generators[static_cast<std::size_t>(g)].cost_at(t) *
                  res.x_star[layout.gen_index(t, g)];
      *objective_out = cost;
    }
  });
}

void mpadnn_gen_data_options_init(mpadnn_gen_data_options* opts) {
  if (!opts) return;
  *opts = {};
  opts->samples = 500;
  opts->horizon = 24;
  opts->load_scale = 1.0;
  opts->noise = 0.10;
  opts->shape = "default";
  opts->seed = 7;
  opts->jobs = 1;
}

mpadnn_status mpadnn_run_gen_data(const mpadnn_gen_data_options* opts, char* out_dir_buf,
                                  size_t out_dir_buflen) {
  if (!opts || !opts->case_path) return invalid_arg("run_gen_data: null options or case_path");
  return guarded([&] {
    run::GenDataOptions o;
    o.case_path = opts->case_path;
    o.out_dir = opts->out_dir ? opts->out_dir : "";
    o.samples = opts->samples;
    o.horizon = opts->horizon;
    o.load_scale = opts->load_scale;
    o.noise = opts->noise;
    o.shape = opts->shape ? opts->shape : "default";
    o.seed = opts->seed;
    o.jobs = opts->jobs;
    copy_out_dir(run::run_gen_data(o), out_dir_buf, out_dir_buflen);
  });
}

void mpadnn_solve_options_init(mpadnn_solve_options* opts) {
  if (!opts) return;
  *opts = {};
  opts->enforce_line_limits = 1;
  opts->jobs = 1;
}

mpadnn_status mpadnn_run_solve(const mpadnn_solve_options* opts, char* out_dir_buf,
                               size_t out_dir_buflen) {
  if (!opts || !opts->case_path || !opts->dataset_dir)
    return invalid_arg("run_solve: null options, case_path or dataset_dir");
  return guarded([&] {
    run::SolveOptions o;
    o.case_path = opts->case_path;
    o.dataset_dir = opts->dataset_dir;
    o.out_dir = opts->out_dir ? opts->out_dir : "";
    o.line_limits = opts->enforce_line_limits != 0;
    o.jobs = opts->jobs;
    o.verbose = opts->verbose;
    copy_out_dir(run::run_solve(o), out_dir_buf, out_dir_buflen);
  });
}

void mpadnn_train_options_init(mpadnn_train_options* opts) {
  if (!opts) return;
  *opts = {};
  opts->mode = "mpa_unsup";
  opts->max_epochs = 30;
  opts->patience = 10;
  opts->learning_rate = 1e-4;
  opts->split_train = 0.5;
  opts->split_val = 0.3;
  opts->split_test = 0.2;
  opts->seed = 1;
  opts->enforce_line_limits = 1;
  opts->jobs = 1;
}

mpadnn_status mpadnn_run_train(const mpadnn_train_options* opts, char* out_dir_buf,
                               size_t out_dir_buflen) {
  if (!opts || !opts->case_path || !opts->dataset_dir)
    return invalid_arg("run_train: null options, case_path or dataset_dir");
  return guarded([&] {
    run::TrainOptions o;
    o.case_path = opts->case_path;
    o.dataset_dir = opts->dataset_dir;
    o.labels_dir = opts->labels_dir ? opts->labels_dir : "";
    o.out_dir = opts->out_dir ? opts->out_dir : "";
    o.mode = opts->mode ? opts->mode : "mpa_unsup";
    o.max_epochs = opts->max_epochs;
    o.patience = opts->patience;
    o.learning_rate = opts->learning_rate;
    o.split_train = opts->split_train;
    o.split_val = opts->split_val;
    o.split_test = opts->split_test;
    o.seed = opts->seed;
    o.line_limits = opts->enforce_line_limits != 0;
    o.jobs = opts->jobs;
    o.verbose = opts->verbose;
    copy_out_dir(run::run_train(o), out_dir_buf, out_dir_buflen);
  });
}

void mpadnn_eval_options_init(mpadnn_eval_options* opts) {
  if (!opts) return;
  *opts = {};
  opts->scales = "1.0,1.025,1.05";
  opts->hours = "15,16,17";
  opts->split_train = 0.5;
  opts->split_val = 0.3;
  opts->split_test = 0.2;
  opts->enforce_line_limits = 1;
  opts->jobs = 1;
}

mpadnn_status mpadnn_run_eval(const mpadnn_eval_options* opts, char* out_dir_buf,
                              size_t out_dir_buflen) {
  if (!opts || !opts->case_path || !opts->dataset_dir || !opts->checkpoints)
    return invalid_arg("run_eval: null options, case_path, dataset_dir or checkpoints");
  return guarded([&] {
    run::EvalOptions o;
    o.case_path = opts->case_path;
    o.dataset_dir = opts->dataset_dir;
    o.checkpoints = parse_path_list(opts->checkpoints);
    if (o.checkpoints.empty()) throw config_error("run_eval: no checkpoints given");
    o.out_dir = opts->out_dir ? opts->out_dir : "";
    if (opts->scales) o.scales = parse_double_list(opts->scales);
    if (opts->hours) o.hours = parse_int_list(opts->hours);
    o.split_train = opts->split_train;
    o.split_val = opts->split_val;
    o.split_test = opts->split_test;
    o.line_limits = opts->enforce_line_limits != 0;
    o.jobs = opts->jobs;
    o.verbose = opts->verbose;
    copy_out_dir(run::run_eval(o), out_dir_buf, out_dir_buflen);
  });
}

}  // extern "C"
