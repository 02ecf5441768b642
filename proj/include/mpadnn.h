/* mpadnn: multi-period DC dispatch surrogate with a hard-feasibility
 * projection layer.
 *
 * C interface to the shared library. All functions return a status code;
 * mpadnn_last_error() describes the most recent failure on the calling
 * thread. Handles are opaque and must be released with the matching _free
 * call. Unless noted, handles are not thread-safe; independent handles may
 * be used from different threads concurrently.
 */
#ifndef MPADNN_H
#define MPADNN_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum mpadnn_status {
  MPADNN_OK = 0,
  MPADNN_ERR_INVALID_ARG = 1,
  MPADNN_ERR_IO = 2,
  MPADNN_ERR_PARSE = 3,
  MPADNN_ERR_VALIDATION = 4,
  MPADNN_ERR_DIMENSION = 5,
  MPADNN_ERR_INFEASIBLE = 6,
  MPADNN_ERR_MAX_ITERATIONS = 7,
  MPADNN_ERR_DEGENERATE = 8,
  MPADNN_ERR_CONFIG = 9,
  MPADNN_ERR_INTERNAL = 10
} mpadnn_status;

const char* mpadnn_status_string(mpadnn_status status);

/* Message for the last error raised on this thread; empty string if none. */
const char* mpadnn_last_error(void);

void mpadnn_version(int* major, int* minor, int* patch);

/* ---------------- power-system case ---------------- */

typedef struct mpadnn_case mpadnn_case;

mpadnn_status mpadnn_case_load(const char* path, mpadnn_case** out_case);
void mpadnn_case_free(mpadnn_case* c);
mpadnn_status mpadnn_case_dims(const mpadnn_case* c, int* n_bus, int* n_gen, int* n_load,
                               int* n_line, int* n_ess);
/* buf receives a NUL-terminated hex fingerprint; buflen must be >= 17. */
mpadnn_status mpadnn_case_fingerprint(const mpadnn_case* c, char* buf, size_t buflen);

/* ---------------- projection layer ---------------- */

/* A projection handle owns the feasible set of one demand scenario
 * (column-major n_load x horizon MW array) and the solver state for it. */
typedef struct mpadnn_projection mpadnn_projection;

mpadnn_status mpadnn_projection_create(const mpadnn_case* c, const double* demand, int n_load,
                                       int horizon, int enforce_line_limits,
                                       mpadnn_projection** out);
void mpadnn_projection_free(mpadnn_projection* p);

/* Stacked decision length (= (n_gen + 2*n_ess) * horizon). */
mpadnn_status mpadnn_projection_size(const mpadnn_projection* p, int* n_vars);

/* Euclidean projection of z onto the feasible set; x_out receives n values. */
mpadnn_status mpadnn_projection_project(mpadnn_projection* p, const double* z, int n,
                                        double* x_out);

/* Vector-Jacobian product of the last successful project() call:
 * grad_z_out = (dx/dz)' grad_x. */
mpadnn_status mpadnn_projection_vjp(mpadnn_projection* p, const double* grad_x, int n,
                                    double* grad_z_out);

/* Exact multi-period dispatch for one scenario; x_out (length n_vars) and
 * objective_out are optional. */
mpadnn_status mpadnn_opf_solve(const mpadnn_case* c, const double* demand, int n_load, int horizon,
                               int enforce_line_limits, double* x_out, double* objective_out);

/* ---------------- batch workflows (CLI surface) ---------------- */

typedef struct mpadnn_gen_data_options {
  const char* case_path;
  const char* out_dir; /* NULL or "": runs/<timestamp>_seed<seed> */
  int samples;
  int horizon;
  double load_scale;
  double noise;
  const char* shape; /* "default" or "steep" */
  unsigned long long seed;
  int jobs;
} mpadnn_gen_data_options;
void mpadnn_gen_data_options_init(mpadnn_gen_data_options* opts);
mpadnn_status mpadnn_run_gen_data(const mpadnn_gen_data_options* opts, char* out_dir_buf,
                                  size_t out_dir_buflen);

typedef struct mpadnn_solve_options {
  const char* case_path;
  const char* dataset_dir;
  const char* out_dir;
  int enforce_line_limits;
  int jobs;
  int verbose;
} mpadnn_solve_options;
void mpadnn_solve_options_init(mpadnn_solve_options* opts);
mpadnn_status mpadnn_run_solve(const mpadnn_solve_options* opts, char* out_dir_buf,
                               size_t out_dir_buflen);

typedef struct mpadnn_train_options {
  const char* case_path;
  const char* dataset_dir;
  const char* labels_dir; /* required for supervised modes, else optional */
  const char* out_dir;
  const char* mode; /* mpa_unsup | mpa_sup | mpp_sup | spa_unsup */
  int max_epochs;
  int patience;
  double learning_rate;
  double split_train;
  double split_val;
  double split_test;
  unsigned long long seed;
  int enforce_line_limits;
  int jobs;
  int verbose;
} mpadnn_train_options;
void mpadnn_train_options_init(mpadnn_train_options* opts);
mpadnn_status mpadnn_run_train(const mpadnn_train_options* opts, char* out_dir_buf,
                               size_t out_dir_buflen);

typedef struct mpadnn_eval_options {
  const char* case_path;
  const char* dataset_dir;
  const char* checkpoints; /* semicolon-separated checkpoint paths */
  const char* out_dir;
  const char* scales;      /* comma-separated, e.g. "1.0,1.025,1.05" */
  const char* hours;       /* comma-separated 1-based hours for the cost table */
  double split_train;
  double split_val;
  double split_test;
  int enforce_line_limits;
  int jobs;
  int verbose;
} mpadnn_eval_options;
void mpadnn_eval_options_init(mpadnn_eval_options* opts);
mpadnn_status mpadnn_run_eval(const mpadnn_eval_options* opts, char* out_dir_buf,
                              size_t out_dir_buflen);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* MPADNN_H */
