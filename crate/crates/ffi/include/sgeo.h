#ifndef SGEO_H
#define SGEO_H

/* Generated by cbindgen; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible entry point.
 */
typedef enum SgeoStatus {
  SGEO_STATUS_OK = 0,
  SGEO_STATUS_NULL_POINTER = 1,
  SGEO_STATUS_INVALID_ARGUMENT = 2,
  SGEO_STATUS_DIMENSION_MISMATCH = 3,
  SGEO_STATUS_NUMERICAL_DEGENERACY = 4,
  SGEO_STATUS_NUMERICAL_OVERFLOW = 5,
  SGEO_STATUS_NON_FINITE_START = 6,
  SGEO_STATUS_UNKNOWN_FUNCTION = 7,
  SGEO_STATUS_CONFIG = 8,
  SGEO_STATUS_IO = 9,
  SGEO_STATUS_PANIC = 10,
} SgeoStatus;

/**
 * Opaque objective handle.
 */
typedef struct SgeoObjective SgeoObjective;

/**
 * Opaque result of a driver run.
 */
typedef struct SgeoRunResult SgeoRunResult;

/**
 * Objective value callback: `phi(x)` for `x` of length `dim`.
 */
typedef double (*SgeoValueFn)(const double *x, size_t dim, void *user_data);

/**
 * Gradient callback writing `dim` entries to `grad_out`.
 */
typedef void (*SgeoGradientFn)(const double *x, size_t dim, double *grad_out, void *user_data);

/**
 * Driver parameters. Obtain defaults with [`sgeo_default_config`].
 */
typedef struct SgeoRunConfig {
  size_t runs;
  double alpha;
  size_t total_steps;
  double dt_lb0;
  size_t qn_interval;
  bool use_qn;
  double tol_f;
  size_t qn_max_iter;
  double qn_tol_f;
  double qn_tol_x;
  /**
   * Steps per run; 0 derives it from `total_steps / runs`.
   */
  size_t steps_override;
  bool jump;
  bool oscillation_check;
} SgeoRunConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message of this thread into `buf` (NUL-terminated,
 * truncated to `len`). Returns the full message length excluding the NUL.
 *
 * # Safety
 * `buf` must be null or valid for `len` writable bytes.
 */
size_t sgeo_last_error_message(char *buf, size_t len);

/**
 * Creates an objective from C callbacks. `gradient` may be null, in which
 * case central differences are used. `user_data` is passed through untouched
 * and must outlive the handle.
 *
 * # Safety
 * `out` must be valid for writes; the callbacks must be safe to call with
 * `dim`-length buffers for the lifetime of the handle.
 */
enum SgeoStatus sgeo_objective_from_callbacks(size_t dim,
                                              SgeoValueFn value,
                                              SgeoGradientFn gradient,
                                              void *user_data,
                                              struct SgeoObjective **out);

/**
 * Creates an objective for a named suite benchmark.
 *
 * # Safety
 * `name` must be a NUL-terminated string and `out` valid for writes.
 */
enum SgeoStatus sgeo_objective_from_benchmark(const char *name, struct SgeoObjective **out);

/**
 * Dimension of the objective, or 0 for a null handle.
 *
 * # Safety
 * `obj` must be null or a live handle.
 */
size_t sgeo_objective_dim(const struct SgeoObjective *obj);

/**
 * Writes the search box and known maximum of a benchmark objective. Fails
 * with `InvalidArgument` for callback objectives. `known_max` may be null.
 *
 * # Safety
 * `lower` and `upper` must be valid for `dim` writes.
 */
enum SgeoStatus sgeo_objective_bounds(const struct SgeoObjective *obj,
                                      double *lower,
                                      double *upper,
                                      double *known_max);

/**
 * Evaluates the objective and, if `grad_out` is non-null, its gradient.
 *
 * # Safety
 * `x` must hold `dim` values, `grad_out` must be null or hold `dim` slots.
 */
enum SgeoStatus sgeo_objective_eval(const struct SgeoObjective *obj,
                                    const double *x,
                                    double *phi_out,
                                    double *grad_out);

/**
 * Releases an objective handle. Null is a no-op.
 *
 * # Safety
 * `obj` must be null or a handle not yet freed.
 */
void sgeo_objective_free(struct SgeoObjective *obj);

/**
 * Fills `out` with the default driver parameters for the box.
 *
 * # Safety
 * `lower` and `upper` must hold `dim` values; `out` must be valid for writes.
 */
enum SgeoStatus sgeo_default_config(const double *lower,
                                    const double *upper,
                                    size_t dim,
                                    struct SgeoRunConfig *out);

/**
 * Runs the stochastic driver on `obj` over `[lower, upper]`. A null `config`
 * uses the defaults. The run is deterministic in `seed`.
 *
 * # Safety
 * `lower` and `upper` must hold `dim(obj)` values; `out` must be valid for writes.
 */
enum SgeoStatus sgeo_run(const struct SgeoObjective *obj,
                         const double *lower,
                         const double *upper,
                         const struct SgeoRunConfig *config,
                         uint64_t seed,
                         struct SgeoRunResult **out);

/**
 * Local quasi-Newton maximization from `x0`. Writes the maximizer to `x_out`
 * and its value to `phi_out`. Zero settings select the defaults.
 *
 * # Safety
 * `x0` and `x_out` must hold `dim(obj)` values; `phi_out` must be valid for writes.
 */
enum SgeoStatus sgeo_maximize_local(const struct SgeoObjective *obj,
                                    const double *x0,
                                    size_t max_iter,
                                    double tol_f,
                                    double tol_x,
                                    double *x_out,
                                    double *phi_out);

/**
 * Best value found, or NaN for a null handle.
 *
 * # Safety
 * `res` must be null or a live result handle.
 */
double sgeo_result_phi_star(const struct SgeoRunResult *res);

/**
 * Copies the best point into `x_out`, which must hold `len` values.
 * Fails with `DimensionMismatch` if `len` differs from the problem dimension.
 *
 * # Safety
 * `x_out` must be valid for `len` writes.
 */
enum SgeoStatus sgeo_result_x_star(const struct SgeoRunResult *res, double *x_out, size_t len);

/**
 * Runs executed in the final phase.
 *
 * # Safety
 * `res` must be null or a live result handle.
 */
size_t sgeo_result_runs_executed(const struct SgeoRunResult *res);

/**
 * # Safety
 * `res` must be null or a live result handle.
 */
uint64_t sgeo_result_value_calls(const struct SgeoRunResult *res);

/**
 * # Safety
 * `res` must be null or a live result handle.
 */
uint64_t sgeo_result_gradient_calls(const struct SgeoRunResult *res);

/**
 * Whether the run stopped on the repeated-optimum criterion.
 *
 * # Safety
 * `res` must be null or a live result handle.
 */
bool sgeo_result_stopped_early(const struct SgeoRunResult *res);

/**
 * Whether the oscillatory parameter set was switched on.
 *
 * # Safety
 * `res` must be null or a live result handle.
 */
bool sgeo_result_oscillatory(const struct SgeoRunResult *res);

/**
 * Releases a result handle. Null is a no-op.
 *
 * # Safety
 * `res` must be null or a handle not yet freed.
 */
void sgeo_result_free(struct SgeoRunResult *res);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SGEO_H */
