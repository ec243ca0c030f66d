#ifndef CGSO_H
#define CGSO_H

/* Generated by cbindgen from crates/ffi/src. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Callback result: success.
 */
#define CGSO_CALLBACK_OK 0

/**
 * Callback result: the point lies outside the objective's domain.
 */
#define CGSO_CALLBACK_INFEASIBLE 1

typedef enum CgsoStatus {
  CGSO_STATUS_OK = 0,
  CGSO_STATUS_NULL_POINTER = 1,
  CGSO_STATUS_INVALID_ARGUMENT = 2,
  CGSO_STATUS_DIMENSION_MISMATCH = 3,
  CGSO_STATUS_INFEASIBLE = 4,
  CGSO_STATUS_NOT_POSITIVE_DEFINITE = 5,
  CGSO_STATUS_LINE_SEARCH = 6,
  CGSO_STATUS_IO = 7,
  CGSO_STATUS_CALLBACK = 8,
  CGSO_STATUS_PANIC = 9,
} CgsoStatus;

typedef enum CgsoBaseline {
  CGSO_BASELINE_FLETCHER_REEVES = 0,
  CGSO_BASELINE_POLAK_RIBIERE = 1,
  CGSO_BASELINE_HAGER_ZHANG = 2,
  CGSO_BASELINE_STEEPEST_DESCENT = 3,
} CgsoBaseline;

typedef enum CgsoTermination {
  CGSO_TERMINATION_CONVERGED = 0,
  CGSO_TERMINATION_ITERATION_LIMIT = 1,
  CGSO_TERMINATION_STALLED = 2,
  CGSO_TERMINATION_FAILED = 3,
} CgsoTermination;

/**
 * An objective: a generated test instance or a set of callbacks.
 */
typedef struct CgsoObjective CgsoObjective;

/**
 * The outcome of one solve.
 */
typedef struct CgsoReport CgsoReport;

/**
 * Writes `f(x)` to `value` and, when `gradient` is non-null, `∇f(x)` to
 * the `n` doubles behind it.
 */
typedef int (*CgsoValueGradientFn)(void *user_data,
                                   const double *x,
                                   size_t n,
                                   double *value,
                                   double *gradient);

/**
 * Writes `∇²f(x)·v` to `out`.
 */
typedef int (*CgsoHvpFn)(void *user_data, const double *x, const double *v, size_t n, double *out);

/**
 * For an infeasible `x`, writes `h` with `⟨h, x' − x⟩ < 0` for every
 * feasible `x'`.
 */
typedef int (*CgsoSeparatingFn)(void *user_data, const double *x, size_t n, double *out);

/**
 * A user-supplied objective. `value_and_gradient` is required. Without
 * `hvp`, Hessian products are central differences of the gradient.
 * Callbacks must tolerate calls from any thread.
 */
typedef struct CgsoCallbacks {
  CgsoValueGradientFn value_and_gradient;
  CgsoHvpFn hvp;
  CgsoSeparatingFn separating_direction;
  void *user_data;
} CgsoCallbacks;

/**
 * Solver settings. Start from [`cgso_options_default`].
 */
typedef struct CgsoOptions {
  double tolerance;
  double rho;
  uint32_t min_exponent;
  /**
   * `0` means `200·n`.
   */
  size_t max_iters;
  size_t newton_max_iters;
  bool adaptive_rho;
  /**
   * Use only `xʲ − x^{r_p}` as correction column.
   */
  bool displacement_only;
} CgsoOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static string.
 */
const char *cgso_version(void);

/**
 * Message of the last failed call on this thread, or null. The string
 * stays valid until the next call into the library on this thread.
 */
const char *cgso_last_error(void);

/**
 * Releases a string returned by this library.
 *
 * # Safety
 * `s` must be null or a string obtained from this library, freed once.
 */
void cgso_string_free(char *s);

/**
 * Generates a seeded test instance from its JSON spec.
 *
 * # Safety
 * `spec_json` must be a nul-terminated string and `out` a valid pointer.
 */
enum CgsoStatus cgso_instance_generate(const char *spec_json, struct CgsoObjective **out);

/**
 * Loads an instance file written by the benchmark harness.
 *
 * # Safety
 * `path` must be a nul-terminated string and `out` a valid pointer.
 */
enum CgsoStatus cgso_instance_load(const char *path, struct CgsoObjective **out);

/**
 * Wraps user callbacks as an objective over `R^n`.
 *
 * # Safety
 * `callbacks` must point to a valid [`CgsoCallbacks`] whose functions and
 * `user_data` outlive the returned handle.
 */
enum CgsoStatus cgso_objective_from_callbacks(size_t n,
                                              const struct CgsoCallbacks *callbacks,
                                              struct CgsoObjective **out);

/**
 * # Safety
 * `obj` must be null or a handle from this library, freed once.
 */
void cgso_objective_free(struct CgsoObjective *obj);

/**
 * Dimension of the objective, or 0 for a null handle.
 *
 * # Safety
 * `obj` must be null or a live handle.
 */
size_t cgso_objective_dim(const struct CgsoObjective *obj);

/**
 * Copies the instance's starting point into `out`. Callback objectives
 * have none.
 *
 * # Safety
 * `obj` must be a live handle and `out` hold `len` doubles.
 */
enum CgsoStatus cgso_objective_start(const struct CgsoObjective *obj, double *out, size_t len);

/**
 * Evaluates `f(x)` and, when `gradient` is non-null, `∇f(x)`.
 *
 * # Safety
 * `obj` must be a live handle, `x` and `gradient` hold `n` doubles and
 * `value` be writable.
 */
enum CgsoStatus cgso_objective_evaluate(const struct CgsoObjective *obj,
                                        const double *x,
                                        size_t n,
                                        double *value,
                                        double *gradient);

struct CgsoOptions cgso_options_default(void);

/**
 * Runs CGSO from `x0`. `options` may be null for the defaults. A run that
 * stops early still returns `CGSO_STATUS_OK`; see
 * [`cgso_report_termination`].
 *
 * # Safety
 * `obj` must be a live handle, `x0` hold `n` doubles, `options` be null or
 * valid and `out` writable.
 */
enum CgsoStatus cgso_solve(const struct CgsoObjective *obj,
                           const double *x0,
                           size_t n,
                           const struct CgsoOptions *options,
                           struct CgsoReport **out);

/**
 * Runs a nonlinear CG baseline with the Wolfe line search. `max_iters`
 * of 0 means `200·n`.
 *
 * # Safety
 * As for [`cgso_solve`].
 */
enum CgsoStatus cgso_baseline_solve(const struct CgsoObjective *obj,
                                    const double *x0,
                                    size_t n,
                                    enum CgsoBaseline variant,
                                    double tolerance,
                                    size_t max_iters,
                                    struct CgsoReport **out);

/**
 * # Safety
 * `report` must be null or a handle from this library, freed once.
 */
void cgso_report_free(struct CgsoReport *report);

/**
 * # Safety
 * `report` must be a live handle.
 */
enum CgsoTermination cgso_report_termination(const struct CgsoReport *report);

/**
 * Major iterations.
 *
 * # Safety
 * `report` must be null or a live handle.
 */
size_t cgso_report_iterations(const struct CgsoReport *report);

/**
 * Newton plus ellipsoid iterations.
 *
 * # Safety
 * `report` must be null or a live handle.
 */
size_t cgso_report_inner_iterations(const struct CgsoReport *report);

/**
 * Line-search probes of a baseline run.
 *
 * # Safety
 * `report` must be null or a live handle.
 */
size_t cgso_report_line_search_iterations(const struct CgsoReport *report);

/**
 * Blocks that ran in correction mode.
 *
 * # Safety
 * `report` must be null or a live handle.
 */
size_t cgso_report_correction_blocks(const struct CgsoReport *report);

/**
 * Largest subspace dimension used.
 *
 * # Safety
 * `report` must be null or a live handle.
 */
size_t cgso_report_max_subspace_dim(const struct CgsoReport *report);

/**
 * Final objective value, NaN for a null handle.
 *
 * # Safety
 * `report` must be null or a live handle.
 */
double cgso_report_value(const struct CgsoReport *report);

/**
 * Final gradient norm, NaN for a null handle.
 *
 * # Safety
 * `report` must be null or a live handle.
 */
double cgso_report_grad_norm(const struct CgsoReport *report);

/**
 * Largest ρ used by the alignment check, NaN when no block was checked.
 *
 * # Safety
 * `report` must be null or a live handle.
 */
double cgso_report_rho_max(const struct CgsoReport *report);

/**
 * Copies the final point into `out`.
 *
 * # Safety
 * `report` must be a live handle and `out` hold `len` doubles.
 */
enum CgsoStatus cgso_report_solution(const struct CgsoReport *report, double *out, size_t len);

/**
 * Serializes the full report, trace included, as JSON. Free the result
 * with [`cgso_string_free`].
 *
 * # Safety
 * `report` must be a live handle and `out` writable.
 */
enum CgsoStatus cgso_report_to_json(const struct CgsoReport *report, char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CGSO_H */
