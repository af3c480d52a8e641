#ifndef REVKDE_H
#define REVKDE_H

/* Generated by cbindgen. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes.
 */
typedef enum RevkdeStatus {
  REVKDE_STATUS_OK = 0,
  REVKDE_STATUS_NULL_POINTER = 1,
  REVKDE_STATUS_INVALID_ARGUMENT = 2,
  REVKDE_STATUS_NOT_REVERSIBLE = 3,
  REVKDE_STATUS_REGIME_VIOLATED = 4,
  REVKDE_STATUS_NUMERICAL = 5,
  REVKDE_STATUS_IO = 6,
  REVKDE_STATUS_PANIC = 7,
} RevkdeStatus;

/**
 * Bandwidth regime to check against.
 */
typedef enum RevkdeRegime {
  REVKDE_REGIME_THEOREM1 = 0,
  REVKDE_REGIME_COROLLARY = 1,
} RevkdeRegime;

/**
 * Opaque chain handle.
 */
typedef struct RevkdeChain RevkdeChain;

/**
 * Opaque kernel handle.
 */
typedef struct RevkdeKernel RevkdeKernel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or NULL. Valid until the
 * next call into this library on the same thread.
 */
const char *revkde_last_error(void);

/**
 * Library version, static string.
 */
const char *revkde_version(void);

/**
 * Finite reversible chain on `n_states` values with a row-major
 * `n_states x n_states` transition matrix.
 *
 * # Safety
 * `values` must point to `n_states` doubles, `transition` to
 * `n_states * n_states` doubles, `out` to writable storage for a pointer.
 */
enum RevkdeStatus revkde_chain_finite_new(const double *values,
                                          const double *transition,
                                          size_t n_states,
                                          struct RevkdeChain **out_chain);

/**
 * Stationary Gaussian AR(1) with unit marginal variance.
 *
 * # Safety
 * `out_chain` must point to writable storage for a pointer.
 */
enum RevkdeStatus revkde_chain_ar1_new(double rho, struct RevkdeChain **out_chain);

/**
 * # Safety
 * `chain` must be NULL or a handle from this library not yet freed.
 */
void revkde_chain_free(struct RevkdeChain *chain);

/**
 * Fill `out_path[0..n]` with a stationary path drawn from stream
 * `(seed, stream)`.
 *
 * # Safety
 * `chain` must be a live handle; `out_path` must hold `n` doubles.
 */
enum RevkdeStatus revkde_chain_simulate(const struct RevkdeChain *chain,
                                        size_t n,
                                        uint64_t seed,
                                        uint64_t stream,
                                        double *out_path);

/**
 * `cov(g(X_0), g(X_lag))` for a finite chain, `g` given per state and
 * centered under the stationary law.
 *
 * # Safety
 * `chain` must be a live handle; `g` must hold `n_states` doubles.
 */
enum RevkdeStatus revkde_chain_lag_covariance(const struct RevkdeChain *chain,
                                              const double *g,
                                              size_t n_states,
                                              size_t lag,
                                              double *out_value);

/**
 * Exact `eta_lag` and `alpha_bar_lag`.
 *
 * # Safety
 * `chain` must be a live handle; out pointers must be writable.
 */
enum RevkdeStatus revkde_chain_dependence(const struct RevkdeChain *chain,
                                          size_t lag,
                                          double *out_eta,
                                          double *out_alpha_bar);

/**
 * Kernel by name: `gaussian`, `epanechnikov` or `uniform`.
 *
 * # Safety
 * `name` must be a NUL-terminated string; `out_kernel` must be writable.
 */
enum RevkdeStatus revkde_kernel_new(const char *name, struct RevkdeKernel **out_kernel);

/**
 * # Safety
 * `kernel` must be NULL or a handle from this library not yet freed.
 */
void revkde_kernel_free(struct RevkdeKernel *kernel);

/**
 * `K(u)`.
 *
 * # Safety
 * `kernel` must be a live handle; `out_value` must be writable.
 */
enum RevkdeStatus revkde_kernel_eval(const struct RevkdeKernel *kernel,
                                     double u,
                                     double *out_value);

/**
 * Density estimate of `path` at `n_points` points.
 *
 * # Safety
 * `path` must hold `n_path` doubles, `points` and `out_values` `n_points`.
 */
enum RevkdeStatus revkde_kde_evaluate(const struct RevkdeKernel *kernel,
                                      const double *path,
                                      size_t n_path,
                                      double bandwidth,
                                      const double *points,
                                      size_t n_points,
                                      double *out_values);

/**
 * Exact expectation of the estimator at `x` under the chain's marginal.
 *
 * # Safety
 * Handles must be live; `out_value` must be writable.
 */
enum RevkdeStatus revkde_expected_kde(const struct RevkdeChain *chain,
                                      const struct RevkdeKernel *kernel,
                                      double bandwidth,
                                      double x,
                                      double *out_value);

/**
 * Check `b_n = c n^{-beta}` against the regime. A violation is reported as
 * `RegimeViolated` with the hypothesis in the error message.
 */
enum RevkdeStatus revkde_regime_check(double c, double beta, enum RevkdeRegime regime);

/**
 * Run a Monte Carlo normality experiment described by a TOML document and
 * return its report as JSON. Free the string with [`revkde_string_free`].
 *
 * # Safety
 * `config_toml` must be NUL-terminated; `out_json` must be writable.
 */
enum RevkdeStatus revkde_clt_run(const char *config_toml,
                                 size_t workers,
                                 bool *out_pass,
                                 char **out_json);

/**
 * # Safety
 * `s` must be NULL or a string returned by this library not yet freed.
 */
void revkde_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* REVKDE_H */
