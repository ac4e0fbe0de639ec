#ifndef CHEEGER_H
#define CHEEGER_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CheegerStatus {
  CHEEGER_STATUS_OK = 0,
  CHEEGER_STATUS_NULL_POINTER = 1,
  CHEEGER_STATUS_INPUT = 2,
  CHEEGER_STATUS_DIMENSION = 3,
  CHEEGER_STATUS_DOMAIN = 4,
  CHEEGER_STATUS_UNSUPPORTED = 5,
  CHEEGER_STATUS_VERIFICATION = 6,
  CHEEGER_STATUS_CONFIG = 7,
  CHEEGER_STATUS_IO = 8,
  /**
   * The instance has no solution; not an error.
   */
  CHEEGER_STATUS_INFEASIBLE = 9,
  CHEEGER_STATUS_BUFFER_TOO_SMALL = 10,
  CHEEGER_STATUS_PANIC = 11,
} CheegerStatus;

typedef struct CheegerCounterexample CheegerCounterexample;

typedef struct CheegerFeasibility CheegerFeasibility;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the most recent failure on this thread, or null. The pointer
 * stays valid until the next failing call on this thread.
 */
const char *cheeger_last_error_message(void);

/**
 * `z_t = 3t cᵀ(tP + 1)⁻¹c` with `c = dw + (t/2) bracket`. `p` is a
 * row-major `k×k` symmetric positive definite matrix.
 *
 * # Safety
 * `p` must point to `k*k` doubles, `dw` and `bracket` to `k` doubles and
 * `out` to one writable double.
 */
enum CheegerStatus cheeger_zt(const double *p,
                              const double *dw,
                              const double *bracket,
                              size_t k,
                              double t,
                              double *out);

/**
 * Builds an instance with `nblocks` blocks of dimensions `dims`, orbit
 * codimension `l`, and `nconstraints` tuples given as row-major numerator
 * and denominator arrays of shape `nconstraints×nblocks`.
 *
 * # Safety
 * Array arguments must have the stated lengths; `out` must be writable.
 */
enum CheegerStatus cheeger_feasibility_new(const uint64_t *dims,
                                           size_t nblocks,
                                           uint64_t l,
                                           const int64_t *num,
                                           const int64_t *den,
                                           size_t nconstraints,
                                           struct CheegerFeasibility **out);

/**
 * Solves for curvature constants. Writes `nblocks` λ's to `lambdas` and
 * returns `Ok`, or returns `Infeasible`. Two-block instances use the exact
 * criterion; larger ones the pairwise sufficient test. `side` receives 1 or
 * 2 for two blocks and 0 otherwise; it may be null.
 *
 * # Safety
 * `inst` must come from [`cheeger_feasibility_new`]; `lambdas` must hold
 * `len` doubles.
 */
enum CheegerStatus cheeger_feasibility_solve(const struct CheegerFeasibility *inst,
                                             double *lambdas,
                                             size_t len,
                                             int32_t *side);

/**
 * # Safety
 * `inst` must come from [`cheeger_feasibility_new`] or be null.
 */
void cheeger_feasibility_free(struct CheegerFeasibility *inst);

/**
 * Builds the cohomogeneity-one metric on the `n`-sphere (`n >= 5`) whose
 * deformations keep a negative horizontal Ricci value.
 *
 * # Safety
 * `out` must be writable.
 */
enum CheegerStatus cheeger_counterexample_new(size_t n, struct CheegerCounterexample **out);

/**
 * Curvature constants and the predicted horizontal Ricci value.
 *
 * # Safety
 * `spec` must come from [`cheeger_counterexample_new`]; the out pointers
 * must be writable or null.
 */
enum CheegerStatus cheeger_counterexample_constants(const struct CheegerCounterexample *spec,
                                                    double *lambda1,
                                                    double *lambda2,
                                                    double *expected_ricci,
                                                    double *t0);

/**
 * Evaluates `Ric_t(X)` at the fixed point for each of the `len` deformation
 * parameters, writing the values to `ricci`. Returns `Verification` when
 * any value strays from the prediction by more than `tol`.
 *
 * # Safety
 * `spec` must come from [`cheeger_counterexample_new`]; `t_grid` and
 * `ricci` must hold `len` doubles.
 */
enum CheegerStatus cheeger_counterexample_ricci(const struct CheegerCounterexample *spec,
                                                const double *t_grid,
                                                size_t len,
                                                double tol,
                                                double *ricci);

/**
 * # Safety
 * `spec` must come from [`cheeger_counterexample_new`] or be null.
 */
void cheeger_counterexample_free(struct CheegerCounterexample *spec);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CHEEGER_H */
