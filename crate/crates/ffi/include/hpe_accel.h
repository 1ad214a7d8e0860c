#ifndef HPE_ACCEL_H
#define HPE_ACCEL_H

#pragma once

#include <stddef.h>
#include <stdint.h>

typedef enum HpeStatus {
  HPE_STATUS_OK = 0,
  HPE_STATUS_NULL_POINTER = 1,
  HPE_STATUS_INVALID_PARAMETER = 2,
  HPE_STATUS_INVALID_DATA = 3,
  HPE_STATUS_NUMERIC = 4,
  HPE_STATUS_MISSING_CAPABILITY = 5,
  HPE_STATUS_DEGENERATE_STATE = 6,
  HPE_STATUS_SOLVER_FAILURE = 7,
  HPE_STATUS_LINE_SEARCH = 8,
  HPE_STATUS_OUT_OF_RANGE = 9,
  HPE_STATUS_PANIC = 10,
} HpeStatus;

typedef enum HpeStopCriterion {
  HPE_STOP_CRITERION_NONE = 0,
  HPE_STOP_CRITERION_GRAD_NORM = 1,
  HPE_STOP_CRITERION_VALUE_GAP = 2,
} HpeStopCriterion;

typedef enum HpeTermination {
  HPE_TERMINATION_CONVERGED = 0,
  HPE_TERMINATION_STATIONARY = 1,
  HPE_TERMINATION_MAX_ITERATIONS = 2,
} HpeTermination;

/**
 * Opaque problem handle.
 */
typedef struct HpeProblem HpeProblem;

/**
 * Opaque trace handle.
 */
typedef struct HpeTrace HpeTrace;

typedef struct HpeStopping {
  size_t max_iter;
  enum HpeStopCriterion criterion;
  double tol;
} HpeStopping;

/**
 * One trace row. Quantities that need a known minimizer are NaN when absent.
 */
typedef struct HpeTraceRow {
  size_t k;
  double lambda;
  double a;
  double a_sum;
  double value_gap;
  double dist_x;
  double dist_y;
  double v_norm;
  double eps;
  double residual_ratio;
  double step_norm;
} HpeTraceRow;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. Valid until the
 * next failing call on the same thread.
 */
const char *hpe_last_error_message(void);

const char *hpe_version(void);

/**
 * Random quadratic with spectrum in `[mu, lip]`.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum HpeStatus hpe_problem_quadratic(size_t dim,
                                     double mu,
                                     double lip,
                                     uint64_t seed,
                                     struct HpeProblem **out);

/**
 * `g(x) = x'Qx/2 - b'x` with row-major `q` (`dim * dim` entries).
 *
 * # Safety
 * `q` and `b` must point to `dim * dim` and `dim` readable doubles; `out` must be valid for writes.
 */
enum HpeStatus hpe_problem_quadratic_from_parts(const double *q,
                                                const double *b,
                                                size_t dim,
                                                double mu,
                                                double lip,
                                                struct HpeProblem **out);

/**
 * Ridge-regularized logistic regression on synthetic data.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum HpeStatus hpe_problem_logistic(size_t samples,
                                    size_t dim,
                                    double mu,
                                    uint64_t seed,
                                    struct HpeProblem **out);

/**
 * Quadratic plus `l1_weight |x|_1`.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum HpeStatus hpe_problem_l1(size_t dim,
                              double mu,
                              double lip,
                              double l1_weight,
                              uint64_t seed,
                              struct HpeProblem **out);

/**
 * Strongly convex quartic; the second-order constant holds on the ball of `radius`.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum HpeStatus hpe_problem_quartic(size_t dim,
                                   double mu,
                                   double coupling,
                                   double radius,
                                   uint64_t seed,
                                   struct HpeProblem **out);

/**
 * Drops the Hessian oracle so second-order methods report a missing capability.
 *
 * # Safety
 * `problem` must be a live handle.
 */
enum HpeStatus hpe_problem_drop_hessian(struct HpeProblem *problem);

/**
 * Dimension of the problem, 0 for NULL.
 *
 * # Safety
 * `problem` must be NULL or a live handle.
 */
size_t hpe_problem_dim(const struct HpeProblem *problem);

/**
 * # Safety
 * `problem` must be NULL or a handle not yet freed.
 */
void hpe_problem_free(struct HpeProblem *problem);

/**
 * Accelerated proximal point with constant `lambda`. `inner_budget == 0`
 * selects the exact resolvent, otherwise a prox-gradient inner loop.
 *
 * # Safety
 * `problem` must be live, `x0` NULL or `x0_len` readable doubles, `out` valid for writes.
 */
enum HpeStatus hpe_run_ahpe(const struct HpeProblem *problem,
                            const double *x0,
                            size_t x0_len,
                            double sigma,
                            double lambda,
                            size_t inner_budget,
                            struct HpeStopping stop,
                            struct HpeTrace **out);

/**
 * Large-step method with exact resolvents and the window `theta <= phi <= cap * theta`.
 *
 * # Safety
 * As for [`hpe_run_ahpe`].
 */
enum HpeStatus hpe_run_largestep(const struct HpeProblem *problem,
                                 const double *x0,
                                 size_t x0_len,
                                 size_t p_order,
                                 double theta,
                                 double sigma,
                                 double cap,
                                 struct HpeStopping stop,
                                 struct HpeTrace **out);

/**
 * Second-order tensor method. A NaN `m` selects `M = 2 L_2`.
 *
 * # Safety
 * As for [`hpe_run_ahpe`].
 */
enum HpeStatus hpe_run_tensor(const struct HpeProblem *problem,
                              const double *x0,
                              size_t x0_len,
                              double sigma_l,
                              double sigma_u,
                              double sigma_hat,
                              double m,
                              struct HpeStopping stop,
                              struct HpeTrace **out);

/**
 * Accelerated proximal gradient with stepsize derived from `sigma_u`.
 *
 * # Safety
 * As for [`hpe_run_ahpe`].
 */
enum HpeStatus hpe_run_proxgrad(const struct HpeProblem *problem,
                                const double *x0,
                                size_t x0_len,
                                double sigma_u,
                                struct HpeStopping stop,
                                struct HpeTrace **out);

/**
 * Number of recorded iterations, 0 for NULL.
 *
 * # Safety
 * `trace` must be NULL or a live handle.
 */
size_t hpe_trace_len(const struct HpeTrace *trace);

/**
 * # Safety
 * `trace` must be live and `out` valid for writes.
 */
enum HpeStatus hpe_trace_row(const struct HpeTrace *trace, size_t index, struct HpeTraceRow *out);

/**
 * # Safety
 * `trace` must be live and `out` valid for writes.
 */
enum HpeStatus hpe_trace_termination(const struct HpeTrace *trace, enum HpeTermination *out);

/**
 * Copies the last iterate `y` into `out[0..len]`; `len` must equal the dimension.
 *
 * # Safety
 * `trace` must be live and `out` valid for `len` writes.
 */
enum HpeStatus hpe_trace_final_y(const struct HpeTrace *trace, double *out, size_t len);

/**
 * Evaluates every certificate on the trace and stores the number of violated checks.
 *
 * # Safety
 * `trace` and `problem` must be live (the problem the trace was produced on);
 * `violations` must be valid for writes.
 */
enum HpeStatus hpe_trace_verify(const struct HpeTrace *trace,
                                const struct HpeProblem *problem,
                                size_t *violations);

/**
 * # Safety
 * `trace` must be NULL or a handle not yet freed.
 */
void hpe_trace_free(struct HpeTrace *trace);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HPE_ACCEL_H */
