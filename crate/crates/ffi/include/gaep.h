#ifndef GAEP_H
#define GAEP_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes.
 */
typedef enum GaepStatus {
  GAEP_STATUS_OK = 0,
  GAEP_STATUS_NULL_POINTER = 1,
  GAEP_STATUS_INVALID_DISTRIBUTION = 2,
  GAEP_STATUS_INVALID_DISTORTION = 3,
  GAEP_STATUS_DIMENSION_MISMATCH = 4,
  GAEP_STATUS_INFEASIBLE = 5,
  GAEP_STATUS_DEGENERATE = 6,
  GAEP_STATUS_NO_VALUE_GRID = 7,
  GAEP_STATUS_TOO_LARGE = 8,
  GAEP_STATUS_NUMERICAL = 9,
  GAEP_STATUS_BUFFER_TOO_SMALL = 10,
  GAEP_STATUS_OTHER = 11,
  GAEP_STATUS_PANIC = 12,
} GaepStatus;

/**
 * Source law, reproduction law and distortion matrix.
 */
typedef struct GaepProblem GaepProblem;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. Valid until the
 * next failing call on the same thread.
 */
const char *gaep_last_error(void);

/**
 * Builds a problem from P (length `rows`), Q (length `cols`) and a row-major
 * `rows x cols` distortion matrix. `grid <= 0` means no value grid.
 *
 * # Safety
 * Pointers must reference arrays of the stated lengths; `out` must be writable.
 */
enum GaepStatus gaep_problem_new(const double *p,
                                 size_t rows,
                                 const double *q,
                                 size_t cols,
                                 const double *rho,
                                 double grid,
                                 struct GaepProblem **out);

/**
 * Releases a problem; NULL is ignored.
 *
 * # Safety
 * `h` must come from [`gaep_problem_new`] and not be used afterwards.
 */
void gaep_problem_free(struct GaepProblem *h);

/**
 * R₁(P, Q, D) in nats with the dual root λ*; `zero_rate` is set to 1 when D ≥ d_av.
 *
 * # Safety
 * `h` must be a live handle; outputs may be NULL.
 */
enum GaepStatus gaep_rate_r1(const struct GaepProblem *h,
                             double d,
                             double *r1_nats,
                             double *lambda_star,
                             int32_t *zero_rate);

/**
 * Minimal coding variance Var_P[h(X)] in bits² at distortion D.
 *
 * # Safety
 * `h` must be a live handle; `out` may be NULL.
 */
enum GaepStatus gaep_sigma2_coding(const struct GaepProblem *h, double d, double *out);

/**
 * R(D) in bits for the problem's P and distortion (Q is ignored); the
 * optimal reproduction law is written to `q_star` when it has room for
 * `cols` entries.
 *
 * # Safety
 * `h` must be a live handle; `q_star` must hold `q_star_len` doubles or be NULL.
 */
enum GaepStatus gaep_blahut_arimoto(const struct GaepProblem *h,
                                    double d,
                                    double tol,
                                    double *rate_bits,
                                    double *q_star,
                                    size_t q_star_len);

/**
 * Exact natural-log ball probability log Qⁿ(B(x, D)); −∞ for an empty ball.
 *
 * # Safety
 * `h` must be a live handle and `x` must hold `n` symbols.
 */
enum GaepStatus gaep_ball_log_prob(const struct GaepProblem *h,
                                   const uint32_t *x,
                                   size_t n,
                                   double d,
                                   double *log_prob);

/**
 * Length in bits of the Elias-delta codeword of `n`; 0 for n = 0.
 */
uint64_t gaep_elias_len(uint64_t n);

/**
 * Writes the Elias-delta codeword of `n` as a NUL-terminated '0'/'1' string.
 *
 * # Safety
 * `buf` must hold `cap` bytes; at least codeword length + 1 are needed.
 */
enum GaepStatus gaep_elias_encode(uint64_t n, char *buf, size_t cap);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GAEP_H */
