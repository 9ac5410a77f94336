#ifndef AMPFLOW_H
#define AMPFLOW_H

/* Generated by cbindgen from the ampflow-ffi crate; edit the Rust instead. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result of every fallible ABI call.
typedef enum AfStatus {
  // The call succeeded.
  AF_OK = 0,
  // A required pointer argument was NULL.
  AF_NULL_POINTER = 1,
  // A scalar argument was out of range or otherwise rejected.
  AF_INVALID_ARGUMENT = 2,
  // Vector and matrix dimensions do not line up.
  AF_DIMENSION_MISMATCH = 3,
  // The computation broke down numerically.
  AF_NUMERICAL_FAILURE = 4,
  // A panic was caught at the boundary; state may be stale but the
  // process is intact.
  AF_PANIC = 5,
} AfStatus;

// Measurement ensembles available through the ABI.
typedef enum AfEnsemble {
  // Entries `CN(0, 1)`.
  AF_ENSEMBLE_GAUSSIAN = 0,
  // Real ternary entries: `+/- 1/sqrt(2p)` with probability `p` each.
  AF_ENSEMBLE_TERNARY = 1,
  // Entries `(+/- 1 +/- i) / sqrt(2)`.
  AF_ENSEMBLE_RADEMACHER = 2,
} AfEnsemble;

// Opaque solver configuration handle.
typedef struct AfConfig AfConfig;

// Opaque sensing matrix handle.
typedef struct AfMatrix AfMatrix;

// Opaque solve outcome handle.
typedef struct AfResult AfResult;

// One complex number, laid out as two consecutive doubles.
typedef struct AfComplex {
  double re;
  double im;
} AfComplex;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message describing the most recent non-OK status on this thread.  The
// pointer stays valid until the next failing ABI call on the same thread.
const char *af_last_error_message(void);

// Short, static name for a status code.
const char *af_status_name(enum AfStatus status);

// Draw an `m x d` sensing matrix from `ensemble` with the given seed.
// `p` is only read for the ternary ensemble and must lie in `(0, 0.5]`.
//
// # Safety
// `out` must point to writable storage for one pointer.
enum AfStatus af_matrix_sample(enum AfEnsemble ensemble,
                               double p,
                               size_t m,
                               size_t d,
                               uint64_t seed,
                               struct AfMatrix **out);

// Release a matrix.  NULL is ignored.
//
// # Safety
// `h` must have come from [`af_matrix_sample`] and not been freed before.
void af_matrix_free(struct AfMatrix *h);

// Number of measurement rows, 0 on NULL.
//
// # Safety
// `h` must be a live matrix handle or NULL.
size_t af_matrix_rows(const struct AfMatrix *h);

// Signal dimension, 0 on NULL.
//
// # Safety
// `h` must be a live matrix handle or NULL.
size_t af_matrix_cols(const struct AfMatrix *h);

// Noiseless amplitudes `|<a_j, x>|` for a signal of length `d`, written to
// `b_out[0..m]`.
//
// # Safety
// `x` must hold `d` entries and `b_out` room for `m` doubles.
enum AfStatus af_matrix_amplitudes(const struct AfMatrix *h,
                                   const struct AfComplex *x,
                                   double *b_out);

// Fresh solver configuration with the library defaults.
//
// # Safety
// `out` must point to writable storage for one pointer.
enum AfStatus af_config_new(struct AfConfig **out);

// Release a configuration.  NULL is ignored.
//
// # Safety
// `h` must have come from [`af_config_new`] and not been freed before.
void af_config_free(struct AfConfig *h);

// Cap on update steps.
//
// # Safety
// `h` must be a live configuration handle.
enum AfStatus af_config_set_max_iters(struct AfConfig *h, size_t max_iters);

// Reference gradient step size.
//
// # Safety
// `h` must be a live configuration handle.
enum AfStatus af_config_set_step(struct AfConfig *h, double step);

// Relative loss-change stopping tolerance.
//
// # Safety
// `h` must be a live configuration handle.
enum AfStatus af_config_set_tol(struct AfConfig *h, double tol);

// Row-truncation threshold `gamma`; 0 disables truncation.
//
// # Safety
// `h` must be a live configuration handle.
enum AfStatus af_config_set_truncation(struct AfConfig *h, double gamma);

// Power iterations used by the spectral initializer.
//
// # Safety
// `h` must be a live configuration handle.
enum AfStatus af_config_set_power_iters(struct AfConfig *h, size_t iters);

// Start from the given vector (length `d`) instead of the spectral
// initializer.
//
// # Safety
// `h` must be a live configuration handle and `x0` must hold `len` entries.
enum AfStatus af_config_set_init(struct AfConfig *h, const struct AfComplex *x0, size_t len);

// Amplitude flow on observations `b[0..m]`.  `cfg` may be NULL for the
// defaults.
//
// # Safety
// `h` must be a live matrix handle, `b` must hold `m` doubles, `out` must
// point to writable storage for one pointer.
enum AfStatus af_solve_amplitude_flow(const struct AfMatrix *h,
                                      const double *b,
                                      const struct AfConfig *cfg,
                                      struct AfResult **out);

// Alternating projection on observations `b[0..m]`; needs `m >= d`.  `cfg`
// may be NULL for the defaults.
//
// # Safety
// `h` must be a live matrix handle, `b` must hold `m` doubles, `out` must
// point to writable storage for one pointer.
enum AfStatus af_solve_alternating_projection(const struct AfMatrix *h,
                                              const double *b,
                                              const struct AfConfig *cfg,
                                              struct AfResult **out);

// Projected amplitude flow for `k`-sparse signals inside the l1 ball of
// `radius`.  `cfg` may be NULL for the defaults.
//
// # Safety
// `h` must be a live matrix handle, `b` must hold `m` doubles, `out` must
// point to writable storage for one pointer.
enum AfStatus af_solve_sparse(const struct AfMatrix *h,
                              const double *b,
                              double radius,
                              size_t k,
                              const struct AfConfig *cfg,
                              struct AfResult **out);

// Release a result.  NULL is ignored.
//
// # Safety
// `h` must have come from a solve call and not been freed before.
void af_result_free(struct AfResult *h);

// Length of the recovered signal, 0 on NULL.
//
// # Safety
// `h` must be a live result handle or NULL.
size_t af_result_dim(const struct AfResult *h);

// Copy the recovered signal into `x_out[0..dim]`.
//
// # Safety
// `x_out` must have room for `af_result_dim(h)` entries.
enum AfStatus af_result_copy_x(const struct AfResult *h, struct AfComplex *x_out);

// Update steps performed, 0 on NULL.
//
// # Safety
// `h` must be a live result handle or NULL.
size_t af_result_iterations(const struct AfResult *h);

// 1 when the run stopped with a first-order certificate, else 0.
//
// # Safety
// `h` must be a live result handle or NULL.
int32_t af_result_converged(const struct AfResult *h);

// First-order optimality score at the final iterate, NaN on NULL.
//
// # Safety
// `h` must be a live result handle or NULL.
double af_result_stationarity(const struct AfResult *h);

// `sqrt(final loss)`, NaN on NULL.
//
// # Safety
// `h` must be a live result handle or NULL.
double af_result_final_residual(const struct AfResult *h);

// Distance between `x` and `y` (length `len`) up to a global phase,
// written to `out`.
//
// # Safety
// `x` and `y` must hold `len` entries each; `out` must be writable.
enum AfStatus af_phase_dist(const struct AfComplex *x,
                            const struct AfComplex *y,
                            size_t len,
                            double *out);

// Data-fit radius for `m` observations at tail level `alpha`, written to
// `out`.
//
// # Safety
// `out` must be writable.
enum AfStatus af_chi_square_epsilon(size_t m, double alpha, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* AMPFLOW_H */
