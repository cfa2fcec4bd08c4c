#ifndef ANTILOP_H
#define ANTILOP_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum AntilopStatus {
  ANTILOP_STATUS_OK = 0,
  ANTILOP_STATUS_NULL_POINTER = 1,
  ANTILOP_STATUS_DIMENSION = 2,
  ANTILOP_STATUS_NON_FINITE = 3,
  ANTILOP_STATUS_INVALID_ARGUMENT = 4,
  ANTILOP_STATUS_SINGULAR = 5,
  ANTILOP_STATUS_NUMERIC_FAILURE = 6,
  ANTILOP_STATUS_IO = 7,
  ANTILOP_STATUS_PARSE = 8,
  ANTILOP_STATUS_PANIC = 9,
} AntilopStatus;

typedef enum AntilopAlgorithm {
  // Cosine-rescaled exact-line-search projected gradient.
  ANTILOP_ALGORITHM_ANTILOP = 0,
  // Lawson–Hanson active set.
  ANTILOP_ALGORITHM_FAST = 1,
  // Projected Nesterov on the unscaled system.
  ANTILOP_ALGORITHM_ACCER = 2,
  // Projected Nesterov on the rescaled system.
  ANTILOP_ALGORITHM_ANTI_ACCER = 3,
} AntilopAlgorithm;

typedef enum AntilopTermination {
  ANTILOP_TERMINATION_EMPTY_PASSIVE_SET = 0,
  ANTILOP_TERMINATION_GRADIENT_BELOW_EPSILON = 1,
  ANTILOP_TERMINATION_MAX_ITERS = 2,
  ANTILOP_TERMINATION_TIME_CAP = 3,
  ANTILOP_TERMINATION_STALLED = 4,
  ANTILOP_TERMINATION_ZERO_CURVATURE = 5,
} AntilopTermination;

// Dense column-major matrix.
typedef struct AntilopMatrix AntilopMatrix;

// Outcome of a solve.
typedef struct AntilopResult AntilopResult;

// Solver limits. `time_cap_secs <= 0` disables the wall-clock cap and
// `stall_window == 0` disables stall detection.
typedef struct AntilopConfig {
  double epsilon;
  size_t max_iters;
  double time_cap_secs;
  size_t stall_window;
  bool restart;
} AntilopConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the most recent failure on this thread, or null. The pointer
// stays valid until the next failing call on the same thread.
const char *antilop_last_error(void);

// Library version as a static NUL-terminated string.
const char *antilop_version(void);

// Copies `rows * cols` column-major values into a new matrix.
//
// # Safety
// `data` must point to `rows * cols` readable doubles and `out` must be
// writable.
enum AntilopStatus antilop_matrix_new(size_t rows,
                                      size_t cols,
                                      const double *data,
                                      struct AntilopMatrix **out);

// Reads a MatrixMarket (`.mtx`) or CSV file.
//
// # Safety
// `path` must be a NUL-terminated string and `out` must be writable.
enum AntilopStatus antilop_matrix_read(const char *path, struct AntilopMatrix **out);

// # Safety
// `m` must be null or a live handle from this library.
size_t antilop_matrix_rows(const struct AntilopMatrix *m);

// # Safety
// `m` must be null or a live handle from this library.
size_t antilop_matrix_cols(const struct AntilopMatrix *m);

// # Safety
// `m` must be null or a handle from this library not yet freed.
void antilop_matrix_free(struct AntilopMatrix *m);

// Default limits for an `n`-column problem.
struct AntilopConfig antilop_config_default(size_t n);

// Solves `min ½‖Ax − b‖²` subject to `x ≥ 0`. `config` may be null for the
// defaults.
//
// # Safety
// `a` must be a live matrix handle, `b` must point to `b_len` doubles,
// `config` must be null or valid, and `out` must be writable.
enum AntilopStatus antilop_solve(enum AntilopAlgorithm algorithm,
                                 const struct AntilopMatrix *a,
                                 const double *b,
                                 size_t b_len,
                                 const struct AntilopConfig *config,
                                 struct AntilopResult **out);

// Number of entries in the solution.
//
// # Safety
// `r` must be null or a live result handle.
size_t antilop_result_len(const struct AntilopResult *r);

// Copies the solution into `x`, which must hold `len` doubles with `len`
// equal to [`antilop_result_len`].
//
// # Safety
// `r` must be a live result handle and `x` must point to `len` writable
// doubles.
enum AntilopStatus antilop_result_x(const struct AntilopResult *r, double *x, size_t len);

// `½‖Ax − b‖²`, or NaN for a null handle.
//
// # Safety
// `r` must be null or a live result handle.
double antilop_result_objective(const struct AntilopResult *r);

// `‖Ax − b‖²`, or NaN for a null handle.
//
// # Safety
// `r` must be null or a live result handle.
double antilop_result_residual_sq(const struct AntilopResult *r);

// # Safety
// `r` must be null or a live result handle.
size_t antilop_result_iterations(const struct AntilopResult *r);

// # Safety
// `r` must be a live result handle and `out` must be writable.
enum AntilopStatus antilop_result_termination(const struct AntilopResult *r,
                                              enum AntilopTermination *out);

// # Safety
// `r` must be null or a handle from this library not yet freed.
void antilop_result_free(struct AntilopResult *r);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ANTILOP_H */
