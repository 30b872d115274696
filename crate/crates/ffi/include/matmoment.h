#ifndef MATMOMENT_H
#define MATMOMENT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Status codes; `MM_OK` is zero.
typedef enum MmStatus {
  MM_OK = 0,
  // A required pointer argument was null.
  MM_ERR_NULL = 1,
  // Bad input data: shapes, interval, non-Hermitian matrices.
  MM_ERR_INVALID = 2,
  // Unreadable or malformed file.
  MM_ERR_PARSE = 3,
  // `K` or `T` outside `[0, I]`, or of the wrong size.
  MM_ERR_PARAMETER = 4,
  // The problem has no solution.
  MM_ERR_UNSOLVABLE = 5,
  // Numerical failure (singular resolvent, failed self-check, ...).
  MM_ERR_NUMERIC = 6,
  // Unexpected panic inside the library.
  MM_ERR_PANIC = 7,
} MmStatus;

// Opaque discrete matrix measure.
typedef struct MmMeasure MmMeasure;

// Opaque truncated moment problem.
typedef struct MmProblem MmProblem;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failure on this thread (a failed call, or the failed
// conditions of an unsolvable `mm_problem_check`); empty if none. The
// pointer stays valid until the next failing call on the same thread.
const char *mm_last_error_message(void);

// Builds a problem from `count` moments `S_0..S_{count-1}`, each `n x n`.
//
// # Safety
// `re` (and `im` unless null) must point to `count * n * n` doubles;
// `out` must be writable.
enum MmStatus mm_problem_new(double a,
                             double b,
                             size_t n,
                             size_t count,
                             const double *re,
                             const double *im,
                             struct MmProblem **out);

// Loads a problem JSON file.
//
// # Safety
// `path` must be a NUL-terminated string; `out` must be writable.
enum MmStatus mm_problem_load(const char *path, struct MmProblem **out);

// # Safety
// `problem` must come from this library and not be used afterwards.
void mm_problem_free(struct MmProblem *problem);

// Block size `N`, or 0 for a null handle.
//
// # Safety
// `problem` must be null or a live handle.
size_t mm_problem_block_size(const struct MmProblem *problem);

// Decides solvability; `*solvable` is set to 1 or 0.
//
// # Safety
// `problem` must be a live handle; `solvable` must be writable.
enum MmStatus mm_problem_check(const struct MmProblem *problem, int32_t *solvable);

// Solves with `K = k·I` and, for an even number of moments, `T = t·I`;
// both scalars must lie in `[0, 1]`.
//
// # Safety
// `problem` must be a live handle; `out` must be writable.
enum MmStatus mm_problem_solve(const struct MmProblem *problem,
                               double k,
                               double t,
                               struct MmMeasure **out);

// Solves with explicit Hermitian matrices `K` (`k_dim x k_dim`, the defect
// dimension) and `T` (`N x N`). A null real pointer selects `I/2`.
//
// # Safety
// Non-null matrix pointers must hold `dim * dim` doubles; `problem` must be
// a live handle; `out` must be writable.
enum MmStatus mm_problem_solve_matrix(const struct MmProblem *problem,
                                      size_t k_dim,
                                      const double *k_re,
                                      const double *k_im,
                                      const double *t_re,
                                      const double *t_im,
                                      struct MmMeasure **out);

// Loads a measure JSON file.
//
// # Safety
// `path` must be a NUL-terminated string; `out` must be writable.
enum MmStatus mm_measure_load(const char *path, struct MmMeasure **out);

// Writes a measure JSON file.
//
// # Safety
// `measure` must be a live handle; `path` a NUL-terminated string.
enum MmStatus mm_measure_save(const struct MmMeasure *measure, const char *path);

// # Safety
// `measure` must come from this library and not be used afterwards.
void mm_measure_free(struct MmMeasure *measure);

// Number of atoms, or 0 for a null handle.
//
// # Safety
// `measure` must be null or a live handle.
size_t mm_measure_len(const struct MmMeasure *measure);

// Block size `N`, or 0 for a null handle.
//
// # Safety
// `measure` must be null or a live handle.
size_t mm_measure_block_size(const struct MmMeasure *measure);

// Copies atom `index` (sorted by location): its location into `*x` and its
// weight into the row-major `N x N` arrays `re` / `im` (either may be null).
//
// # Safety
// `measure` must be a live handle; non-null outputs must be writable with
// room for `N * N` doubles.
enum MmStatus mm_measure_atom(const struct MmMeasure *measure,
                              size_t index,
                              double *x,
                              double *re,
                              double *im);

// Compares the moments of `measure` with `problem`; `*passed` is 1 when
// every moment matches within `tol` (relative), the support lies in
// `[a, b]` and the weights are PSD.
//
// # Safety
// Handles must be live; `passed` must be writable.
enum MmStatus mm_measure_verify(const struct MmMeasure *measure,
                                const struct MmProblem *problem,
                                double tol,
                                int32_t *passed);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MATMOMENT_H */
