/* C interface for the stabjgl joint network estimator. */

#ifndef STABJGL_H
#define STABJGL_H

/* Generated by cbindgen from the stabjgl-ffi crate; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Outcome of a call: `Ok` or the failure class.
 *
 * `InvalidArgument` covers null or malformed inputs and out-of-range
 * options; `NumericalError` covers aborts inside estimation (factorization
 * failures, too many failed subsample fits); `Panic` reports a defect in
 * this library that was caught at the boundary.
 */
typedef enum StabjglStatus {
  STABJGL_STATUS_OK = 0,
  STABJGL_STATUS_NULL_POINTER = 1,
  STABJGL_STATUS_INVALID_ARGUMENT = 2,
  STABJGL_STATUS_NUMERICAL_ERROR = 3,
  STABJGL_STATUS_PANIC = 4,
} StabjglStatus;

/**
 * Observations for all groups; create with `stabjgl_dataset_create`.
 */
typedef struct StabjglDataset StabjglDataset;

/**
 * A finished estimation; query with the `stabjgl_result_*` accessors.
 */
typedef struct StabjglFitResult StabjglFitResult;

/**
 * Every tunable of the pipeline, flattened for C.
 *
 * Obtain a baseline from `stabjgl_options_default` and override fields as
 * needed. Both penalty grids are inclusive, evenly spaced `lo..hi` ranges;
 * a single-point grid requires `lo == hi`. Validation happens inside
 * `stabjgl_infer`.
 */
typedef struct StabjglOptions {
  /**
   * Sparsity-penalty grid: low endpoint (must be positive).
   */
  double lambda1_lo;
  /**
   * Sparsity-penalty grid: high endpoint.
   */
  double lambda1_hi;
  /**
   * Sparsity-penalty grid: number of values.
   */
  uintptr_t lambda1_count;
  /**
   * Similarity-penalty grid: low endpoint (zero allowed).
   */
  double lambda2_lo;
  /**
   * Similarity-penalty grid: high endpoint.
   */
  double lambda2_hi;
  /**
   * Similarity-penalty grid: number of values.
   */
  uintptr_t lambda2_count;
  /**
   * Similarity penalty held fixed during the subsample sweeps.
   */
  double lambda2_init;
  /**
   * Variability threshold for the sparsity-penalty selection, strictly
   * between 0 and 1.
   */
  double beta1;
  /**
   * Subsamples per group.
   */
  uintptr_t n_subsamples;
  /**
   * Subsample-size cap as a fraction of each group's rows, in (0, 1).
   */
  double subsample_cap_ratio;
  /**
   * Extra sparsity weight of the information criterion, in [0, 1];
   * 0 gives the plain criterion.
   */
  double gamma;
  /**
   * Augmented-Lagrangian parameter of the solver.
   */
  double admm_rho;
  /**
   * Solver iteration cap.
   */
  uintptr_t max_iter;
  /**
   * Solver primal stopping tolerance.
   */
  double primal_tol;
  /**
   * Solver dual stopping tolerance.
   */
  double dual_tol;
  /**
   * Scale each variable to unit sample variance before estimation.
   */
  bool standardize;
  /**
   * Seed for the subsample draws; fixed seed means fixed output.
   */
  uint64_t seed;
} StabjglOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static UTF-8/ASCII string; never null, never freed.
 */
const char *stabjgl_version(void);

/**
 * Message for the calling thread's most recent failure, or null after a
 * success. The pointer stays valid until this thread's next call into the
 * library; copy the string if it must outlive that.
 */
const char *stabjgl_last_error(void);

/**
 * The defaults of the underlying library: 20-point penalty grids over
 * [0.01, 1] and [0, 0.1], threshold 0.1, 20 subsamples, criterion weight 0,
 * solver at rho 1 with tolerance 1e-5, standardization on, seed 0.
 */
struct StabjglOptions stabjgl_options_default(void);

/**
 * Bundle per-group observation matrices into a dataset handle.
 *
 * `groups` holds `n_groups` pointers; `groups[k]` is a row-major
 * `rows[k] x p` matrix of finite values (rows are observations, columns are
 * the `p` shared variables, zero-based). The data is copied; the caller's
 * buffers are never retained. On `Ok`, `*out` owns the handle and must be
 * released with `stabjgl_dataset_free`.
 *
 * # Safety
 *
 * `groups` must point to `n_groups` readable pointers, `rows` to
 * `n_groups` readable lengths, each `groups[k]` to `rows[k] * p` readable
 * doubles, and `out` to a writable pointer slot.
 */
enum StabjglStatus stabjgl_dataset_create(const double *const *groups,
                                          const uintptr_t *rows,
                                          uintptr_t n_groups,
                                          uintptr_t p,
                                          struct StabjglDataset **out);

/**
 * Release a dataset handle. Null is a no-op.
 *
 * # Safety
 *
 * `dataset` must be a pointer from `stabjgl_dataset_create` that has not
 * been freed already.
 */
void stabjgl_dataset_free(struct StabjglDataset *dataset);

/**
 * Run the full pipeline: select both penalties, fit the final model.
 *
 * On `Ok`, `*out` owns the result handle and must be released with
 * `stabjgl_result_free`. Runtime grows steeply with the variable count;
 * expect seconds for tens of variables and minutes for hundreds.
 *
 * # Safety
 *
 * `dataset` must be a live handle from `stabjgl_dataset_create`, `options`
 * either null (defaults) or a readable options struct, and `out` a
 * writable pointer slot.
 */
enum StabjglStatus stabjgl_infer(const struct StabjglDataset *dataset,
                                 const struct StabjglOptions *options,
                                 struct StabjglFitResult **out);

/**
 * Release a result handle. Null is a no-op.
 *
 * # Safety
 *
 * `result` must be a pointer from `stabjgl_infer` that has not been freed
 * already.
 */
void stabjgl_result_free(struct StabjglFitResult *result);

/**
 * Selected penalties: sparsity into `*lambda1`, similarity into `*lambda2`.
 *
 * # Safety
 *
 * `result` must be a live handle; `lambda1` and `lambda2` must be writable.
 */
enum StabjglStatus stabjgl_result_lambdas(const struct StabjglFitResult *result,
                                          double *lambda1,
                                          double *lambda2);

/**
 * Problem shape: group count into `*n_groups`, variable count into `*p`.
 *
 * # Safety
 *
 * `result` must be a live handle; `n_groups` and `p` must be writable.
 */
enum StabjglStatus stabjgl_result_shape(const struct StabjglFitResult *result,
                                        uintptr_t *n_groups,
                                        uintptr_t *p);

/**
 * Fraction of possible edges present in one group's estimated graph.
 *
 * # Safety
 *
 * `result` must be a live handle; `sparsity` must be writable.
 */
enum StabjglStatus stabjgl_result_sparsity(const struct StabjglFitResult *result,
                                           uintptr_t group,
                                           double *sparsity);

/**
 * Number of edges in one group's estimated graph.
 *
 * # Safety
 *
 * `result` must be a live handle; `count` must be writable.
 */
enum StabjglStatus stabjgl_result_edge_count(const struct StabjglFitResult *result,
                                             uintptr_t group,
                                             uintptr_t *count);

/**
 * Copy one group's edges as zero-based index pairs.
 *
 * Edges are written interleaved — `out[0], out[1]` is the first edge —
 * in ascending order with `i < j`. `capacity` is the length of `out` in
 * `uint32_t` units and must be at least twice the edge count (query it
 * with `stabjgl_result_edge_count`).
 *
 * # Safety
 *
 * `result` must be a live handle and `out` writable for `capacity`
 * elements.
 */
enum StabjglStatus stabjgl_result_edges(const struct StabjglFitResult *result,
                                        uintptr_t group,
                                        uint32_t *out,
                                        uintptr_t capacity);

/**
 * Copy one group's estimated precision matrix, row-major `p x p`.
 *
 * This is the sparsity-carrying estimate: entries are exactly zero off the
 * estimated graph. `capacity` is the length of `out` in doubles and must
 * be at least `p * p`.
 *
 * # Safety
 *
 * `result` must be a live handle and `out` writable for `capacity`
 * elements.
 */
enum StabjglStatus stabjgl_result_precision(const struct StabjglFitResult *result,
                                            uintptr_t group,
                                            double *out,
                                            uintptr_t capacity);

/**
 * Copy one group's partial-correlation matrix, row-major `p x p`.
 *
 * Off-diagonal entries are the estimated conditional dependencies on
 * the [-1, 1] scale (zero off the estimated graph); the diagonal is 1 by
 * convention. `capacity` must be at least `p * p`.
 *
 * # Safety
 *
 * `result` must be a live handle and `out` writable for `capacity`
 * elements.
 */
enum StabjglStatus stabjgl_result_partial_correlations(const struct StabjglFitResult *result,
                                                       uintptr_t group,
                                                       double *out,
                                                       uintptr_t capacity);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* STABJGL_H */
