#ifndef SYSVAR_H
#define SYSVAR_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every call.
 */
typedef enum SvStatus {
  SV_STATUS_OK = 0,
  SV_STATUS_NULL_POINTER = 1,
  SV_STATUS_INVALID_ARGUMENT = 2,
  SV_STATUS_BUFFER_TOO_SMALL = 3,
  SV_STATUS_CAPACITY = 4,
  SV_STATUS_FACTORIZATION = 5,
  SV_STATUS_DESIGN = 6,
  SV_STATUS_COLLINEARITY = 7,
  SV_STATUS_INSUFFICIENT_SAMPLE = 8,
  SV_STATUS_UNDEFINED_BIAS = 9,
  SV_STATUS_FIT = 10,
  SV_STATUS_NUMERICAL = 11,
  SV_STATUS_PANIC = 99,
} SvStatus;

/**
 * Estimator selector.
 */
typedef enum SvEstimator {
  SV_ESTIMATOR_HT = 0,
  SV_ESTIMATOR_GREG1 = 1,
  SV_ESTIMATOR_GREG2 = 2,
} SvEstimator;

/**
 * Grid sampling frame.
 */
typedef struct SvFrame SvFrame;

/**
 * Finite population with its two auxiliary variables.
 */
typedef struct SvPopulation SvPopulation;

/**
 * Point estimate and its variance estimate.
 */
typedef struct SvEstimate {
  double mu_hat;
  double var_hat;
} SvEstimate;

/**
 * Exponential semivariogram fit.
 */
typedef struct SvExponentialFit {
  double nugget;
  double partial_sill;
  double phi;
  double esr;
  /**
   * Nonzero when the range sits on the search bound.
   */
  int32_t at_lower_bound;
} SvExponentialFit;

/**
 * Repeated-sampling summary for one population, design and estimator.
 * Confidence limits are NaN when no interval could be formed.
 */
typedef struct SvCellSummary {
  size_t replicates;
  double true_mu;
  double mean_mu_hat;
  double empirical_variance;
  double empirical_ci_lo;
  double empirical_ci_hi;
  double mean_estimated_variance;
  double mean_estimated_ci_lo;
  double mean_estimated_ci_hi;
  /**
   * NaN when the empirical variance is zero.
   */
  double percent_bias;
} SvCellSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *sv_version(void);

/**
 * Copies the calling thread's last error message into `buf` (truncated,
 * always NUL-terminated when `cap > 0`). Returns the full message length
 * excluding the terminator.
 *
 * # Safety
 * `buf` must be valid for `cap` bytes or null when `cap` is 0.
 */
size_t sv_last_error(char *buf, size_t cap);

/**
 * Creates an `n_cols x n_rows` frame of square cells with its origin at 0.
 *
 * # Safety
 * `out_frame` must be a valid pointer to a handle slot.
 */
enum SvStatus sv_frame_new(size_t n_cols,
                           size_t n_rows,
                           double cell_side,
                           struct SvFrame **out_frame);

/**
 * # Safety
 * `frame` must come from `sv_frame_new` and not be used afterwards.
 */
void sv_frame_free(struct SvFrame *frame);

/**
 * Number of cells in the frame, 0 for a null handle.
 *
 * # Safety
 * `frame` must be a live handle or null.
 */
size_t sv_frame_len(const struct SvFrame *frame);

/**
 * Draws population `index` of the seeded series: two exponential-covariance
 * fields with the given variance and effective spatial range, and
 * `y = beta[0] + beta[1] x1 + beta[2] x2 + e` with `e ~ N(0, tau2)`.
 *
 * # Safety
 * `frame` must be live, `beta` must point at 3 values and `out_population`
 * at a handle slot.
 */
enum SvStatus sv_population_generate(const struct SvFrame *frame,
                                     const double *beta,
                                     double tau2,
                                     double sigma2,
                                     double esr,
                                     uint64_t master_seed,
                                     size_t index,
                                     struct SvPopulation **out_population);

/**
 * # Safety
 * `population` must come from `sv_population_generate` and not be used
 * afterwards.
 */
void sv_population_free(struct SvPopulation *population);

/**
 * Population size and mean of the response.
 *
 * # Safety
 * `population` must be live; the out pointers may be null.
 */
enum SvStatus sv_population_info(const struct SvPopulation *population,
                                 size_t *out_len,
                                 double *out_mean);

/**
 * Copies `y`, `x1` and `x2` in row-major cell order. Any of the buffers may
 * be null to skip it; each non-null one must hold `cap` values.
 *
 * # Safety
 * Non-null buffers must be valid for `cap` writes.
 */
enum SvStatus sv_population_copy(const struct SvPopulation *population,
                                 double *y,
                                 double *x1,
                                 double *x2,
                                 size_t cap);

/**
 * Simple random sample of `n` cells without replacement, sorted. The draw is
 * a pure function of `(seed, key)`.
 *
 * # Safety
 * `out_indices` must hold `cap >= n` values.
 */
enum SvStatus sv_srs_draw(const struct SvFrame *frame,
                          size_t n,
                          uint64_t seed,
                          uint64_t key,
                          size_t *out_indices,
                          size_t cap);

/**
 * Number of distinct starts of a `k_cols x k_rows` systematic layout.
 *
 * # Safety
 * `frame` must be live and `out_starts` valid.
 */
enum SvStatus sv_systematic_num_starts(const struct SvFrame *frame,
                                       size_t k_cols,
                                       size_t k_rows,
                                       size_t *out_starts);

/**
 * Cells of systematic sample `start` (in `0..num_starts`), sorted.
 *
 * # Safety
 * `out_indices` must hold `cap >= k_cols * k_rows` values.
 */
enum SvStatus sv_systematic_draw(const struct SvFrame *frame,
                                 size_t k_cols,
                                 size_t k_rows,
                                 size_t start,
                                 size_t *out_indices,
                                 size_t cap);

/**
 * Mean estimate and variance estimate from the sample `indices` of a
 * population. `fpc` nonzero applies the finite population correction.
 *
 * # Safety
 * `indices` must hold `n` values and `out_estimate` be valid.
 */
enum SvStatus sv_estimate(const struct SvPopulation *population,
                          enum SvEstimator estimator,
                          const size_t *indices,
                          size_t n,
                          int32_t fpc,
                          struct SvEstimate *out_estimate);

/**
 * `100 (mean_estimated - empirical) / empirical`; fails with
 * `UndefinedBias` when `empirical <= 0`.
 *
 * # Safety
 * `out_bias` must be valid.
 */
enum SvStatus sv_percent_bias(double mean_estimated, double empirical, double *out_bias);

/**
 * Binned semivariogram of `n` located values and its exponential fit.
 * `max_lag <= 0` uses half the largest pairwise distance.
 *
 * # Safety
 * `x`, `y` and `values` must each hold `n` values.
 */
enum SvStatus sv_fit_exponential(const double *x,
                                 const double *y,
                                 const double *values,
                                 size_t n,
                                 size_t bins,
                                 double max_lag,
                                 struct SvExponentialFit *out_fit);

/**
 * Repeated sampling of one population under one design for one estimator.
 * `k_rows == 0` selects simple random sampling of `n = k_cols` cells with
 * `replications` draws; otherwise a `k_cols x k_rows` systematic design with
 * every start enumerated. Intervals use `bootstrap_b` resamples at 95%.
 *
 * # Safety
 * `population` must be live and `out_summary` valid.
 */
enum SvStatus sv_run_cell(const struct SvPopulation *population,
                          size_t k_cols,
                          size_t k_rows,
                          enum SvEstimator estimator,
                          uint64_t master_seed,
                          size_t replications,
                          size_t bootstrap_b,
                          struct SvCellSummary *out_summary);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SYSVAR_H */
