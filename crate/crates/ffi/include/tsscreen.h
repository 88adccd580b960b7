#ifndef TSSCREEN_H
#define TSSCREEN_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status code returned by every fallible function.
 */
typedef enum TssStatus {
  TSS_STATUS_OK = 0,
  TSS_STATUS_NULL_POINTER = 1,
  /**
   * Bad dimensions, parameters or configuration.
   */
  TSS_STATUS_INVALID_ARGUMENT = 2,
  /**
   * Numerical failure inside an estimator.
   */
  TSS_STATUS_NUMERICAL = 3,
  /**
   * Caller buffer is shorter than required.
   */
  TSS_STATUS_BUFFER_TOO_SMALL = 4,
  /**
   * A Rust panic was caught at the boundary.
   */
  TSS_STATUS_PANIC = 5,
} TssStatus;

typedef enum TssCase {
  TSS_CASE_C1 = 0,
  TSS_CASE_C2A = 1,
  TSS_CASE_C2B = 2,
  TSS_CASE_C3A = 3,
  TSS_CASE_C3B = 4,
} TssCase;

typedef enum TssDist {
  TSS_DIST_GAUSSIAN = 0,
  TSS_DIST_T5 = 1,
} TssDist;

/**
 * Screening statistic.
 */
typedef enum TssMethod {
  TSS_METHOD_SIS = 0,
  /**
   * Banded GLS screening with the given band and taper flag.
   */
  TSS_METHOD_GLSS = 1,
} TssMethod;

/**
 * Covariates and response.
 */
typedef struct TssDataset TssDataset;

/**
 * Result of a screening run.
 */
typedef struct TssScreening TssScreening;

/**
 * Screening method and its parameters.
 */
typedef struct TssScreenSpec {
  enum TssMethod method;
  /**
   * Band length (GLS only).
   */
  size_t band;
  /**
   * Nonzero to taper the autocovariances (GLS only).
   */
  int32_t taper;
  /**
   * Nonzero to standardize columns before scoring.
   */
  int32_t standardize;
} TssScreenSpec;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failure on this thread, or NULL. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *tss_last_error(void);

/**
 * Copy `x` (row-major `n x p`) and `y` (length `n`) into a new dataset.
 *
 * # Safety
 * `x` must point to `n * p` doubles and `y` to `n` doubles; `out` must be writable.
 */
enum TssStatus tss_dataset_new(const double *x,
                               const double *y,
                               size_t n,
                               size_t p,
                               struct TssDataset **out);

/**
 * # Safety
 * `ds` must be NULL or a handle from this library not yet freed.
 */
void tss_dataset_free(struct TssDataset *ds);

/**
 * # Safety
 * `ds` must be a live handle; `n` and `p` may be NULL.
 */
enum TssStatus tss_dataset_dims(const struct TssDataset *ds, size_t *n, size_t *p);

/**
 * Copy the covariates (row-major) into `buf`, which holds `len` doubles.
 *
 * # Safety
 * `ds` must be a live handle and `buf` writable for `len` doubles.
 */
enum TssStatus tss_dataset_copy_x(const struct TssDataset *ds, double *buf, size_t len);

/**
 * Copy the response into `buf`, which holds `len` doubles.
 *
 * # Safety
 * `ds` must be a live handle and `buf` writable for `len` doubles.
 */
enum TssStatus tss_dataset_copy_y(const struct TssDataset *ds, double *buf, size_t len);

/**
 * Draw replication `rep` of a built-in simulation scenario.
 * `gamma` is used by case C1 only.
 *
 * # Safety
 * `out` must be writable.
 */
enum TssStatus tss_simulate_preset(enum TssCase case_,
                                   enum TssDist dist,
                                   size_t p,
                                   double gamma,
                                   double alpha,
                                   uint64_t seed,
                                   uint64_t rep,
                                   struct TssDataset **out);

/**
 * Score every column and keep the top `d`.
 *
 * # Safety
 * `ds` must be a live handle, `spec` readable and `out` writable.
 */
enum TssStatus tss_screen(const struct TssDataset *ds,
                          const struct TssScreenSpec *spec,
                          size_t d,
                          struct TssScreening **out);

/**
 * # Safety
 * `s` must be NULL or a handle from this library not yet freed.
 */
void tss_screening_free(struct TssScreening *s);

/**
 * Number of selected columns, or 0 for a NULL handle.
 *
 * # Safety
 * `s` must be NULL or a live handle.
 */
size_t tss_screening_selected_len(const struct TssScreening *s);

/**
 * Copy the `p` scores into `buf`.
 *
 * # Safety
 * `s` must be a live handle and `buf` writable for `len` doubles.
 */
enum TssStatus tss_screening_scores(const struct TssScreening *s, double *buf, size_t len);

/**
 * Copy the column ranking (by decreasing |score|) into `buf`.
 *
 * # Safety
 * `s` must be a live handle and `buf` writable for `len` elements.
 */
enum TssStatus tss_screening_ranking(const struct TssScreening *s, size_t *buf, size_t len);

/**
 * Copy the selected columns (ascending) into `buf`.
 *
 * # Safety
 * `s` must be a live handle and `buf` writable for `len` elements.
 */
enum TssStatus tss_screening_selected(const struct TssScreening *s, size_t *buf, size_t len);

/**
 * Two-stage adaptive Lasso with the modified BIC. With `spec` NULL the
 * selector runs on all columns; otherwise the top `d` screened columns.
 * Writes `p` coefficients to `coefs` and the intercept to `intercept`.
 *
 * # Safety
 * `ds` must be a live handle, `coefs` writable for `len` doubles and
 * `intercept` writable or NULL.
 */
enum TssStatus tss_two_stage(const struct TssDataset *ds,
                             const struct TssScreenSpec *spec,
                             size_t d,
                             double *coefs,
                             size_t len,
                             double *intercept);

/**
 * Closed-form asymptotic variances of the GLS (`j`) and OLS (`v`) slope
 * estimators for AR(1) errors (`alpha`) and AR(1) covariates (`phi`).
 *
 * # Safety
 * `j` and `v` must be writable.
 */
enum TssStatus tss_asy_var(double alpha,
                           double phi,
                           double sigma_e2,
                           double sigma_eta2,
                           double *j,
                           double *v);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TSSCREEN_H */
