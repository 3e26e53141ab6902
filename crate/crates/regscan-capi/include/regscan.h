/* C interface to the regscan spatial scan engine. */

#ifndef REGSCAN_H
#define REGSCAN_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status of a fallible call. Values 1-3 match the process exit codes of
 * the `regscan` binary for the same failure.
 */
typedef enum RegscanStatus {
  REGSCAN_STATUS_OK = 0,
  /**
   * Invalid configuration: unknown statistic, bad option value.
   */
  REGSCAN_STATUS_USAGE = 1,
  /**
   * The data could not be read or fails validation.
   */
  REGSCAN_STATUS_DATA = 2,
  /**
   * The computation degenerated numerically.
   */
  REGSCAN_STATUS_NUMERIC = 3,
  /**
   * A required pointer argument was NULL.
   */
  REGSCAN_STATUS_NULL_ARGUMENT = 4,
  /**
   * An internal panic was caught at the boundary.
   */
  REGSCAN_STATUS_PANIC = 5,
} RegscanStatus;

/**
 * Opaque scan result handle.
 */
typedef struct RegscanScan RegscanScan;

/**
 * Opaque region table handle.
 */
typedef struct RegscanTable RegscanTable;

/**
 * Opaque candidate zone family handle.
 */
typedef struct RegscanZones RegscanZones;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *regscan_version(void);

/**
 * Message for the most recent failure on this thread. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *regscan_last_error(void);

/**
 * Load a region table from a CSV file using the same schema as the
 * command-line tool (columns id, x, y, outcome, and optionally
 * baseline, var and cov_ prefixed covariates).
 */
enum RegscanStatus regscan_table_load(const char *path, struct RegscanTable **out);

/**
 * Build a region table from parallel arrays of length `n`. Region ids
 * are synthesized as r0..r(n-1). `baseline` may be NULL for all-ones.
 */
enum RegscanStatus regscan_table_new(uintptr_t n,
                                     const double *x,
                                     const double *y,
                                     const double *outcome,
                                     const double *baseline,
                                     struct RegscanTable **out);

/**
 * Number of regions; 0 for NULL.
 */
uintptr_t regscan_table_len(const struct RegscanTable *table);

void regscan_table_free(struct RegscanTable *table);

/**
 * Build the circular zone family: for every region as a center, all
 * nearest-neighbor prefixes by Euclidean centroid distance.
 * `max_fraction <= 0` lifts the baseline-share cap, `max_size == 0`
 * lifts the member-count cap.
 */
enum RegscanStatus regscan_zones_circular(const struct RegscanTable *table,
                                          double max_fraction,
                                          uintptr_t max_size,
                                          struct RegscanZones **out);

/**
 * Number of candidate zones; 0 for NULL.
 */
uintptr_t regscan_zones_len(const struct RegscanZones *zones);

void regscan_zones_free(struct RegscanZones *zones);

/**
 * Scan every candidate zone with the named statistic (for example
 * "poisson-pop", "gauss-unknown-exp" or "glm-poisson-pop" for the
 * covariate-adjusted route). `direction` is 0 for both effect signs,
 * 1 for elevated only, 2 for depressed only.
 */
enum RegscanStatus regscan_scan_run(const struct RegscanTable *table,
                                    const struct RegscanZones *zones,
                                    const char *model,
                                    uintptr_t top,
                                    int direction,
                                    struct RegscanScan **out);

/**
 * Zone id of the most likely cluster; 0 when no zone beats the null
 * or for NULL.
 */
uintptr_t regscan_scan_mlc_id(const struct RegscanScan *scan);

/**
 * Maximized log-likelihood ratio; 0 when no cluster was found, NaN for
 * NULL.
 */
double regscan_scan_mlc_llr(const struct RegscanScan *scan);

/**
 * Estimated effect of the most likely cluster on the link scale; NaN
 * when no cluster was found or for NULL.
 */
double regscan_scan_mlc_theta(const struct RegscanScan *scan);

/**
 * Number of regions in the most likely cluster; 0 when none.
 */
uintptr_t regscan_scan_mlc_size(const struct RegscanScan *scan);

/**
 * Row index of the k-th member of the most likely cluster, ascending;
 * -1 when out of range.
 */
intptr_t regscan_scan_mlc_member(const struct RegscanScan *scan, uintptr_t k);

/**
 * Number of zones evaluated successfully.
 */
uintptr_t regscan_scan_evaluated(const struct RegscanScan *scan);

void regscan_scan_free(struct RegscanScan *scan);

/**
 * Monte Carlo test of the most likely cluster: `replicates` null
 * datasets are scanned with the fixed seed and the rank-based p-value
 * and observed maximum ratio are written through the non-NULL
 * out-pointers.
 */
enum RegscanStatus regscan_mc_run(const struct RegscanTable *table,
                                  const struct RegscanZones *zones,
                                  const char *model,
                                  uintptr_t replicates,
                                  uint64_t seed,
                                  double *out_p_value,
                                  double *out_observed_llr);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* REGSCAN_H */
