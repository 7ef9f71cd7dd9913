#ifndef FAULTDIAG_H
#define FAULTDIAG_H

#include <stddef.h>
#include <stdint.h>

/*
 Status code. The numeric values of the error classes match the exit codes
 of the command-line tool.
 */
typedef enum FdStatus {
  FD_STATUS_OK = 0,
  FD_STATUS_CONFIG = 2,
  FD_STATUS_DATA = 3,
  FD_STATUS_NUMERIC = 4,
  FD_STATUS_NULL_POINTER = 5,
  FD_STATUS_INVALID_UTF8 = 6,
  FD_STATUS_PANIC = 7,
} FdStatus;

typedef enum FdMetric {
  FD_METRIC_EUCLIDEAN = 0,
  FD_METRIC_MANHATTAN = 1,
  FD_METRIC_BRAYCURTIS = 2,
} FdMetric;

/*
 Opaque distance matrix handle.
 */
typedef struct FdDistanceMatrix FdDistanceMatrix;

/*
 Opaque feature matrix handle.
 */
typedef struct FdFeatureMatrix FdFeatureMatrix;

/*
 Opaque pipeline report handle.
 */
typedef struct FdReport FdReport;

typedef struct FdPermanovaResult {
  double pseudo_f;
  double p_value;
  double ss_total;
  double ss_among;
  double ss_within;
  size_t df_among;
  size_t df_within;
  size_t permutations;
  size_t exceedances;
} FdPermanovaResult;

typedef struct FdDispersionResult {
  double anova_f;
  double p_value;
  /*
   F-distribution p value; NaN when unavailable.
   */
  double parametric_p;
  size_t df_among;
  size_t df_within;
  size_t permutations;
  size_t exceedances;
  size_t clamped_count;
} FdDispersionResult;

typedef struct FdShapiroResult {
  double w;
  double p_value;
} FdShapiroResult;

typedef struct FdBartlettResult {
  double k_squared;
  size_t df;
  double p_value;
} FdBartlettResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message of the last failed call on this thread, or NULL. The pointer stays
 valid until the next failing call on the same thread.
 */
const char *fd_last_error_message(void);

/*
 Release a string returned by this library.
 */
void fd_string_free(char *s);

/*
 Feature matrix from `n_rows * n_cols` row-major values. Features are named
 `f1..fp` and samples `s1..sn`.
 */
enum FdStatus fd_feature_matrix_new(const double *values,
                                    size_t n_rows,
                                    size_t n_cols,
                                    struct FdFeatureMatrix **out);

void fd_feature_matrix_free(struct FdFeatureMatrix *fm);

/*
 Pairwise dissimilarities between the rows of `fm`.
 */
enum FdStatus fd_distance_matrix_from_features(const struct FdFeatureMatrix *fm,
                                               enum FdMetric metric,
                                               struct FdDistanceMatrix **out);

/*
 Distance matrix from `n * n` row-major values. The matrix must be
 symmetric, non-negative and zero on the diagonal.
 */
enum FdStatus fd_distance_matrix_new(const double *values, size_t n, struct FdDistanceMatrix **out);

/*
 Number of observations, or 0 for NULL.
 */
size_t fd_distance_matrix_len(const struct FdDistanceMatrix *dm);

void fd_distance_matrix_free(struct FdDistanceMatrix *dm);

/*
 PERMANOVA with `permutations` label permutations drawn from `seed`.
 `labels` holds one group label per observation.
 */
enum FdStatus fd_permanova(const struct FdDistanceMatrix *dm,
                           const uint32_t *labels,
                           size_t n_labels,
                           size_t permutations,
                           uint64_t seed,
                           struct FdPermanovaResult *out);

/*
 Homogeneity of multivariate dispersions around group centroids.
 */
enum FdStatus fd_permdisp(const struct FdDistanceMatrix *dm,
                          const uint32_t *labels,
                          size_t n_labels,
                          size_t permutations,
                          uint64_t seed,
                          struct FdDispersionResult *out);

enum FdStatus fd_shapiro_wilk(const double *x, size_t n, struct FdShapiroResult *out);

/*
 Bartlett's test on `values` split by `labels`, both of length `n`.
 */
enum FdStatus fd_bartlett(const double *values,
                          const uint32_t *labels,
                          size_t n,
                          struct FdBartlettResult *out);

/*
 Write the six-state synthetic dataset (`manifest.csv`, `labels.csv`,
 `waveforms/`) under `dir`.
 */
enum FdStatus fd_datagen_write(const char *dir, size_t per_state, uint64_t seed);

/*
 Run the full pipeline from a TOML configuration. Relative paths in the
 configuration resolve against the working directory.

 A stage failure still yields a report; check it with
 [`fd_report_status`].
 */
enum FdStatus fd_pipeline_run(const char *config_toml, struct FdReport **out);

/*
 `FD_STATUS_OK` if every stage ran, otherwise the class of the recorded
 stage failure with its message available from [`fd_last_error_message`].
 */
enum FdStatus fd_report_status(const struct FdReport *report);

/*
 Selected number of clusters, or 0 if clustering did not run.
 */
size_t fd_report_cluster_count(const struct FdReport *report);

/*
 The report as pretty-printed JSON. Free with [`fd_string_free`].
 */
enum FdStatus fd_report_to_json(const struct FdReport *report, char **out);

/*
 Write `report.json`, the pairwise table and the plots under `dir`.
 */
enum FdStatus fd_report_write(const struct FdReport *report, const char *dir);

void fd_report_free(struct FdReport *report);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FAULTDIAG_H */
