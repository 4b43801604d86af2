#ifndef EQUILAB_H
#define EQUILAB_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by fallible calls.
 */
typedef enum EqStatus {
  EqStatusOk = 0,
  EqStatusNullPointer = 1,
  EqStatusInvalidArgument = 2,
  EqStatusDimensionMismatch = 3,
  EqStatusNumericalFailure = 4,
  EqStatusPanic = 5,
} EqStatus;

/**
 * Feature maps for sign-task ERM.
 */
typedef enum EqFeatureMap {
  EqFeaturesPerCoordinateSquares = 0,
  EqFeaturesConv2SquareSums = 1,
} EqFeatureMap;

/**
 * Opaque trained predictor.
 */
typedef struct EqPredictor EqPredictor;

/**
 * Opaque deterministic random stream.
 */
typedef struct EqRng EqRng;

/**
 * Opaque task handle.
 */
typedef struct EqTask EqTask;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copy the last error message (UTF-8, NUL terminated) into `buf`.
 * Returns the full message length in bytes (excluding the terminator), so
 * callers can resize and retry; `buf` may be null to query the length.
 */
uintptr_t eq_last_error(char *buf, uintptr_t len);

/**
 * Library version as a static NUL-terminated string.
 */
const char *eq_version(void);

struct EqRng *eq_rng_new(uint64_t seed);

/**
 * Derived stream; independent of the parent for distinct ids.
 */
struct EqRng *eq_rng_child(const struct EqRng *rng, uint64_t id);

void eq_rng_free(struct EqRng *rng);

/**
 * Haar-distributed d×d orthogonal matrix into `out` (row-major, d*d).
 */
enum EqStatus eq_haar_orthogonal(uintptr_t d, struct EqRng *rng, double *out);

/**
 * `E (xᵀMx)²` for x ~ N(0, I): `2‖sym(M)‖_F² + tr(M)²`.
 */
enum EqStatus eq_matrix_var_closed(const double *m, uintptr_t d, double *out);

/**
 * The Bayes regression floor `max(0, d(d+1) − 2n)`.
 */
double eq_regression_floor(uintptr_t d, uintptr_t n);

/**
 * Empirical disagreement probability of the two bilinear-sign hypotheses
 * given by orthogonal U and V (row-major d×d).
 */
enum EqStatus eq_rho_empirical(const double *u,
                               const double *v,
                               uintptr_t d,
                               uintptr_t samples,
                               struct EqRng *rng,
                               double *out_mean,
                               double *out_std_error);

/**
 * Shattering witness `exp(λu)` for the given ±1 sign pattern over pairs
 * i<j (row-major upper triangle, length d(d−1)/2); writes the d×d witness.
 */
enum EqStatus eq_shatter_witness(uintptr_t d, const double *signs, double lambda, double *out);

/**
 * Uniform over {±eᵢ}, labeled by the sign of the non-zero coordinate.
 */
struct EqTask *eq_task_onehot(uintptr_t d);

/**
 * Gaussian input, label = sign of first-half minus second-half squared
 * norms (`d` is the total, even dimension).
 */
struct EqTask *eq_task_quadratic_split(uintptr_t d);

/**
 * Cyclic 1-D texture classification on 2d support points.
 */
struct EqTask *eq_task_texture(uintptr_t d);

uintptr_t eq_task_dim(const struct EqTask *task);

/**
 * Draw n labeled samples; `out_x` is n×d row-major, `out_y` length n.
 */
enum EqStatus eq_task_sample(const struct EqTask *task,
                             struct EqRng *rng,
                             uintptr_t n,
                             double *out_x,
                             double *out_y);

/**
 * Deterministic label of a point of the task's dimension.
 */
enum EqStatus eq_task_label(const struct EqTask *task, const double *x, uintptr_t d, double *out);

void eq_task_free(struct EqTask *task);

/**
 * Zero-error feature-space separator (logistic regression driven to
 * margin); xs is n×d row-major, ys holds ±1 labels.
 */
struct EqPredictor *eq_train_erm_sign(enum EqFeatureMap features,
                                      const double *xs,
                                      const double *ys,
                                      uintptr_t n,
                                      uintptr_t d);

/**
 * Two-layer quadratic FC net trained by full-batch GD on the logistic loss
 * from Gaussian initialization.
 */
struct EqPredictor *eq_train_fc_gd(const double *xs,
                                   const double *ys,
                                   uintptr_t n,
                                   uintptr_t d,
                                   uintptr_t hidden,
                                   double eta,
                                   uintptr_t steps,
                                   double sigma,
                                   uint64_t seed);

/**
 * Raw score of the predictor at a point.
 */
enum EqStatus eq_predictor_score(const struct EqPredictor *pred,
                                 const double *x,
                                 uintptr_t d,
                                 double *out);

/**
 * Emitted label (±1 for sign predictors, the raw score otherwise).
 */
enum EqStatus eq_predictor_predict(const struct EqPredictor *pred,
                                   const double *x,
                                   uintptr_t d,
                                   double *out);

void eq_predictor_free(struct EqPredictor *pred);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* EQUILAB_H */
