#ifndef L2D_H
#define L2D_H

#pragma once

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status code returned by every function.
 */
typedef enum L2dStatus {
  L2D_STATUS_OK = 0,
  /**
   * A required pointer was null.
   */
  L2D_STATUS_NULL_POINTER = 1,
  /**
   * A length, label, score or cost was invalid.
   */
  L2D_STATUS_INVALID_ARGUMENT = 2,
  /**
   * A spec token or instance document could not be parsed.
   */
  L2D_STATUS_PARSE_ERROR = 3,
  /**
   * An argument lies outside the mathematical domain of the call.
   */
  L2D_STATUS_DOMAIN_ERROR = 4,
  /**
   * The request is well formed but not supported.
   */
  L2D_STATUS_UNSUPPORTED = 5,
  /**
   * The output buffer is too small; the required size was reported.
   */
  L2D_STATUS_BUFFER_TOO_SMALL = 6,
  /**
   * Numerical failure or a caught panic.
   */
  L2D_STATUS_INTERNAL = 7,
} L2dStatus;

/**
 * Finite distribution together with its expert panel.
 */
typedef struct L2dInstance L2dInstance;

/**
 * Parsed surrogate loss.
 */
typedef struct L2dSpec L2dSpec;

/**
 * Both sides of the consistency bound for one instance and score table.
 */
typedef struct L2dBoundResult {
  /**
   * Deferral estimation error plus the deferral minimizability gap.
   */
  double lhs;
  /**
   * Right-hand side (cost constants dropped when the transform is linear).
   */
  double rhs;
  /**
   * Right-hand side with the cost constants kept.
   */
  double rhs_with_constants;
  double surrogate_regret;
  double deferral_regret;
  /**
   * 1 when the inequality holds within tolerance, else 0.
   */
  int32_t holds;
} L2dBoundResult;

/**
 * Approximation error minus minimizability gap of the binary exponential loss.
 */
typedef struct L2dExpGap {
  double closed_form;
  double numeric;
} L2dExpGap;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null if none failed.
 *
 * The string stays valid until the next failing call on the same thread.
 */
const char *l2d_last_error_message(void);

/**
 * Parses a spec token such as `comp_sum:log` or `sum:rho(rho=2)`.
 *
 * # Safety
 * `token` must be a NUL-terminated string and `out` a valid pointer.
 * The handle written to `out` must be released with [`l2d_spec_free`].
 */
enum L2dStatus l2d_spec_parse(const char *token, struct L2dSpec **out);

/**
 * Releases a spec handle. Null is ignored.
 *
 * # Safety
 * `spec` must come from [`l2d_spec_parse`] and not have been freed.
 */
void l2d_spec_free(struct L2dSpec *spec);

/**
 * Writes the canonical token of `spec` as a NUL-terminated string.
 *
 * `needed` receives the buffer size including the terminator. When
 * `capacity` is smaller, nothing is written to `buffer` and
 * [`L2dStatus::BufferTooSmall`] is returned.
 *
 * # Safety
 * `buffer` must hold `capacity` bytes (it may be null when `capacity` is 0).
 */
enum L2dStatus l2d_spec_name(const struct L2dSpec *spec,
                             char *buffer,
                             size_t capacity,
                             size_t *needed);

/**
 * Surrogate loss at scores `s` for class `y` and per-expert costs.
 *
 * # Safety
 * `scores` must hold `scores_len` values, `costs` must hold `experts`
 * values and `out` must be a valid pointer.
 */
enum L2dStatus l2d_surrogate_loss(const struct L2dSpec *spec,
                                  size_t classes,
                                  size_t experts,
                                  const double *scores,
                                  size_t scores_len,
                                  size_t y,
                                  const double *costs,
                                  double *out);

/**
 * Gradient of the surrogate loss in the scores, written to `gradient`.
 *
 * # Safety
 * `scores` and `gradient` must each hold `scores_len` values and `costs`
 * must hold `experts` values.
 */
enum L2dStatus l2d_surrogate_gradient(const struct L2dSpec *spec,
                                      size_t classes,
                                      size_t experts,
                                      const double *scores,
                                      size_t scores_len,
                                      size_t y,
                                      const double *costs,
                                      double *gradient);

/**
 * Deferral loss: 0/1 error when predicting, the expert's cost when deferring.
 *
 * # Safety
 * `scores` must hold `scores_len` values, `costs` must hold `experts`
 * values and `out` must be a valid pointer.
 */
enum L2dStatus l2d_deferral_loss(size_t classes,
                                 size_t experts,
                                 const double *scores,
                                 size_t scores_len,
                                 size_t y,
                                 const double *costs,
                                 double *out);

/**
 * Predicted augmented label: the first index of the largest score.
 *
 * # Safety
 * `scores` must hold `scores_len` values and `out` must be a valid pointer.
 */
enum L2dStatus l2d_predict_label(const double *scores, size_t scores_len, size_t *out);

/**
 * Parses an instance document (JSON with `n`, `n_e`, `points`, `experts`).
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a valid pointer. The
 * handle written to `out` must be released with [`l2d_instance_free`].
 */
enum L2dStatus l2d_instance_parse(const char *json, struct L2dInstance **out);

/**
 * Releases an instance handle. Null is ignored.
 *
 * # Safety
 * `instance` must come from [`l2d_instance_parse`] and not have been freed.
 */
void l2d_instance_free(struct L2dInstance *instance);

/**
 * Number of classes, experts and points of an instance.
 *
 * # Safety
 * `instance` must be a live handle; the out-pointers must be valid.
 */
enum L2dStatus l2d_instance_shape(const struct L2dInstance *instance,
                                  size_t *classes,
                                  size_t *experts,
                                  size_t *points);

/**
 * Unnormalized q-vector of point `point`: class conditionals followed by
 * one minus each expert's expected cost.
 *
 * # Safety
 * `out` must hold `out_len` values; `out_len` must equal `classes + experts`.
 */
enum L2dStatus l2d_instance_q_vector(const struct L2dInstance *instance,
                                     size_t point,
                                     double *out,
                                     size_t out_len);

/**
 * Evaluates both sides of the consistency bound over all measurable scorers.
 *
 * `scores` is row-major with one row of `classes + experts` values per
 * point, in document order.
 *
 * # Safety
 * `scores` must hold `scores_len` values and `out` must be a valid pointer.
 */
enum L2dStatus l2d_verify_bound(const struct L2dSpec *spec,
                                const struct L2dInstance *instance,
                                const double *scores,
                                size_t scores_len,
                                struct L2dBoundResult *out);

/**
 * Binary exponential gap at conditional `eta` for scores bounded by `lambda`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum L2dStatus l2d_binary_exp_gap(double eta, double lambda, struct L2dExpGap *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* L2D_H */
