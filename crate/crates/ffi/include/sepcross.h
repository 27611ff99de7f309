#ifndef SEPCROSS_H
#define SEPCROSS_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SepcrossStatus {
  SEPCROSS_STATUS_OK = 0,
  SEPCROSS_STATUS_NULL_POINTER = 1,
  SEPCROSS_STATUS_INVALID_ARGUMENT = 2,
  SEPCROSS_STATUS_NO_CONVERGENCE = 3,
  SEPCROSS_STATUS_NUMERICAL = 4,
  SEPCROSS_STATUS_OUT_OF_RANGE = 5,
  SEPCROSS_STATUS_PANIC = 6,
} SepcrossStatus;

/**
 * Stable fixed points of the return map, sorted by action.
 */
typedef struct SepcrossFixedPoints SepcrossFixedPoints;

/**
 * The double-well family with its four parameters.
 */
typedef struct SepcrossModel SepcrossModel;

/**
 * Crossing coefficients and phase integrals tabulated over an action interval.
 */
typedef struct SepcrossTable SepcrossTable;

/**
 * Saddle of the frozen fast system at one slow point.
 */
typedef struct SepcrossSaddle {
  double q_c;
  double h_s;
  /**
   * `1/√g` with `g = −U''(q_c)`.
   */
  double a;
} SepcrossSaddle;

typedef struct SepcrossFixedPoint {
  uint8_t branch;
  double i;
  double eta;
  double eta1;
  double q;
} SepcrossFixedPoint;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer
 * stays valid until the next call into the library on this thread.
 */
const char *sepcross_last_error(void);

/**
 * # Safety
 * `out` must be valid for writes.
 */
enum SepcrossStatus sepcross_model_new(double beta,
                                       double omega_x,
                                       double omega_y,
                                       double k0,
                                       struct SepcrossModel **out);

/**
 * # Safety
 * `model` must be null or a handle from `sepcross_model_new` not yet freed.
 */
void sepcross_model_free(struct SepcrossModel *model);

/**
 * Saddle data of the frozen system at `(y, x)`.
 *
 * # Safety
 * `model` must be a live handle and `out` valid for writes.
 */
enum SepcrossStatus sepcross_saddle(const struct SepcrossModel *model,
                                    double y,
                                    double x,
                                    struct SepcrossSaddle *out);

/**
 * Area inside the separatrix loop of branch `nu` (1 or 2) at `(y, x)`.
 *
 * # Safety
 * `model` must be a live handle and `out` valid for writes.
 */
enum SepcrossStatus sepcross_loop_area(const struct SepcrossModel *model,
                                       double y,
                                       double x,
                                       uint8_t nu,
                                       double *out);

/**
 * Tabulates `n` nodes over `[lo, hi]` for crossings into branch `nu` on
 * the slow level `h0`. `improved` selects the first-order corrected phases.
 *
 * # Safety
 * `model` must be a live handle and `out` valid for writes.
 */
enum SepcrossStatus sepcross_table_build(const struct SepcrossModel *model,
                                         uint8_t nu,
                                         double h0,
                                         double lo,
                                         double hi,
                                         size_t n,
                                         bool improved,
                                         struct SepcrossTable **out);

/**
 * # Safety
 * `table` must be null or a handle from `sepcross_table_build` not yet freed.
 */
void sepcross_table_free(struct SepcrossTable *table);

/**
 * Predicted number of stable fixed points in `[lo, hi]` at `eps`, from
 * `n` samples of the density.
 *
 * # Safety
 * `table` must be a live handle and `out` valid for writes.
 */
enum SepcrossStatus sepcross_predicted_count(const struct SepcrossTable *table,
                                             double eps,
                                             double lo,
                                             double hi,
                                             size_t n,
                                             double c1,
                                             double *out);

/**
 * Stable fixed points with action in `[lo, hi]` at `eps`.
 *
 * # Safety
 * `table` must be a live handle and `out` valid for writes.
 */
enum SepcrossStatus sepcross_fixed_points_find(const struct SepcrossTable *table,
                                               double eps,
                                               double lo,
                                               double hi,
                                               double c1,
                                               struct SepcrossFixedPoints **out);

/**
 * # Safety
 * `fps` must be a live handle.
 */
size_t sepcross_fixed_points_len(const struct SepcrossFixedPoints *fps);

/**
 * # Safety
 * `fps` must be a live handle and `out` valid for writes.
 */
enum SepcrossStatus sepcross_fixed_points_get(const struct SepcrossFixedPoints *fps,
                                              size_t index,
                                              struct SepcrossFixedPoint *out);

/**
 * # Safety
 * `fps` must be null or a handle from `sepcross_fixed_points_find` not yet freed.
 */
void sepcross_fixed_points_free(struct SepcrossFixedPoints *fps);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SEPCROSS_H */
