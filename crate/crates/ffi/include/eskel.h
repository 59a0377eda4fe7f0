#ifndef ESKEL_H
#define ESKEL_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes; the non-zero values match the command-line exit codes.
 */
typedef enum EskelStatus {
  ESKEL_STATUS_OK = 0,
  ESKEL_STATUS_CHECK_FAILED = 1,
  ESKEL_STATUS_INVALID_ARGUMENT = 2,
  ESKEL_STATUS_POLYGON = 3,
  ESKEL_STATUS_EQUILIBRIUM = 4,
  ESKEL_STATUS_FIELD = 5,
  ESKEL_STATUS_SKELETON = 6,
  ESKEL_STATUS_MEASURE = 7,
  ESKEL_STATUS_VERIFICATION = 8,
  ESKEL_STATUS_IO = 9,
  /**
   * A Rust panic was caught at the boundary.
   */
  ESKEL_STATUS_INTERNAL = 10,
} EskelStatus;

/**
 * Opaque handle to a computed skeleton and its Riesz measure.
 */
typedef struct EskelSkeleton EskelSkeleton;

/**
 * Resolution parameters; `eskel_config_default` fills in the defaults.
 */
typedef struct EskelConfig {
  size_t panels_per_side;
  double grading;
  size_t grid_resolution;
  size_t samples_per_arc;
} EskelConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version, static storage.
 */
const char *eskel_version(void);

/**
 * Message of the last failed call on this thread, or NULL. Valid until the
 * next call into the library on the same thread.
 */
const char *eskel_last_error_message(void);

/**
 * # Safety
 * `out` must be NULL or point to writable memory for one `EskelConfig`.
 */
enum EskelStatus eskel_config_default(struct EskelConfig *out);

/**
 * Computes the skeleton of the polygon with `n_vertices` vertices stored
 * as `x0, y0, x1, y1, ...` in `xy`. `config` may be NULL for defaults. On
 * success `*out` receives a handle to release with `eskel_skeleton_free`.
 *
 * # Safety
 * `xy` must point to `2 * n_vertices` readable doubles; `config` must be
 * NULL or valid; `out` must be writable.
 */
enum EskelStatus eskel_compute(const double *xy,
                               size_t n_vertices,
                               const struct EskelConfig *config,
                               struct EskelSkeleton **out);

/**
 * Releases a handle; NULL is ignored.
 *
 * # Safety
 * `h` must be NULL or a handle from `eskel_compute` not yet freed.
 */
void eskel_skeleton_free(struct EskelSkeleton *h);

/**
 * Arc, junction and region counts; any output pointer may be NULL.
 *
 * # Safety
 * `h` must be a live handle; non-NULL outputs must be writable.
 */
enum EskelStatus eskel_skeleton_counts(const struct EskelSkeleton *h,
                                       size_t *arcs,
                                       size_t *junctions,
                                       size_t *regions);

/**
 * Total mass of the measure, Robin constant, and whether the complement of
 * the ridge set is connected; any output pointer may be NULL.
 *
 * # Safety
 * As for `eskel_skeleton_counts`.
 */
enum EskelStatus eskel_skeleton_summary(const struct EskelSkeleton *h,
                                        double *mass,
                                        double *robin_constant,
                                        bool *complement_connected);

/**
 * Copies arc `arc` into `xy` as `x0, y0, ...` and its face pair into
 * `pair[0..2]`. `*n_points` receives the point count; if `capacity` (in
 * points) is too small nothing is copied and `INVALID_ARGUMENT` is
 * returned, so a first call with `xy = NULL` sizes the buffer.
 *
 * # Safety
 * `h` must be live; `xy` must hold `capacity` points or be NULL; `pair`
 * must be NULL or hold two `size_t`; `n_points` must be writable.
 */
enum EskelStatus eskel_skeleton_arc(const struct EskelSkeleton *h,
                                    size_t arc,
                                    double *xy,
                                    size_t capacity,
                                    size_t *n_points,
                                    size_t *pair);

/**
 * Location of junction `k`.
 *
 * # Safety
 * `h` must be live; `x` and `y` must be writable.
 */
enum EskelStatus eskel_skeleton_junction(const struct EskelSkeleton *h,
                                         size_t k,
                                         double *x,
                                         double *y);

/**
 * The full JSON bundle, or NULL on failure. Release with
 * `eskel_string_free`.
 *
 * # Safety
 * `h` must be a live handle.
 */
char *eskel_skeleton_to_json(const struct EskelSkeleton *h);

/**
 * Runs every verification check. `perturb > 0` tests the perturbed
 * measure instead (negative control). Returns `OK` when all checks pass
 * and `CHECK_FAILED` otherwise; in both cases `*report_json`, if
 * `report_json` is not NULL, receives the report for `eskel_string_free`.
 *
 * # Safety
 * `h` must be live; `report_json` must be NULL or writable.
 */
enum EskelStatus eskel_verify(const struct EskelSkeleton *h, double perturb, char **report_json);

/**
 * Releases a string returned by this library; NULL is ignored.
 *
 * # Safety
 * `s` must be NULL or a string from this library not yet freed.
 */
void eskel_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ESKEL_H */
