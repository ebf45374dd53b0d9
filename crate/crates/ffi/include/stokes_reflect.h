#ifndef STOKES_REFLECT_H
#define STOKES_REFLECT_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes. Values 1..=4 agree with the command-line exit codes.
 */
typedef enum SrStatus {
  SR_STATUS_OK = 0,
  SR_STATUS_FAILURE = 1,
  /**
   * Separation/containment violated or RSA saturation.
   */
  SR_STATUS_GEOMETRY = 2,
  /**
   * `a³/d³` above the gate.
   */
  SR_STATUS_GATE = 3,
  SR_STATUS_INVALID_PARAMETER = 4,
  SR_STATUS_NULL_POINTER = 5,
  SR_STATUS_BUFFER_TOO_SMALL = 6,
  SR_STATUS_PANIC = 7,
} SrStatus;

/**
 * Opaque particle cloud.
 */
typedef struct SrCloud SrCloud;

typedef struct SrCloudStats {
  size_t n;
  /**
   * Minimum separation; `INFINITY` for a single particle.
   */
  double d;
  double phi_global;
  double phi_local;
} SrCloudStats;

typedef struct SrReflectOptions {
  double tol;
  size_t max_iter;
  /**
   * Maximum `a³/d³`; zero or negative disables the check.
   */
  double gate;
  /**
   * Nonzero selects the bit-reproducible summation order.
   */
  int32_t deterministic;
  /**
   * Keep exactly this many levels; zero iterates to `tol`.
   */
  size_t fixed_levels;
} SrReflectOptions;

typedef struct SrReflectInfo {
  size_t iterations;
  int32_t converged;
  double residual;
} SrReflectInfo;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *sr_last_error(void);

/**
 * Cubic lattice of `n_per_axis³` spheres of radius `a` in the box
 * `[lo, hi]`.
 *
 * # Safety
 * `lo` and `hi` point to three doubles; `out` is writable.
 */
enum SrStatus sr_cloud_lattice(const double *lo,
                               const double *hi,
                               size_t n_per_axis,
                               double a,
                               struct SrCloud **out);

/**
 * Random sequential addition of `n` spheres with center spacing at least
 * `dmin`. `max_attempts == 0` selects the default budget.
 *
 * # Safety
 * `lo` and `hi` point to three doubles; `out` is writable.
 */
enum SrStatus sr_cloud_rsa(const double *lo,
                           const double *hi,
                           size_t n,
                           double a,
                           double dmin,
                           uint64_t seed,
                           size_t max_attempts,
                           struct SrCloud **out);

/**
 * Spheres at the given centers (`3n` doubles, xyz interleaved). The cloud is
 * validated before it is returned.
 *
 * # Safety
 * `centers` points to `3n` doubles; `lo`, `hi` to three each; `out` is
 * writable.
 */
enum SrStatus sr_cloud_from_centers(const double *centers,
                                    size_t n,
                                    double a,
                                    const double *lo,
                                    const double *hi,
                                    struct SrCloud **out);

/**
 * Releases a cloud. Null is ignored.
 *
 * # Safety
 * `cloud` was returned by this library and is not used afterwards.
 */
void sr_cloud_free(struct SrCloud *cloud);

/**
 * Number of particles, or zero for a null handle.
 *
 * # Safety
 * `cloud` is null or a live handle.
 */
size_t sr_cloud_len(const struct SrCloud *cloud);

/**
 * # Safety
 * `cloud` is a live handle; `out` is writable.
 */
enum SrStatus sr_cloud_stats(const struct SrCloud *cloud, struct SrCloudStats *out);

struct SrReflectOptions sr_reflect_options_default(void);

/**
 * Sums the reflection series for the background strain `strain` (five basis
 * coordinates). Writes `5·N` doubles of `Â` to `a_hat`, particle-major.
 * `opts` and `info` may be null.
 *
 * # Safety
 * `strain` points to five doubles, `a_hat` to `a_hat_len` writable doubles.
 */
enum SrStatus sr_run_reflections(const struct SrCloud *cloud,
                                 const double *strain,
                                 const struct SrReflectOptions *opts,
                                 double *a_hat,
                                 size_t a_hat_len,
                                 struct SrReflectInfo *info);

/**
 * The 5×5 mobility of a sphere of radius `a`, row-major.
 *
 * # Safety
 * `out` points to 25 writable doubles.
 */
enum SrStatus sr_sphere_mobility(double a, double *out);

/**
 * Einstein coefficient of the cloud; 5/2 for spheres at first order.
 * `converged == 0` uses the first-order strains, otherwise the converged
 * reflection totals.
 *
 * # Safety
 * `strain` points to five doubles; `out` is writable.
 */
enum SrStatus sr_einstein_coefficient(const struct SrCloud *cloud,
                                      const double *strain,
                                      int32_t converged,
                                      double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* STOKES_REFLECT_H */
