#ifndef SAUSAGE_H
#define SAUSAGE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum {
  SAUSAGE_STATUS_OK = 0,
  SAUSAGE_STATUS_NULL_POINTER = 1,
  SAUSAGE_STATUS_INVALID_INPUT = 2,
  SAUSAGE_STATUS_NUMERICAL = 3,
  SAUSAGE_STATUS_CONFIG = 4,
  SAUSAGE_STATUS_IO = 5,
  SAUSAGE_STATUS_PANIC = 6,
} SausageStatus;

/**
 * Opaque sampled path.
 */
typedef struct SausagePath SausagePath;

/**
 * Opaque union of disjoint subintervals of `[0, 1]`.
 */
typedef struct SausageUnion SausageUnion;

typedef struct {
  double upper;
  double lower;
  double upper_measure;
  double lower_measure;
} SausageBounds;

typedef struct {
  double mean;
  /**
   * Named to avoid the `stderr` macro of `<stdio.h>`.
   */
  double std_error;
  uint64_t n;
} SausageEstimate;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * The message of the last failure on this thread; empty if none. Owned by
 * the library.
 */
const char *sausage_last_error(void);

/**
 * Library version, a static NUL-terminated string.
 */
const char *sausage_version(void);

/**
 * Probability that planar Brownian motion from radius `z` hits radius `a` before `b`.
 */
SausageStatus sausage_annulus_hit_prob(double z, double a, double b, double *result);

/**
 * Probability that one-dimensional Brownian motion from `y` leaves `[lo, hi]` through `lo`.
 */
SausageStatus sausage_exit_below_prob(double y, double lo, double hi, double *result);

/**
 * `P[|c + σZ| ≤ r]` for a standard planar Gaussian `Z` and `|c| = center_dist`.
 */
SausageStatus sausage_gaussian_disk_prob(double center_dist,
                                         double sigma,
                                         double radius,
                                         double *result);

SausageStatus sausage_theorem1_bounds(double epsilon,
                                      double theta,
                                      double c1,
                                      double c2,
                                      double c3,
                                      double c4,
                                      SausageBounds *result);

/**
 * Samples a Brownian path from the origin on stream `(seed, index)`.
 * Release with [`sausage_path_free`].
 */
SausageStatus sausage_path_sample(double dt,
                                  double duration,
                                  uint64_t seed,
                                  uint64_t index,
                                  SausagePath **path);

/**
 * Builds a path from `len` points with time step `dt`.
 *
 * # Safety
 * `xs` and `ys` must each point to `len` readable doubles.
 */
SausageStatus sausage_path_from_points(double dt,
                                       const double *xs,
                                       const double *ys,
                                       size_t len,
                                       SausagePath **path);

/**
 * Number of points of `path`, or 0 for a null handle.
 */
size_t sausage_path_len(const SausagePath *path);

double sausage_path_dt(const SausagePath *path);

/**
 * Copies up to `capacity` points into `xs`/`ys` and stores the count copied in `written`.
 *
 * # Safety
 * `xs` and `ys` must each be writable for `capacity` doubles.
 */
SausageStatus sausage_path_points(const SausagePath *path,
                                  double *xs,
                                  double *ys,
                                  size_t capacity,
                                  size_t *written);

/**
 * Releases a path handle; null is ignored.
 *
 * # Safety
 * `path` must be null or a handle from this library not yet freed.
 */
void sausage_path_free(SausagePath *path);

/**
 * The part of `[0,1]×{0}` within `epsilon` of the polyline `path`.
 * Release with [`sausage_union_free`].
 */
SausageStatus sausage_cover_intervals(const SausagePath *path,
                                      double epsilon,
                                      SausageUnion **result);

/**
 * Total length of the union, or NaN for a null handle.
 */
double sausage_union_measure(const SausageUnion *union_);

size_t sausage_union_count(const SausageUnion *union_);

/**
 * Endpoints of interval `k` (in increasing order).
 */
SausageStatus sausage_union_get(const SausageUnion *union_, size_t k, double *lo, double *hi);

/**
 * # Safety
 * `union` must be null or a handle from this library not yet freed.
 */
void sausage_union_free(SausageUnion *union_);

/**
 * Walk-on-spheres estimate of the probability that Brownian motion from
 * `(x, y)` hits the `epsilon`-ball at `(alpha, 0)` before leaving the strip `|y| < 1`.
 */
SausageStatus sausage_wos_estimate(double x,
                                   double y,
                                   double alpha,
                                   double epsilon,
                                   uint64_t n_walks,
                                   uint64_t seed,
                                   SausageEstimate *result);

/**
 * Direct Monte Carlo of `P[covers]` and `P[Ξ ≥ θ]`.
 */
SausageStatus sausage_naive_mc(double epsilon,
                               double theta,
                               uint64_t n,
                               double dt,
                               uint64_t seed,
                               SausageEstimate *p_cover,
                               SausageEstimate *p_theta);

/**
 * Runs the TOML configuration at `config_path` like `sausage run`.
 * `exit_code` receives the command-line exit code (0, 3 or 4).
 *
 * # Safety
 * `config_path` must be a NUL-terminated string.
 */
SausageStatus sausage_run_config(const char *config_path, int32_t *exit_code);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SAUSAGE_H */
