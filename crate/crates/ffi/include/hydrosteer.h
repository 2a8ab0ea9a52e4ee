#ifndef HYDROSTEER_H
#define HYDROSTEER_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum HsStatus {
  HS_STATUS_OK = 0,
  HS_STATUS_NULL_POINTER = 1,
  /**
   * A string argument is not valid UTF-8.
   */
  HS_STATUS_INVALID_STRING = 2,
  /**
   * Configuration or input validation failed.
   */
  HS_STATUS_CONFIG = 3,
  /**
   * A solver failed: non-contraction, collision, no convergence.
   */
  HS_STATUS_NUMERICAL = 4,
  HS_STATUS_IO = 5,
  /**
   * `verify` ran but a residual exceeded its threshold.
   */
  HS_STATUS_VERIFICATION_FAILED = 6,
  /**
   * An output buffer is too short; the needed length was written.
   */
  HS_STATUS_BUFFER_TOO_SMALL = 7,
  /**
   * Internal panic, caught at the boundary.
   */
  HS_STATUS_PANIC = 8,
} HsStatus;

typedef enum HsExperiment {
  HS_EXPERIMENT_POTENTIALS = 0,
  HS_EXPERIMENT_SIMULATE = 1,
  HS_EXPERIMENT_STEER = 2,
  HS_EXPERIMENT_VERIFY = 3,
  HS_EXPERIMENT_SCALE_STUDY = 4,
} HsExperiment;

/**
 * An assembled body: mesh, control patches, inertia and matrices.
 */
typedef struct HsBody HsBody;

/**
 * A potential-flow trajectory.
 */
typedef struct HsTrajectory HsTrajectory;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, empty after a success.
 * The pointer stays valid until the next call on the same thread.
 */
const char *hs_last_error(void);

/**
 * Builds a body from an experiment configuration given as JSON text.
 *
 * # Safety
 * `config_json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum HsStatus hs_body_from_config(const char *config_json, struct HsBody **out);

/**
 * # Safety
 * `body` must come from [`hs_body_from_config`] and not be used afterwards.
 */
void hs_body_free(struct HsBody *body);

/**
 * Number of control channels of the body; zero for a null handle.
 *
 * # Safety
 * `body` must be null or a live handle.
 */
size_t hs_body_controls(const struct HsBody *body);

/**
 * Writes the 6 x 6 generalized inertia, row-major, into `out`.
 *
 * # Safety
 * `body` must be a live handle and `out` must hold 36 doubles.
 */
enum HsStatus hs_body_inertia(const struct HsBody *body, double *out);

/**
 * Integrates the potential-flow model from `state0` (12 doubles: h, q, l, r)
 * under the spline control with `intervals` knot intervals on `[0, horizon]`.
 *
 * # Safety
 * `body` must be a live handle, `state0` must hold 12 doubles, `coefficients`
 * must hold `len` doubles and `out` must be a valid pointer.
 */
enum HsStatus hs_integrate_potential(const struct HsBody *body,
                                     const double *state0,
                                     const double *coefficients,
                                     size_t len,
                                     size_t intervals,
                                     double horizon,
                                     double dt,
                                     struct HsTrajectory **out);

/**
 * # Safety
 * `traj` must be null or a live handle.
 */
size_t hs_trajectory_samples(const struct HsTrajectory *traj);

/**
 * Writes sample `k` as 13 doubles: t, h, q, l, r.
 *
 * # Safety
 * `traj` must be a live handle and `out` must hold 13 doubles.
 */
enum HsStatus hs_trajectory_sample(const struct HsTrajectory *traj, size_t k, double *out);

/**
 * # Safety
 * `traj` must come from [`hs_integrate_potential`] and not be used afterwards.
 */
void hs_trajectory_free(struct HsTrajectory *traj);

/**
 * Steers the potential model from `initial` to `target` (12 doubles each).
 * On success the control coefficients go to `out` and their count to
 * `len`; when `capacity` is too small only `len` is written.
 *
 * # Safety
 * `body` must be a live handle, the states must hold 12 doubles, `out` must
 * hold `capacity` doubles, and `len` and `residual` must be valid pointers.
 */
enum HsStatus hs_potential_steering(const struct HsBody *body,
                                    const double *initial,
                                    const double *target,
                                    double horizon,
                                    size_t intervals,
                                    double *out,
                                    size_t capacity,
                                    size_t *len,
                                    double *residual);

/**
 * Runs one experiment as the command-line tool would. `cache_dir` may be
 * null.
 *
 * # Safety
 * `config_path` and `out_dir` must be NUL-terminated strings; `cache_dir`
 * must be null or NUL-terminated.
 */
enum HsStatus hs_run_experiment(enum HsExperiment kind,
                                const char *config_path,
                                const char *out_dir,
                                const char *cache_dir);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HYDROSTEER_H */
