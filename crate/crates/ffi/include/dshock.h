#ifndef DSHOCK_H
#define DSHOCK_H

#pragma once

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every call.
 */
typedef enum DshockStatus {
  DSHOCK_STATUS_OK = 0,
  DSHOCK_STATUS_NULL_POINTER = 1,
  DSHOCK_STATUS_INVALID_ARGUMENT = 2,
  DSHOCK_STATUS_SCHEMA = 3,
  DSHOCK_STATUS_NO_DELTA_SHOCK = 4,
  DSHOCK_STATUS_NUMERICAL = 5,
  DSHOCK_STATUS_IO = 6,
  DSHOCK_STATUS_PANIC = 7,
} DshockStatus;

/**
 * Opaque solved 1-D Riemann problem.
 */
typedef struct DshockRiemann DshockRiemann;

/**
 * Opaque validated scenario.
 */
typedef struct DshockScenario DshockScenario;

/**
 * Front state of a 1-D solution at time `t`.
 */
typedef struct DshockFrontSample {
  double t;
  double phi;
  double u_delta;
  double e;
  double mass_deficit;
  double momentum_deficit;
} DshockFrontSample;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer stays
 * valid until the next call into the library on this thread.
 */
const char *dshock_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *dshock_version(void);

/**
 * Solves the 1-D Riemann problem with the discontinuity at the origin.
 * `c0 <= 0` selects the standard flux, `c0 > 0` the relativistic one. With
 * `e0 > 0` the front starts as a point mass moving at `u_delta0`.
 */
enum DshockStatus dshock_riemann_solve(double rho_l,
                                       double u_l,
                                       double rho_r,
                                       double u_r,
                                       double c0,
                                       double e0,
                                       double u_delta0,
                                       struct DshockRiemann **out);

/**
 * Evaluates the front of a solved problem at `t >= 0`.
 *
 * # Safety
 * `h` must be null or a live handle from [`dshock_riemann_solve`].
 */
enum DshockStatus dshock_riemann_eval(const struct DshockRiemann *h,
                                      double t,
                                      struct DshockFrontSample *out);

/**
 * True when the solved front moves at constant speed.
 *
 * # Safety
 * `h` must be null or a live handle from [`dshock_riemann_solve`].
 */
enum DshockStatus dshock_riemann_is_constant_speed(const struct DshockRiemann *h, bool *out);

/**
 * Energy dissipation rate per unit front length at time `t`.
 *
 * # Safety
 * `h` must be null or a live handle from [`dshock_riemann_solve`].
 */
enum DshockStatus dshock_riemann_dissipation(const struct DshockRiemann *h, double t, double *out);

/**
 * Releases a handle from [`dshock_riemann_solve`].
 *
 * # Safety
 * `h` must be null or a live handle that is not used afterwards.
 */
void dshock_riemann_free(struct DshockRiemann *h);

/**
 * Whether a classical shock can connect the two states.
 */
enum DshockStatus dshock_classical_shock_feasible(double rho_l,
                                                  double u_l,
                                                  double rho_r,
                                                  double u_r,
                                                  bool *out);

/**
 * Parses and validates a scenario from JSON text.
 *
 * # Safety
 * `json` must be null or a NUL-terminated string.
 */
enum DshockStatus dshock_scenario_new(const char *json, struct DshockScenario **out);

/**
 * Runs a scenario, writing its artifacts into `out_dir`. `exit_code`
 * receives 0 when every enforced check passed and 4 otherwise; failures
 * before any check runs are reported through the status.
 *
 * # Safety
 * `h` must be null or a live handle; `out_dir` null or NUL-terminated.
 */
enum DshockStatus dshock_scenario_run(const struct DshockScenario *h,
                                      const char *out_dir,
                                      bool strict,
                                      int32_t *exit_code);

/**
 * Releases a handle from [`dshock_scenario_new`].
 *
 * # Safety
 * `h` must be null or a live handle that is not used afterwards.
 */
void dshock_scenario_free(struct DshockScenario *h);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DSHOCK_H */
