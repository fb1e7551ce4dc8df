#ifndef SURFSPREAD_H
#define SURFSPREAD_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes.
 */
typedef enum SsStatus {
  SS_STATUS_OK = 0,
  SS_STATUS_NULL_POINTER = 1,
  SS_STATUS_INVALID_ARGUMENT = 2,
  SS_STATUS_CONFIG = 3,
  SS_STATUS_SOLVER = 4,
  SS_STATUS_IO = 5,
  SS_STATUS_PANIC = 6,
} SsStatus;

/**
 * Opaque simulation handle.
 */
typedef struct SsSimulation SsSimulation;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Creates a simulation from TOML configuration text.
 *
 * # Safety
 * `toml` must be a NUL-terminated string; `out` must be valid for writes.
 */
enum SsStatus ss_simulation_from_toml(const char *toml, struct SsSimulation **out);

/**
 * Creates a simulation from a built-in scenario; `desk != 0` selects the desk profile.
 *
 * # Safety
 * `name` must be a NUL-terminated string; `out` must be valid for writes.
 */
enum SsStatus ss_simulation_from_scenario(const char *name,
                                          int32_t desk,
                                          struct SsSimulation **out);

/**
 * Releases a handle; null is ignored.
 *
 * # Safety
 * `sim` must come from a constructor above and not be used afterwards.
 */
void ss_simulation_free(struct SsSimulation *sim);

/**
 * Integrates up to `t_stop`, writing the number of accepted steps to `steps` when non-null.
 *
 * On a solver failure the handle keeps the last accepted state.
 *
 * # Safety
 * `sim` must be a live handle; `steps` must be null or valid for writes.
 */
enum SsStatus ss_simulation_advance(struct SsSimulation *sim, double t_stop, size_t *steps);

/**
 * Current simulation time.
 *
 * # Safety
 * `sim` must be a live handle; `t` must be valid for writes.
 */
enum SsStatus ss_simulation_time(const struct SsSimulation *sim, double *t);

/**
 * Number of unknowns (`2 *` basis functions).
 *
 * # Safety
 * `sim` must be a live handle; `n` must be valid for writes.
 */
enum SsStatus ss_simulation_n_dofs(const struct SsSimulation *sim, size_t *n);

/**
 * Copies the control variables `[c | h]` into `buf` of length `len` (at least the dof count).
 *
 * # Safety
 * `sim` must be a live handle; `buf` must be valid for `len` writes.
 */
enum SsStatus ss_simulation_values(const struct SsSimulation *sim, double *buf, size_t len);

/**
 * Surfactant concentration and film height at a physical point.
 *
 * # Safety
 * `sim` must be a live handle; `c` and `h` must be valid for writes.
 */
enum SsStatus ss_simulation_sample(const struct SsSimulation *sim,
                                   double x,
                                   double y,
                                   double *c,
                                   double *h);

/**
 * Integrals of `c` and of `h - f` over the domain.
 *
 * # Safety
 * `sim` must be a live handle; outputs must be valid for writes.
 */
enum SsStatus ss_simulation_mass(const struct SsSimulation *sim, double *surfactant, double *fluid);

/**
 * Copies the calling thread's last error message (NUL-terminated, truncated to `len`).
 * Returns the full message length plus one, so a zero `len` queries the needed size.
 *
 * # Safety
 * `buf` must be null or valid for `len` writes.
 */
size_t ss_last_error_message(char *buf, size_t len);

/**
 * Library version, a static NUL-terminated string.
 */
const char *ss_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SURFSPREAD_H */
