#ifndef SQG_SPHERE_H
#define SQG_SPHERE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SqgStatus {
  SQG_STATUS_OK = 0,
  SQG_STATUS_NULL_POINTER = 1,
  SQG_STATUS_INVALID_ARGUMENT = 2,
  SQG_STATUS_NON_ZERO_MEAN = 3,
  SQG_STATUS_NON_FINITE = 4,
  SQG_STATUS_NON_CONVERGENCE = 5,
  SQG_STATUS_BUFFER_TOO_SMALL = 6,
  SQG_STATUS_IO = 7,
  SQG_STATUS_PANIC = 8,
} SqgStatus;

/**
 * Initial data selector for [`SqgSimConfig`].
 */
typedef enum SqgInitialCondition {
  SQG_INITIAL_CONDITION_RANDOM = 0,
  SQG_INITIAL_CONDITION_ZONAL_JET = 1,
  SQG_INITIAL_CONDITION_ROTATED_BUMP = 2,
} SqgInitialCondition;

/**
 * Opaque simulation handle.
 */
typedef struct SqgSim SqgSim;

/**
 * Plain-data simulation parameters. A non-positive `dt` selects the default step.
 */
typedef struct SqgSimConfig {
  uint32_t lmax;
  double alpha;
  double kappa;
  double dt;
  double t_end;
  uint64_t seed;
  /**
   * One of the [`SqgInitialCondition`] values.
   */
  uint32_t initial_condition;
  bool pure_diffusion;
} SqgSimConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread, or null. The pointer
 * stays valid until the next call into this library on the same thread.
 */
const char *sqg_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *sqg_version(void);

/**
 * Defaults: `alpha = kappa = 1`, default step, random data with seed 0.
 */
struct SqgSimConfig sqg_config_default(uint32_t lmax, double t_end);

/**
 * Create a simulation; on success `*out` owns a handle.
 *
 * # Safety
 * `config` must point to a valid [`SqgSimConfig`]; `out` must be writable.
 */
enum SqgStatus sqg_sim_new(const struct SqgSimConfig *config, struct SqgSim **out);

/**
 * Release a handle. Null is ignored.
 *
 * # Safety
 * `sim` must come from [`sqg_sim_new`] and not have been freed.
 */
void sqg_sim_free(struct SqgSim *sim);

/**
 * Advance at most `n_steps` steps, stopping at the configured end time.
 *
 * # Safety
 * `sim` must be a live handle.
 */
enum SqgStatus sqg_sim_step(struct SqgSim *sim, uint32_t n_steps);

/**
 * Whether the simulation reached its end time.
 *
 * # Safety
 * `sim` must be a live handle or null.
 */
bool sqg_sim_is_finished(const struct SqgSim *sim);

/**
 * # Safety
 * `sim` must be a live handle; `out` must be writable.
 */
enum SqgStatus sqg_sim_time(const struct SqgSim *sim, double *out);

/**
 * Number of coefficients, `(L+1)²`; zero for a null handle.
 *
 * # Safety
 * `sim` must be a live handle or null.
 */
size_t sqg_sim_coeff_count(const struct SqgSim *sim);

/**
 * Copy the coefficients, index `l² + l + m`, into `buf`.
 *
 * # Safety
 * `sim` must be a live handle; `buf` must have room for `len` doubles.
 */
enum SqgStatus sqg_sim_copy_coeffs(const struct SqgSim *sim, double *buf, size_t len);

/**
 * Current `‖θ‖²` and the accumulated `∫‖Λ^{α/2}θ‖²`.
 *
 * # Safety
 * `sim` must be a live handle; both outputs must be writable.
 */
enum SqgStatus sqg_sim_energy(const struct SqgSim *sim, double *l2_energy, double *dissipation);

/**
 * Write the current state as a text snapshot file.
 *
 * # Safety
 * `sim` must be a live handle; `path` a NUL-terminated UTF-8 string.
 */
enum SqgStatus sqg_sim_snapshot_write(const struct SqgSim *sim, const char *path);

/**
 * Real orthonormal harmonic `Y_l^m` at `(colat, lon)`.
 *
 * # Safety
 * `out` must be writable.
 */
enum SqgStatus sqg_evaluate_harmonic(int64_t l, int64_t m, double colat, double lon, double *out);

/**
 * The flat reference constant `δ` at the default resolution.
 *
 * # Safety
 * `out` must be writable.
 */
enum SqgStatus sqg_flat_delta(double *out);

/**
 * Sup of the sphere `b₁` barrier at scale `h` over `B(h/2) × I(h)`, on an
 * `n × n` grid.
 *
 * # Safety
 * `out` must be writable.
 */
enum SqgStatus sqg_b1_sup(double h, uint32_t n, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SQG_SPHERE_H */
