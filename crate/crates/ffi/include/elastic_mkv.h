#ifndef ELASTIC_MKV_H
#define ELASTIC_MKV_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum EmkvStatus {
  EMKV_STATUS_OK = 0,
  EMKV_STATUS_NULL_POINTER = 1,
  EMKV_STATUS_INVALID_PARAMETER = 2,
  EMKV_STATUS_GRID_MISMATCH = 3,
  EMKV_STATUS_SCHEME_VIOLATION = 4,
  EMKV_STATUS_OUT_OF_RANGE = 5,
  EMKV_STATUS_BUFFER_TOO_SMALL = 6,
  EMKV_STATUS_PANIC = 7,
  EMKV_STATUS_OTHER = 8,
} EmkvStatus;

typedef enum EmkvLawKind {
  /**
   * `p0 = x0`.
   */
  EMKV_LAW_KIND_POINT_MASS = 0,
  /**
   * `p0 = a`, `p1 = b`.
   */
  EMKV_LAW_KIND_UNIFORM = 1,
  /**
   * `p0 = shape`, `p1 = scale`.
   */
  EMKV_LAW_KIND_GAMMA = 2,
  /**
   * `p0 = shift`, `p1 = rate`.
   */
  EMKV_LAW_KIND_SHIFTED_EXPONENTIAL = 3,
} EmkvLawKind;

/**
 * Opaque model parameters.
 */
typedef struct EmkvParams EmkvParams;

/**
 * Opaque particle-simulation result.
 */
typedef struct EmkvSimOutput EmkvSimOutput;

/**
 * Initial law as a tagged pair of parameters.
 */
typedef struct EmkvLaw {
  enum EmkvLawKind kind;
  double p0;
  double p1;
} EmkvLaw;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Last error message on this thread, or NULL. Valid until the next failing
 * call on the same thread.
 */
const char *emkv_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *emkv_version(void);

/**
 * Create validated parameters. `*out` must be released with
 * [`emkv_params_free`].
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum EmkvStatus emkv_params_new(double alpha,
                                double kappa,
                                struct EmkvLaw law,
                                double t_end,
                                size_t n_steps,
                                size_t n_particles,
                                struct EmkvParams **out);

/**
 * # Safety
 * `params` must be NULL or a handle from [`emkv_params_new`] not yet freed.
 */
void emkv_params_free(struct EmkvParams *params);

/**
 * Simulate the elastic particle system. `bridge_correction` enables the
 * intra-step Brownian-bridge kill check.
 *
 * # Safety
 * `params` must be a live handle and `out` writable.
 */
enum EmkvStatus emkv_simulate_elastic(const struct EmkvParams *params,
                                      uint64_t seed,
                                      bool bridge_correction,
                                      struct EmkvSimOutput **out);

/**
 * Simulate the absorbing system started at `X_{0-} + xi` from the same draws
 * as [`emkv_simulate_elastic`]; `kappa` must be positive.
 *
 * # Safety
 * `params` must be a live handle and `out` writable.
 */
enum EmkvStatus emkv_simulate_absorbing(const struct EmkvParams *params,
                                        uint64_t seed,
                                        bool bridge_correction,
                                        struct EmkvSimOutput **out);

/**
 * # Safety
 * `output` must be NULL or a live handle.
 */
void emkv_sim_free(struct EmkvSimOutput *output);

/**
 * Number of time nodes, or 0 for NULL.
 *
 * # Safety
 * `output` must be NULL or a live handle.
 */
size_t emkv_sim_n_nodes(const struct EmkvSimOutput *output);

/**
 * Copy the loss curve into `buf`, which must hold `emkv_sim_n_nodes` values.
 *
 * # Safety
 * `output` must be a live handle and `buf` valid for `len` writes.
 */
enum EmkvStatus emkv_sim_loss_curve(const struct EmkvSimOutput *output, double *buf, size_t len);

/**
 * Kill node of particle `index`, or -1 if it survives to the horizon.
 *
 * # Safety
 * `output` must be a live handle and `node` writable.
 */
enum EmkvStatus emkv_sim_kill_node(const struct EmkvSimOutput *output, size_t index, int64_t *node);

/**
 * Largest single-node jump of the loss, or NaN for NULL.
 *
 * # Safety
 * `output` must be NULL or a live handle.
 */
double emkv_sim_largest_jump(const struct EmkvSimOutput *output);

/**
 * `Gamma_kappa[0]_t` by quadrature.
 *
 * # Safety
 * `out` must be writable.
 */
enum EmkvStatus emkv_gamma_zero_analytic(double t, struct EmkvLaw law, double kappa, double *out);

/**
 * Whether `alpha > 2 (mean + 1/kappa)`, which forces a jump of the loss.
 */
bool emkv_blowup_guaranteed(double alpha, struct EmkvLaw law, double kappa);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ELASTIC_MKV_H */
