#ifndef RESETLAB_H
#define RESETLAB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum RlStatus {
  RL_STATUS_OK = 0,
  RL_STATUS_NULL_POINTER = 1,
  RL_STATUS_INVALID_ARGUMENT = 2,
  RL_STATUS_CONFIG = 3,
  RL_STATUS_NUMERICAL = 4,
  RL_STATUS_BUFFER_TOO_SMALL = 5,
  RL_STATUS_PANIC = 6,
} RlStatus;

/**
 * A reset channel on the system register.
 */
typedef struct RlChannel RlChannel;

/**
 * Eigen-decomposition of a channel's superoperator.
 */
typedef struct RlSpectrum RlSpectrum;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread (empty if none). The
 * pointer stays valid until the next failing call on the same thread.
 */
const char *rl_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *rl_version(void);

/**
 * Builds the channel described by an experiment config document (JSON).
 *
 * # Safety
 * `config_json` must be a valid NUL-terminated string and `out` a valid
 * pointer. On success `*out` owns a channel to be released with
 * [`rl_channel_free`].
 */
enum RlStatus rl_channel_from_json(const char *config_json, struct RlChannel **out);

/**
 * Builds the base channel of a named built-in preset.
 *
 * # Safety
 * As for [`rl_channel_from_json`].
 */
enum RlStatus rl_channel_from_preset(const char *name, struct RlChannel **out);

/**
 * Releases a channel. Null is ignored.
 *
 * # Safety
 * `channel` must come from this library and not be used afterwards.
 */
void rl_channel_free(struct RlChannel *channel);

/**
 * System Hilbert-space dimension `d`, or 0 for a null handle.
 *
 * # Safety
 * `channel` must be null or a live handle.
 */
size_t rl_channel_dim(const struct RlChannel *channel);

/**
 * Writes `‖sum K† K - I‖_F` to `out`.
 *
 * # Safety
 * `channel` must be a live handle and `out` a valid pointer.
 */
enum RlStatus rl_channel_completeness(const struct RlChannel *channel, double *out);

/**
 * Applies the channel to a `d x d` operator (`2 d^2` doubles each way).
 *
 * # Safety
 * `rho_in` must hold `2 d^2` doubles and `rho_out` at least `out_len`.
 */
enum RlStatus rl_channel_apply(const struct RlChannel *channel,
                               const double *rho_in,
                               double *rho_out,
                               size_t out_len);

/**
 * Writes the row-stacked superoperator matrix (`2 d^4` doubles).
 *
 * # Safety
 * `out` must hold at least `out_len` doubles.
 */
enum RlStatus rl_channel_superoperator(const struct RlChannel *channel,
                                       double *out,
                                       size_t out_len);

/**
 * Mutual information `S` after `0..=n_max` rounds from the GHZ state
 * (`n_max + 1` doubles).
 *
 * # Safety
 * `out` must hold at least `out_len` doubles.
 */
enum RlStatus rl_qmi_trajectory(const struct RlChannel *channel,
                                size_t n_max,
                                double *out,
                                size_t out_len);

/**
 * Full spectrum of the channel's superoperator.
 *
 * # Safety
 * `channel` must be a live handle and `out` a valid pointer; release the
 * result with [`rl_spectrum_free`].
 */
enum RlStatus rl_spectrum_new(const struct RlChannel *channel, struct RlSpectrum **out);

/**
 * Releases a spectrum. Null is ignored.
 *
 * # Safety
 * `spectrum` must come from this library and not be used afterwards.
 */
void rl_spectrum_free(struct RlSpectrum *spectrum);

/**
 * Number of modes, or 0 for a null handle.
 *
 * # Safety
 * `spectrum` must be null or a live handle.
 */
size_t rl_spectrum_len(const struct RlSpectrum *spectrum);

/**
 * Eigenvalues sorted by decreasing magnitude (`2 len` doubles).
 *
 * # Safety
 * `out` must hold at least `out_len` doubles.
 */
enum RlStatus rl_spectrum_eigenvalues(const struct RlSpectrum *spectrum,
                                      double *out,
                                      size_t out_len);

/**
 * Largest eigen-residual and eigenvalue condition number of the modes.
 *
 * # Safety
 * `spectrum` must be a live handle; the outputs must be valid pointers.
 */
enum RlStatus rl_spectrum_diagnostics(const struct RlSpectrum *spectrum,
                                      double *max_residual,
                                      double *max_defectivity);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RESETLAB_H */
