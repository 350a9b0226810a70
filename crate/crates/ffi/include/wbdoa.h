#ifndef WBDOA_H
#define WBDOA_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum WbdoaStatus {
  WBDOA_STATUS_OK = 0,
  WBDOA_STATUS_NULL_POINTER = 1,
  WBDOA_STATUS_INVALID_ARGUMENT = 2,
  WBDOA_STATUS_CONFIG = 3,
  WBDOA_STATUS_SHAPE = 4,
  WBDOA_STATUS_DECOMPOSITION = 5,
  WBDOA_STATUS_IO = 6,
  WBDOA_STATUS_PANIC = 7,
} WbdoaStatus;

/**
 * Received data transformed for likelihood evaluation.
 */
typedef struct WbdoaData WbdoaData;

/**
 * Model dimensions and priors.
 */
typedef struct WbdoaModel WbdoaModel;

/**
 * Retained samples of one chain.
 */
typedef struct WbdoaTrace WbdoaTrace;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or an empty string. Valid
 * until the next failing call on the same thread.
 */
const char *wbdoa_last_error(void);

/**
 * Model with the underwater array defaults, `L = N + 1` and `k_max = M - 1`.
 *
 * # Safety
 * `out_model` must be a valid pointer to write a handle to.
 */
enum WbdoaStatus wbdoa_model_new(size_t num_sensors,
                                 size_t n_samples,
                                 struct WbdoaModel **out_model);

/**
 * Model from a TOML or JSON experiment configuration merged over the desk
 * profile (`paper != 0` selects the paper profile).
 *
 * # Safety
 * `text` must be a NUL-terminated string and `out_model` writable.
 */
enum WbdoaStatus wbdoa_model_from_config(const char *text,
                                         int32_t paper,
                                         struct WbdoaModel **out_model);

/**
 * # Safety
 * `model` must come from a `wbdoa_model_*` constructor.
 */
enum WbdoaStatus wbdoa_model_set_k_max(struct WbdoaModel *model, size_t k_max);

/**
 * Period `N′` of the model, or 0 for a null handle.
 *
 * # Safety
 * `model` must be null or a live handle.
 */
size_t wbdoa_model_period(const struct WbdoaModel *model);

/**
 * # Safety
 * `model` must be null or a handle not yet freed.
 */
void wbdoa_model_free(struct WbdoaModel *model);

/**
 * Prepare row-major `num_sensors × n_samples` data for `model`.
 *
 * # Safety
 * `y` must point to `num_sensors * n_samples` doubles.
 */
enum WbdoaStatus wbdoa_data_new(const struct WbdoaModel *model,
                                const double *y,
                                size_t num_sensors,
                                size_t n_samples,
                                struct WbdoaData **out_data);

/**
 * # Safety
 * `data` must be null or a handle not yet freed.
 */
void wbdoa_data_free(struct WbdoaData *data);

/**
 * Collapsed log-likelihood (constants dropped) of `k` sources; `-inf` is a
 * valid result for numerically degenerate states.
 *
 * # Safety
 * `phis` and `gammas` must each point to `k` doubles.
 */
enum WbdoaStatus wbdoa_loglik(const struct WbdoaModel *model,
                              const struct WbdoaData *data,
                              const double *phis,
                              const double *gammas,
                              size_t k,
                              double *out_value);

/**
 * Unnormalized log posterior of `k` sources.
 *
 * # Safety
 * As for [`wbdoa_loglik`].
 */
enum WbdoaStatus wbdoa_log_posterior(const struct WbdoaModel *model,
                                     const struct WbdoaData *data,
                                     const double *phis,
                                     const double *gammas,
                                     size_t k,
                                     double *out_value);

/**
 * Run one chain from the empty model.
 *
 * # Safety
 * Handles must be live and `out_trace` writable.
 */
enum WbdoaStatus wbdoa_run_chain(const struct WbdoaModel *model,
                                 const struct WbdoaData *data,
                                 size_t n_burnin,
                                 size_t n_samples,
                                 uint64_t seed,
                                 struct WbdoaTrace **out_trace);

/**
 * Number of retained samples, or 0 for a null handle.
 *
 * # Safety
 * `trace` must be null or a live handle.
 */
size_t wbdoa_trace_len(const struct WbdoaTrace *trace);

/**
 * Copy the model order of every retained sample into `orders`, which must
 * hold `capacity ≥ wbdoa_trace_len(trace)` entries.
 *
 * # Safety
 * `orders` must point to `capacity` writable `size_t`.
 */
enum WbdoaStatus wbdoa_trace_orders(const struct WbdoaTrace *trace,
                                    size_t *orders,
                                    size_t capacity);

/**
 * Posterior order pmf over `0..=k_max` (written to `pmf`, `k_max + 1`
 * entries, may be null) and the median detection.
 *
 * # Safety
 * `pmf` must be null or point to `k_max + 1` writable doubles.
 */
enum WbdoaStatus wbdoa_trace_detect(const struct WbdoaTrace *trace,
                                    size_t k_max,
                                    double *pmf,
                                    size_t *out_k_hat);

/**
 * Write the trace as JSON lines.
 *
 * # Safety
 * `path` must be a NUL-terminated UTF-8 path.
 */
enum WbdoaStatus wbdoa_trace_write_jsonl(const struct WbdoaTrace *trace, const char *path);

/**
 * # Safety
 * `trace` must be null or a handle not yet freed.
 */
void wbdoa_trace_free(struct WbdoaTrace *trace);

/**
 * Library version as a static NUL-terminated string.
 */
const char *wbdoa_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* WBDOA_H */
