#ifndef EPRSIM_H
#define EPRSIM_H

/* Generated by cbindgen; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Circuit selector.
 */
typedef enum EprsimCircuit {
  EPRSIM_CIRCUIT_CHI = 0,
  EPRSIM_CIRCUIT_CLUSTER = 1,
} EprsimCircuit;

/**
 * Status codes returned by every fallible function.
 */
typedef enum EprsimStatus {
  EPRSIM_STATUS_OK = 0,
  EPRSIM_STATUS_NULL_POINTER = 1,
  EPRSIM_STATUS_INVALID_ARGUMENT = 2,
  EPRSIM_STATUS_RUNTIME_ERROR = 3,
} EprsimStatus;

/**
 * Opaque experiment-statistics handle.
 */
typedef struct EprsimStats EprsimStats;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread, or null. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *eprsim_last_error_message(void);

/**
 * Run a Monte-Carlo experiment. On success writes a handle to `out`; free
 * it with `eprsim_stats_free`.
 *
 * # Safety
 * `out` must be null or a valid pointer to a handle slot.
 */
enum EprsimStatus eprsim_run(enum EprsimCircuit circuit,
                             double alpha,
                             double theta,
                             uint64_t shots,
                             uint64_t seed,
                             bool feed_forward,
                             struct EprsimStats **out);

/**
 * Classification count for one entangler (0..2) and parity (0 = even,
 * 1 = odd).
 *
 * # Safety
 * `stats` must be null or a live handle from `eprsim_run`; `out` must be
 * null or valid for writes.
 */
enum EprsimStatus eprsim_stats_parity_count(const struct EprsimStats *stats,
                                            uint32_t entangler,
                                            uint32_t parity,
                                            uint64_t *out);

/**
 * Serialize the statistics to a JSON string (same schema as the CLI's
 * `run --format json`). Free the string with `eprsim_string_free`.
 *
 * # Safety
 * `stats` must be null or a live handle from `eprsim_run`; `out` must be
 * null or valid for writes.
 */
enum EprsimStatus eprsim_stats_to_json(const struct EprsimStats *stats, char **out);

/**
 * Per-branch misclassification probability `Q(x_d/2)`.
 */
double eprsim_error_probability(double alpha, double theta);

/**
 * Certify the phase-label probe model against the truncated-Fock oracle.
 * Writes the maximum density deviation to `out`.
 *
 * # Safety
 * `out` must be null or valid for writes.
 */
enum EprsimStatus eprsim_validate_phase_label_model(double alpha,
                                                    double theta,
                                                    uintptr_t n_trunc,
                                                    double *out);

/**
 * Free a statistics handle.
 *
 * # Safety
 * `stats` must come from `eprsim_run` and not already be freed.
 */
void eprsim_stats_free(struct EprsimStats *stats);

/**
 * Free a string returned by `eprsim_stats_to_json`.
 *
 * # Safety
 * `s` must come from this library and not already be freed.
 */
void eprsim_string_free(char *s);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* EPRSIM_H */
