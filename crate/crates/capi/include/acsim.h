#ifndef ACSIM_H
#define ACSIM_H

/* C ABI for the acsim consensus simulator.
 *
 * Every function returns an AcsimStatus. Out-parameters are written only on
 * ACSIM_STATUS_OK. Handles must be released with the matching *_free
 * function; strings returned through char ** must be released with
 * acsim_string_free. On failure, acsim_last_error_message() returns a
 * thread-local description valid until the next failing call on that thread.
 */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Delay model selector for the asynchronous entry points.
 */
typedef enum AcsimDelayKind {
  ACSIM_DELAY_KIND_NONE = 0,
  ACSIM_DELAY_KIND_UNIFORM = 1,
  ACSIM_DELAY_KIND_FIXED = 2,
  ACSIM_DELAY_KIND_SHARED = 3,
} AcsimDelayKind;

/**
 * Status codes returned by every API function.
 */
typedef enum AcsimStatus {
  ACSIM_STATUS_OK = 0,
  ACSIM_STATUS_NULL_POINTER = 1,
  ACSIM_STATUS_INVALID_TOPOLOGY = 2,
  ACSIM_STATUS_INVALID_ARGUMENT = 3,
  ACSIM_STATUS_NUMERIC_FAILURE = 4,
  ACSIM_STATUS_IO = 5,
  ACSIM_STATUS_UTF8 = 6,
  ACSIM_STATUS_PANIC = 7,
} AcsimStatus;

/**
 * Opaque handle: a validated topology plus its row-normalized matrix.
 */
typedef struct AcsimTopology AcsimTopology;

/**
 * Opaque handle: a completed simulation trajectory.
 */
typedef struct AcsimTrajectory AcsimTrajectory;

#ifdef __cplusplus
extern "C" {
#endif  // __cplusplus

/**
 * Message for the most recent failure on this thread, or NULL. The pointer
 * is valid until the next failing call on the same thread.
 */
const char *acsim_last_error_message(void);

/**
 * Parses a topology from text (whitespace/comma separated rows, `#`
 * comments, or the JSON form `{"n": .., "weights": [[..]]}`).
 */
AcsimStatus acsim_topology_parse(const char *text, AcsimTopology **out);

/**
 * Loads a topology from a file in either supported format.
 */
AcsimStatus acsim_topology_load(const char *path, AcsimTopology **out);

void acsim_topology_free(AcsimTopology *handle);

AcsimStatus acsim_topology_agent_count(const AcsimTopology *handle, size_t *out);

/**
 * Structural and spectral analysis serialized as JSON. `x0` may be NULL
 * (with `x0_len` 0) to skip value prediction.
 */
AcsimStatus acsim_analyze_json(const AcsimTopology *handle,
                               const double *x0,
                               size_t x0_len,
                               char **out_json);

void acsim_string_free(char *s);

/**
 * Synchronous run `x(k+1) = F x(k)`.
 */
AcsimStatus acsim_run_sync(const AcsimTopology *handle,
                           const double *x0,
                           size_t x0_len,
                           size_t steps,
                           double ctol,
                           AcsimTrajectory **out);

/**
 * Asynchronous run with a seeded bounded-delay model.
 */
AcsimStatus acsim_run_async(const AcsimTopology *handle,
                            const double *x0,
                            size_t x0_len,
                            AcsimDelayKind kind,
                            uint32_t tau_d,
                            uint64_t seed,
                            size_t steps,
                            double ctol,
                            AcsimTrajectory **out);

/**
 * Number of stored states (steps + 1).
 */
AcsimStatus acsim_trajectory_len(const AcsimTrajectory *handle, size_t *out);

/**
 * Copies the state at `step` into `buf` (`buf_len` must equal the agent
 * count).
 */
AcsimStatus acsim_trajectory_state(const AcsimTrajectory *handle,
                                   size_t step,
                                   double *buf,
                                   size_t buf_len);

/**
 * 2-norm of the state at `step`.
 */
AcsimStatus acsim_trajectory_norm(const AcsimTrajectory *handle,
                                  size_t step,
                                  double *out);

/**
 * Consensus verdict: `*converged` is 0/1; on 1 the step and value are
 * written too.
 */
AcsimStatus acsim_trajectory_consensus(const AcsimTrajectory *handle,
                                       int32_t *converged,
                                       size_t *step,
                                       double *value);

void acsim_trajectory_free(AcsimTrajectory *handle);

/**
 * Seeded Monte Carlo ensemble; the summary (statistics, per-sample
 * consensus values, discrepancy against the synchronous run, structural
 * analysis) is returned as JSON.
 */
AcsimStatus acsim_monte_carlo_json(const AcsimTopology *handle,
                                   const double *x0,
                                   size_t x0_len,
                                   AcsimDelayKind kind,
                                   uint32_t tau_d,
                                   uint64_t master_seed,
                                   size_t samples,
                                   size_t steps,
                                   double ctol,
                                   char **out_json);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ACSIM_H */
