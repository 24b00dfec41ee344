#ifndef HYBRID_ASM_H
#define HYBRID_ASM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes.
 */
typedef enum HasmStatus {
  HASM_STATUS_OK = 0,
  HASM_STATUS_NULL_POINTER = 1,
  HASM_STATUS_INVALID_UTF8 = 2,
  HASM_STATUS_PARSE_ERROR = 3,
  HASM_STATUS_INIT_ERROR = 4,
  HASM_STATUS_NOT_FOUND = 5,
  HASM_STATUS_INVALID_CONFIG = 6,
  HASM_STATUS_SYNTHESIS_ERROR = 7,
  HASM_STATUS_PANIC = 8,
} HasmStatus;

/**
 * How a run ended.
 */
typedef enum HasmTerminal {
  HASM_TERMINAL_QUIESCENT = 0,
  HASM_TERMINAL_REACHED_TMAX = 1,
  HASM_TERMINAL_ERROR = 2,
} HasmTerminal;

typedef struct HasmProgram HasmProgram;

typedef struct HasmState HasmState;

typedef struct HasmTrajectory HasmTrajectory;

/**
 * Engine parameters; see [`hasm_config_default`].
 */
typedef struct HasmConfig {
  double step_h;
  double t_max;
  double event_tol;
  uint64_t max_jumps_per_instant;
  uint64_t sample_stride;
  uint64_t max_steps;
} HasmConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread. The pointer stays valid
 * until the next failing call on the same thread.
 */
const char *hasm_last_error(void);

/**
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void hasm_string_free(char *s);

/**
 * Parses and checks program text.
 *
 * # Safety
 * `source` must be a NUL-terminated string; `out` must be writable.
 */
enum HasmStatus hasm_program_parse(const char *source, struct HasmProgram **out);

/**
 * # Safety
 * `program` must come from this library and not have been freed.
 */
void hasm_program_free(struct HasmProgram *program);

/**
 * Canonical text of the program, or NULL.
 *
 * # Safety
 * `program` must be a live handle.
 */
char *hasm_program_print(const struct HasmProgram *program);

/**
 * Parses an initial-state file over the program's vocabulary.
 *
 * # Safety
 * `program` must be a live handle, `init` a NUL-terminated string and `out`
 * writable.
 */
enum HasmStatus hasm_state_parse(const struct HasmProgram *program,
                                 const char *init,
                                 struct HasmState **out);

/**
 * # Safety
 * `state` must come from this library and not have been freed.
 */
void hasm_state_free(struct HasmState *state);

/**
 * Reads a nullary real location.
 *
 * # Safety
 * `state` must be a live handle, `name` a NUL-terminated string and `out`
 * writable.
 */
enum HasmStatus hasm_state_get_real(const struct HasmState *state, const char *name, double *out);

/**
 * Default engine parameters for a run up to `t_max`.
 */
struct HasmConfig hasm_config_default(double t_max);

/**
 * Executes the program. A run that ends in an error still yields a
 * trajectory; inspect it with [`hasm_trajectory_terminal`].
 *
 * # Safety
 * All pointers must be live handles or valid for reads/writes.
 */
enum HasmStatus hasm_run(const struct HasmProgram *program,
                         const struct HasmState *init,
                         const struct HasmConfig *config,
                         struct HasmTrajectory **out);

/**
 * # Safety
 * `trajectory` must come from this library and not have been freed.
 */
void hasm_trajectory_free(struct HasmTrajectory *trajectory);

/**
 * # Safety
 * `trajectory` must be a live handle.
 */
enum HasmTerminal hasm_trajectory_terminal(const struct HasmTrajectory *trajectory);

/**
 * Number of jumps taken.
 *
 * # Safety
 * `trajectory` must be a live handle or NULL.
 */
size_t hasm_trajectory_jump_count(const struct HasmTrajectory *trajectory);

/**
 * Copies the last recorded state into a new handle.
 *
 * # Safety
 * `trajectory` must be a live handle and `out` writable.
 */
enum HasmStatus hasm_trajectory_final_state(const struct HasmTrajectory *trajectory,
                                            struct HasmState **out);

/**
 * The trajectory as CSV over all nullary real locations, or NULL.
 *
 * # Safety
 * `trajectory` must be a live handle.
 */
char *hasm_trajectory_csv(const struct HasmTrajectory *trajectory);

/**
 * Synthesizes the canonical program for the `---`-separated sample states.
 *
 * # Safety
 * `program` must be a live handle, `samples` a NUL-terminated string and
 * `out` writable.
 */
enum HasmStatus hasm_synthesize(const struct HasmProgram *program,
                                const char *samples,
                                struct HasmProgram **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HYBRID_ASM_H */
