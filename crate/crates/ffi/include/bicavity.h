#ifndef BICAVITY_H
#define BICAVITY_H

/* Generated by cbindgen from the bicavity-ffi crate; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status code returned by every fallible call.
 */
typedef enum BcStatus {
  BC_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  BC_STATUS_NULL_ARGUMENT = 1,
  /**
   * A string argument was not valid UTF-8.
   */
  BC_STATUS_INVALID_UTF8 = 2,
  /**
   * The program text failed to parse or validate.
   */
  BC_STATUS_PARSE_ERROR = 3,
  /**
   * An argument was out of range or malformed.
   */
  BC_STATUS_INVALID_ARGUMENT = 4,
  /**
   * The simulation itself failed.
   */
  BC_STATUS_RUNTIME_ERROR = 5,
} BcStatus;

/**
 * Canned protocol selector for [`bc_program_builtin`].
 */
typedef enum BcProtocol {
  BC_PROTOCOL_GHZ = 0,
  BC_PROTOCOL_W = 1,
  BC_PROTOCOL_DETECT_GHZ = 2,
  BC_PROTOCOL_DETECT_W = 3,
  BC_PROTOCOL_BELL_PAIR = 4,
  BC_PROTOCOL_BELL_PAIR_PROBE = 5,
} BcProtocol;

/**
 * Opaque simulation constants (coupling, splitting, truncation, seed).
 */
typedef struct BcConfig BcConfig;

/**
 * Opaque validated pulse program.
 */
typedef struct BcProgram BcProgram;

/**
 * Opaque result of one sampled run: final state plus measurement record.
 */
typedef struct BcRun BcRun;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Version string of the underlying simulator crate.
 */
const char *bc_version(void);

/**
 * Message for the most recent failure on this thread. Valid until the next
 * failing call on the same thread.
 */
const char *bc_last_error(void);

/**
 * Release a string returned by this library.
 */
void bc_string_free(char *s);

/**
 * Default constants: coupling 2 pi x 47 kHz, splitting 2 pi x 128.3 kHz,
 * one photon per mode, seed 0.
 */
struct BcConfig *bc_config_default(void);

/**
 * Build a config from explicit constants (angular frequencies in rad/s).
 */
enum BcStatus bc_config_new(double omega_rabi,
                            double delta,
                            uint32_t n_max,
                            uint64_t rng_seed,
                            struct BcConfig **out);

void bc_config_free(struct BcConfig *config);

/**
 * Parse program text. On success `*out` owns the program.
 */
enum BcStatus bc_program_parse(const char *source, struct BcProgram **out);

/**
 * Build one of the canned protocols; `n` is the chain length for `Ghz` and
 * `W` and is ignored by the fixed detection protocols.
 */
enum BcStatus bc_program_builtin(enum BcProtocol protocol, uint32_t n, struct BcProgram **out);

/**
 * Serialize a program back to its text form. Free with [`bc_string_free`].
 */
char *bc_program_serialize(const struct BcProgram *program);

void bc_program_free(struct BcProgram *program);

/**
 * Run a program with sampled measurement outcomes. Bindings are parallel
 * arrays of `count` parameter names and values.
 */
enum BcStatus bc_program_run(const struct BcProgram *program,
                             const struct BcConfig *config,
                             const char *const *binding_names,
                             const double *binding_values,
                             uintptr_t binding_count,
                             uint64_t seed,
                             struct BcRun **out);

/**
 * 1 when every post-selection filter passed, 0 when the run was rejected,
 * -1 on a null handle.
 */
int32_t bc_run_postselect_pass(const struct BcRun *run);

uintptr_t bc_run_outcome_count(const struct BcRun *run);

/**
 * Name of the atom measured at `index`; borrowed from the run handle.
 */
const char *bc_run_outcome_atom(const struct BcRun *run, uintptr_t index);

/**
 * Detected level at `index` as the character `e`, `g`, or `i` (0 on error).
 */
char bc_run_outcome_level(const struct BcRun *run, uintptr_t index);

/**
 * Probability the recorded outcome carried when it was drawn (NaN on error).
 */
double bc_run_outcome_probability(const struct BcRun *run, uintptr_t index);

/**
 * Amplitude of a basis state of the final wave function. The label lists
 * one entry per subsystem, comma separated, e.g. `g,i,i,g,e,0,0`.
 */
enum BcStatus bc_run_state_amplitude(const struct BcRun *run,
                                     const char *label,
                                     double *re,
                                     double *im);

void bc_run_free(struct BcRun *run);

/**
 * Sweep the program's signal over one or two axes and return the CSV table
 * as a string (free with [`bc_string_free`]).
 *
 * Axes are specs of the form `name=start:stop:steps`; `samples_per_point`
 * of 0 selects exact branch enumeration, anything larger runs that many
 * sampled trajectories per grid point seeded from the config.
 */
enum BcStatus bc_sweep_csv(const struct BcProgram *program,
                           const struct BcConfig *config,
                           const char *const *axis_specs,
                           uintptr_t axis_count,
                           const char *const *binding_names,
                           const double *binding_values,
                           uintptr_t binding_count,
                           uint64_t samples_per_point,
                           char **out_csv);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BICAVITY_H */
