#ifndef ERASURE_SIM_H
#define ERASURE_SIM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stddef.h>
#include <stdint.h>

// Outcome of a call.
typedef enum ErasureStatus {
  ERASURE_STATUS_OK = 0,
  ERASURE_STATUS_NULL_POINTER = 1,
  ERASURE_STATUS_UTF8 = 2,
  ERASURE_STATUS_DOMAIN = 3,
  ERASURE_STATUS_RANGE = 4,
  ERASURE_STATUS_INVALID = 5,
  ERASURE_STATUS_USAGE = 6,
  ERASURE_STATUS_PRECISION = 7,
  ERASURE_STATUS_BLOWUP = 8,
  ERASURE_STATUS_INCONCLUSIVE = 9,
  ERASURE_STATUS_CONFIG = 10,
  ERASURE_STATUS_IO = 11,
  ERASURE_STATUS_BUFFER_TOO_SMALL = 12,
  ERASURE_STATUS_OUT_OF_BOUNDS = 13,
  ERASURE_STATUS_PANIC = 14,
} ErasureStatus;

// Parsed and validated run configuration.
typedef struct ErasureConfig ErasureConfig;

// Records produced by one run.
typedef struct ErasureResult ErasureResult;

// Summary fields of record `index`.
typedef struct ErasureSummary {
  uint64_t n;
  double mean_work;
  double stderr_work;
  double mean_heat;
  double stderr_heat;
  // NaN when the backend has no bit readout.
  double final_p1;
  // NaN when the experiment has no target bit.
  double error_prob;
  // NaN when no entropy report applies.
  double delta_s_info_bits;
  double landauer_min_heat;
  // NaN outside sweeps.
  double axis_value;
  // 1 when the row lacks enough crossings.
  int inconclusive;
} ErasureSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null. The pointer
// stays valid until the next failing call on the same thread.
const char *erasure_last_error_message(void);

// Static, nul-terminated version string.
const char *erasure_version(void);

// Release a string returned by this library. Null is ignored.
//
// # Safety
// `s` must come from this library and not have been freed.
void erasure_string_free(char *s);

// Double-well energy `U(x; b, a)`.
//
// # Safety
// `out` must be valid for writes.
enum ErasureStatus erasure_potential_energy(double barrier_height,
                                            double well_halfwidth,
                                            double barrier_scale,
                                            double tilt,
                                            double x,
                                            double *out);

// Force `-dU/dx`.
//
// # Safety
// `out` must be valid for writes.
enum ErasureStatus erasure_potential_force(double barrier_height,
                                           double well_halfwidth,
                                           double barrier_scale,
                                           double tilt,
                                           double x,
                                           double *out);

// Kramers waiting time `tau0 exp(E / kT)`.
//
// # Safety
// `out` must be valid for writes.
enum ErasureStatus erasure_kramers_time(double tau0, double barrier, double kbt, double *out);

// `p1(t)` for a symmetric two-state cell.
//
// # Safety
// `out` must be valid for writes.
enum ErasureStatus erasure_two_state_relaxation(double rate,
                                                double p1_initial,
                                                double t,
                                                double *out);

// Binary entropy `H(p)` in bits.
//
// # Safety
// `out` must be valid for writes.
enum ErasureStatus erasure_binary_entropy_bits(double p, double *out);

// `-kT ln 2 ΔS` for an entropy change in bits.
//
// # Safety
// `out` must be valid for writes.
enum ErasureStatus erasure_landauer_min_heat(double delta_s_info_bits, double kbt, double *out);

// Bits of the sequence-counting cost of overwriting a memory of size `n`.
//
// # Safety
// `out` must be valid for writes.
enum ErasureStatus erasure_write_over_cost_bits(uint64_t n, double *out);

// First `n` binary digits of the fractional part of pi, one bit per byte.
//
// # Safety
// `buf` must be valid for `len` byte writes.
enum ErasureStatus erasure_pi_bits(uint64_t n, uint8_t *buf, size_t len);

// Parse a TOML run configuration.
//
// # Safety
// `text` must be a nul-terminated string; `out` must be valid for writes.
enum ErasureStatus erasure_config_parse(const char *text, struct ErasureConfig **out);

// Override the master seed.
//
// # Safety
// `config` must be a live handle.
enum ErasureStatus erasure_config_set_seed(struct ErasureConfig *config, uint64_t seed);

// Resolved configuration as JSON; free with [`erasure_string_free`].
//
// # Safety
// `config` must be a live handle; `out` must be valid for writes.
enum ErasureStatus erasure_config_to_json(const struct ErasureConfig *config, char **out);

// Release a configuration. Null is ignored.
//
// # Safety
// `config` must come from [`erasure_config_parse`] and not have been freed.
void erasure_config_free(struct ErasureConfig *config);

// Run the configured experiment or sweep. `workers = 0` uses every core.
//
// # Safety
// `config` must be a live handle; `out` must be valid for writes.
enum ErasureStatus erasure_run(const struct ErasureConfig *config,
                               size_t workers,
                               struct ErasureResult **out);

// Number of records in a result.
//
// # Safety
// `result` must be a live handle or null (which yields 0).
size_t erasure_result_len(const struct ErasureResult *result);

// Copy the numeric summary of record `index`.
//
// # Safety
// `result` must be a live handle; `out` must be valid for writes.
enum ErasureStatus erasure_result_summary(const struct ErasureResult *result,
                                          size_t index,
                                          struct ErasureSummary *out);

// Record `index` as one JSON line; free with [`erasure_string_free`].
//
// # Safety
// `result` must be a live handle; `out` must be valid for writes.
enum ErasureStatus erasure_result_json(const struct ErasureResult *result,
                                       size_t index,
                                       char **out);

// All records as CSV with a header row; free with [`erasure_string_free`].
//
// # Safety
// `result` must be a live handle; `out` must be valid for writes.
enum ErasureStatus erasure_result_csv(const struct ErasureResult *result, char **out);

// Release a result. Null is ignored.
//
// # Safety
// `result` must come from [`erasure_run`] and not have been freed.
void erasure_result_free(struct ErasureResult *result);

// Run one acceptance criterion (`"A1"` to `"A8"`); `*passed` is 1 on PASS,
// 0 on FAIL and -1 when inconclusive.
//
// # Safety
// `id` must be a nul-terminated string; `passed` must be valid for writes.
enum ErasureStatus erasure_run_criterion(const char *id,
                                         uint64_t seed,
                                         size_t workers,
                                         int *passed);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ERASURE_SIM_H */
