#ifndef TSVF_H
#define TSVF_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every fallible call. The usage / undefined / I/O codes
// match the `tsvf` command-line exit codes.
typedef enum TsvfStatus {
  TSVF_STATUS_OK = 0,
  // A required pointer argument was NULL.
  TSVF_STATUS_NULL_POINTER = 1,
  // Invalid input: unknown name, malformed scenario, bad parameter.
  TSVF_STATUS_USAGE = 2,
  // Valid input, but the quantity is undefined (e.g. orthogonal pre- and
  // post-selection).
  TSVF_STATUS_UNDEFINED = 3,
  TSVF_STATUS_IO = 4,
  // Output buffer too small; the required length was written to `out_len`.
  TSVF_STATUS_BUFFER_TOO_SMALL = 5,
  // Internal error (a Rust panic was caught).
  TSVF_STATUS_PANIC = 6,
} TsvfStatus;

// Opaque scenario handle.
typedef struct TsvfScenario TsvfScenario;

// Exact moments of the post-selected pointer.
typedef struct TsvfPointerMoments {
  double mean;
  double variance;
  double postselection_probability;
} TsvfPointerMoments;

// Sampled summed pointer reading over an ensemble.
typedef struct TsvfPointerStats {
  uint64_t n_trials;
  uint64_t n_particles;
  double sample_mean;
  double sample_variance;
  double standard_error;
  double analytic_mean;
  double analytic_postselection_probability;
} TsvfPointerStats;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message describing the most recent failure on this thread, or NULL if no
// call has failed yet. The pointer stays valid until the next failing call
// on the same thread; do not free it.
const char *tsvf_last_error_message(void);

// Library version as a static string.
const char *tsvf_version(void);

// Create a built-in scenario (`"three-box"` or `"singlet"`). `n_particles`
// applies to three-box and must be at least 1.
//
// # Safety
// `name` must be a valid NUL-terminated string and `out` a valid pointer.
enum TsvfStatus tsvf_scenario_builtin(const char *name,
                                      uint32_t n_particles,
                                      struct TsvfScenario **out);

// Parse a scenario document (`tsvf-scenario/1` JSON).
//
// # Safety
// `json` must be a valid NUL-terminated string and `out` a valid pointer.
enum TsvfStatus tsvf_scenario_from_json(const char *json, struct TsvfScenario **out);

// Release a scenario. NULL is ignored.
//
// # Safety
// `scenario` must come from this library and not have been freed already.
void tsvf_scenario_free(struct TsvfScenario *scenario);

// Hilbert-space dimension of a scenario.
//
// # Safety
// `scenario` must be a live handle and `out_dim` a valid pointer.
enum TsvfStatus tsvf_scenario_dim(const struct TsvfScenario *scenario, size_t *out_dim);

// ABL distribution of a named observable: distinct eigenvalues ascending in
// `values`, probabilities in `probabilities`. `*out_len` receives the number
// of outcomes; if it exceeds `capacity` nothing else is written and
// `TSVF_STATUS_BUFFER_TOO_SMALL` is returned. Buffers may be NULL when
// `capacity` is 0.
//
// # Safety
// `values` and `probabilities` must each hold `capacity` doubles.
enum TsvfStatus tsvf_abl(const struct TsvfScenario *scenario,
                         const char *observable,
                         double *values,
                         double *probabilities,
                         size_t capacity,
                         size_t *out_len);

// Weak value `⟨post|A|pre⟩/⟨post|pre⟩` of a named observable.
//
// # Safety
// `out_re` and `out_im` must be valid pointers.
enum TsvfStatus tsvf_weak_value(const struct TsvfScenario *scenario,
                                const char *operator_,
                                double *out_re,
                                double *out_im);

// Exact conditional pointer moments for a Gaussian pointer of spread
// `sigma` coupled to a named observable.
//
// # Safety
// `out` must be a valid pointer.
enum TsvfStatus tsvf_pointer_mean(const struct TsvfScenario *scenario,
                                  const char *observable,
                                  double sigma,
                                  struct TsvfPointerMoments *out);

// Sample the summed pointer reading of `n_particles` copies of the
// scenario's (single-particle) pre- and post-selected system, each weakly
// coupled to its own pointer. Deterministic in `seed`.
//
// # Safety
// `out` must be a valid pointer.
enum TsvfStatus tsvf_ensemble_pressure(const struct TsvfScenario *scenario,
                                       const char *observable,
                                       uint64_t n_particles,
                                       double sigma,
                                       uint64_t trials,
                                       uint64_t seed,
                                       struct TsvfPointerStats *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TSVF_H */
