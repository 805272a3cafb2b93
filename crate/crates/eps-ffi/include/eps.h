#ifndef EPS_H
#define EPS_H

/* Generated by cbindgen from the eps-ffi crate; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Status codes returned by every fallible call.  Zero is success; the
// other values mirror the library's error classes.
typedef enum EpsStatus {
  EPS_STATUS_OK = 0,
  EPS_STATUS_INVALID_INPUT = 1,
  EPS_STATUS_UNSUPPORTED = 2,
  EPS_STATUS_DOMAIN_COVERAGE = 3,
  EPS_STATUS_NUMERICAL_CONSISTENCY = 4,
  EPS_STATUS_SERIES_DIVERGENCE = 5,
  EPS_STATUS_SERIES_NON_TERMINATING = 6,
  EPS_STATUS_EXPRESSION_BLOWUP = 7,
  EPS_STATUS_UNBOUND_SYMBOL = 8,
  EPS_STATUS_EXPANSION = 9,
  EPS_STATUS_NORMALIZATION = 10,
  EPS_STATUS_STABILITY = 11,
  EPS_STATUS_CONFIG = 12,
  EPS_STATUS_IO = 13,
  EPS_STATUS_NULL_POINTER = 14,
  EPS_STATUS_PANIC = 15,
} EpsStatus;

// Which distribution [`eps_distribution_new`] builds.
typedef enum EpsDistributionKind {
  EPS_DISTRIBUTION_KIND_WIGNER = 0,
  EPS_DISTRIBUTION_KIND_HUSIMI = 1,
  EPS_DISTRIBUTION_KIND_Q_FUNCTION = 2,
} EpsDistributionKind;

// Opaque distribution handle.
typedef struct EpsDistribution EpsDistribution;

// Opaque phase-space state handle.
typedef struct EpsState EpsState;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copies the message for the most recent error on this thread into `buf`
// (NUL-terminated, truncated to `len`).  Returns the full message length
// in bytes, excluding the NUL, so callers can size a second attempt.
//
// # Safety
// `buf` must point to `len` writable bytes, or be NULL (then only the
// required length is returned).
size_t eps_last_error_message(char *buf, size_t len);

// Builds the oscillator level `n_level` on a square `[-half_width,
// half_width]^2 grid` with `n` samples per axis, at time `t`.
//
// # Safety
// `out` must be a valid pointer to receive the handle.
enum EpsStatus eps_state_new_eigenstate(uint32_t n_level,
                                        double m,
                                        double omega,
                                        double hbar,
                                        double half_width,
                                        size_t n,
                                        double t,
                                        struct EpsState **out);

// Builds a coherent state centered at `(q0, p0)`; see
// [`eps_state_new_eigenstate`] for the grid arguments.
//
// # Safety
// `out` must be a valid pointer to receive the handle.
enum EpsStatus eps_state_new_coherent(double q0,
                                      double p0,
                                      double m,
                                      double omega,
                                      double hbar,
                                      double half_width,
                                      size_t n,
                                      double t,
                                      struct EpsState **out);

// Releases a state handle.  NULL is accepted and ignored.
//
// # Safety
// `state` must have come from a constructor and not been freed before.
void eps_state_free(struct EpsState *state);

// Reports the grid shape (`n_p` rows, `n_q` columns).
//
// # Safety
// All pointers must be valid or NULL (`out_*` may be NULL to skip).
enum EpsStatus eps_state_grid_shape(const struct EpsState *state, size_t *out_n_p, size_t *out_n_q);

// Reads one complex sample of the state, row `ip` (momentum index) and
// column `iq` (position index).
//
// # Safety
// Pointers must be valid; out-of-range indices are reported, not UB.
enum EpsStatus eps_state_chi_at(const struct EpsState *state,
                                size_t ip,
                                size_t iq,
                                double *out_re,
                                double *out_im);

// Averages a classical observable over the state.  `observable` is the
// text form, e.g. `"q"`, `"p^2"`, or `"p^2/(2*m) + (k/2)*q^2"`.
//
// # Safety
// `observable` must be a NUL-terminated string; out pointers must be valid.
enum EpsStatus eps_state_expectation(const struct EpsState *state,
                                     const char *observable,
                                     double *out_re,
                                     double *out_im);

// Maximum absolute residual of the stationary phase equation on the
// state's support mask; small values certify the state solves it.
//
// # Safety
// Pointers must be valid.
enum EpsStatus eps_state_phase_equation_residual(const struct EpsState *state, double *out_max_abs);

// Builds a distribution from the state's defining wavefunctions at the
// state's own time.  `f` is the smoothing width for `Husimi`; pass any
// value `<= 0` to use the matched width.  `Wigner` ignores `f` and
// `QFunction` always uses the matched width.
//
// # Safety
// `out` must be a valid pointer to receive the handle.
enum EpsStatus eps_distribution_new(const struct EpsState *state,
                                    enum EpsDistributionKind kind,
                                    double f,
                                    struct EpsDistribution **out);

// Releases a distribution handle.  NULL is accepted and ignored.
//
// # Safety
// `dist` must have come from [`eps_distribution_new`] and not been freed.
void eps_distribution_free(struct EpsDistribution *dist);

// Reads one sample of the distribution.
//
// # Safety
// Pointers must be valid; out-of-range indices are reported, not UB.
enum EpsStatus eps_distribution_value_at(const struct EpsDistribution *dist,
                                         size_t ip,
                                         size_t iq,
                                         double *out_value);

// Minimum, maximum, and total mass of the distribution in one call.
//
// # Safety
// Pointers must be valid or NULL (NULL outputs are skipped).
enum EpsStatus eps_distribution_stats(const struct EpsDistribution *dist,
                                      double *out_min,
                                      double *out_max,
                                      double *out_mass);

// Writes the exact conjugated-flow derivation (the generator with its
// mixed correction in grouped form) into `buf`, NUL-terminated and
// truncated to `len`.  Returns the status; the full length can be
// obtained by calling with `buf = NULL` first via
// [`eps_last_error_message`]-style sizing: the text is also stored as the
// last "error" message on success for easy retrieval.
//
// # Safety
// `buf` must point to `len` writable bytes, or be NULL.
enum EpsStatus eps_algebra_smoothed_flow(char *buf, size_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* EPS_H */
