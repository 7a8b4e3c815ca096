#ifndef AFC_RAMAN_H
#define AFC_RAMAN_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum {
  AFC_STATUS_OK = 0,
  AFC_STATUS_NULL_POINTER = 1,
  AFC_STATUS_INVALID_PARAMETER = 2,
  AFC_STATUS_REGIME = 3,
  AFC_STATUS_UNDER_RESOLVED = 4,
  AFC_STATUS_OVERLAPPING_REVIVALS = 5,
  AFC_STATUS_UNREACHABLE = 6,
  AFC_STATUS_CONFIG = 7,
  AFC_STATUS_IO = 8,
  AFC_STATUS_BUFFER_TOO_SMALL = 9,
  AFC_STATUS_PANIC = 10,
} AfcStatus;

/**
 * Values accepted where an objective is expected.
 */
typedef enum {
  AFC_OBJECTIVE_RAMAN_BACKWARD = 0,
  AFC_OBJECTIVE_RAMAN_FORWARD = 1,
  AFC_OBJECTIVE_MEMORY_BACKWARD = 2,
  AFC_OBJECTIVE_MEMORY_FORWARD = 3,
} AfcObjective;

/**
 * Values accepted where a readout direction is expected.
 */
typedef enum {
  AFC_DIRECTION_BACKWARD = 0,
  AFC_DIRECTION_FORWARD = 1,
} AfcDirection;

typedef struct AfcComb AfcComb;

typedef struct AfcProtocol AfcProtocol;

typedef struct AfcTrace AfcTrace;

/**
 * Closed-form figures of merit. Optional values are NaN when undefined.
 */
typedef struct {
  double finesse;
  double effective_depth;
  double p_stokes;
  double photons_per_write_attempt;
  double eta_readout;
  double eta_readout_forward;
  double eta_memory_backward;
  double eta_memory_forward;
  double noise_per_mode;
  double snr_lower_bound;
  double snr_asymptotic;
  double echo_time;
  uint64_t mode_capacity;
} AfcEfficiencyReport;

typedef struct {
  double distance_km;
  double attenuation_db_per_km;
  double eta_c;
  double eta_d;
  double rate_hz;
  double p;
  /**
   * Charge the full separation to each photon instead of half.
   */
  bool full_distance;
} AfcLinkParams;

typedef struct {
  double eta_t;
  double t_entangle_s;
  double fidelity;
} AfcLinkReport;

typedef struct {
  double f_star;
  double depth_star;
  double eta_star;
  bool at_boundary;
} AfcOptimizationResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *afc_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *afc_version(void);

/**
 * Builds a comb; frequencies in Hz.
 *
 * # Safety
 * `out` must be valid for writes.
 */
AfcStatus afc_comb_new(double gamma_fwhm,
                       double delta0,
                       double big_gamma,
                       double alpha_l,
                       AfcComb **out);

/**
 * # Safety
 * `comb` must be NULL or a handle from [`afc_comb_new`] not yet freed.
 */
void afc_comb_free(AfcComb *comb);

/**
 * Finesse `delta0 / gamma`; NaN for a NULL handle.
 *
 * # Safety
 * `comb` must be NULL or a live handle.
 */
double afc_comb_finesse(const AfcComb *comb);

/**
 * Comb-averaged optical depth; NaN for a NULL handle.
 *
 * # Safety
 * `comb` must be NULL or a live handle.
 */
double afc_comb_effective_depth(const AfcComb *comb);

/**
 * Normalized density at a detuning in Hz, in 1/Hz; NaN for a NULL handle.
 *
 * # Safety
 * `comb` must be NULL or a live handle.
 */
double afc_comb_density(const AfcComb *comb, double delta_hz);

/**
 * Fourier transform of the density at time `t` (s).
 *
 * # Safety
 * `comb` must be a live handle; `re` and `im` must be valid for writes.
 */
AfcStatus afc_comb_fourier(const AfcComb *comb, double t, double *re, double *im);

/**
 * Write-pulse area squared, detection time and read delay (s). The read
 * pulse is a perfect pi pulse.
 *
 * # Safety
 * `out` must be valid for writes.
 */
AfcStatus afc_protocol_new(double theta0_sq, double t_d, double tau, AfcProtocol **out);

/**
 * # Safety
 * `protocol` must be NULL or a handle from [`afc_protocol_new`] not yet freed.
 */
void afc_protocol_free(AfcProtocol *protocol);

/**
 * # Safety
 * Handles must be live; `out` must be valid for writes.
 */
AfcStatus afc_full_report(const AfcComb *comb,
                          const AfcProtocol *protocol,
                          AfcEfficiencyReport *out);

/**
 * # Safety
 * `params` must be valid for reads and `out` for writes.
 */
AfcStatus afc_link_report(const AfcLinkParams *params, AfcLinkReport *out);

/**
 * Finesse maximizing the objective (an [`AfcObjective`] value) at tooth depth `alpha_l`.
 *
 * # Safety
 * `out` must be valid for writes.
 */
AfcStatus afc_optimize_finesse(double alpha_l, uint32_t objective_code, AfcOptimizationResult *out);

/**
 * Runs write, herald and read on the default ensemble grid and returns the
 * anti-Stokes trace in `direction` (an [`AfcDirection`] value).
 *
 * # Safety
 * Handles must be live; `out` must be valid for writes.
 */
AfcStatus afc_simulate_readout(const AfcComb *comb,
                               const AfcProtocol *protocol,
                               uint32_t direction,
                               AfcTrace **out);

/**
 * # Safety
 * `trace` must be NULL or a handle from [`afc_simulate_readout`] not yet freed.
 */
void afc_trace_free(AfcTrace *trace);

/**
 * Number of samples; 0 for a NULL handle.
 *
 * # Safety
 * `trace` must be NULL or a live handle.
 */
size_t afc_trace_len(const AfcTrace *trace);

/**
 * Time of the located revival (s); NaN for a NULL handle.
 *
 * # Safety
 * `trace` must be NULL or a live handle.
 */
double afc_trace_peak_time(const AfcTrace *trace);

/**
 * Photons per mode at the revival; NaN for a NULL handle.
 *
 * # Safety
 * `trace` must be NULL or a live handle.
 */
double afc_trace_mode_counts(const AfcTrace *trace);

/**
 * Copies sample times (s) and flux (photons/s) into caller buffers of `len`
 * elements each; `len` must be at least [`afc_trace_len`].
 *
 * # Safety
 * `trace` must be live; `times` and `flux` must be valid for `len` writes.
 */
AfcStatus afc_trace_copy(const AfcTrace *trace, double *times, double *flux, size_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* AFC_RAMAN_H */
