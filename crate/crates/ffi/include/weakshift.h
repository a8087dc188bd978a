#ifndef WEAKSHIFT_H
#define WEAKSHIFT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

enum WsRegime
#ifdef __cplusplus
  : int32_t
#endif // __cplusplus
 {
  WS_REGIME_MASSIVE = 0,
  WS_REGIME_PHOTON = 1,
  WS_REGIME_STATIC = 2,
};
#ifndef __cplusplus
typedef int32_t WsRegime;
#endif // __cplusplus

enum WsStatus
#ifdef __cplusplus
  : int32_t
#endif // __cplusplus
 {
  WS_STATUS_OK = 0,
  WS_STATUS_NULL_POINTER = 1,
  WS_STATUS_INVALID_ARGUMENT = 2,
  WS_STATUS_OUTSIDE_REGIME = 3,
  WS_STATUS_NOT_CONVERGED = 4,
  WS_STATUS_NUMERICAL = 5,
  WS_STATUS_PANIC = 6,
};
#ifndef __cplusplus
typedef int32_t WsStatus;
#endif // __cplusplus

typedef struct WsBarrier WsBarrier;

typedef struct WsPulse WsPulse;

typedef struct WsSelection WsSelection;

typedef struct WsComplex {
  double re;
  double im;
} WsComplex;

typedef struct WsScanRow {
  double d;
  double sigma;
  double advancement;
  double width;
  double log10_trans_prob;
  double log10_prob_bound;
  double n_osc;
  double log10_tail_bound;
  double log10_tail_integral;
  double phase_time;
} WsScanRow;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * NUL-terminated library version. Static storage.
 */
const char *ws_version(void);

/**
 * Message of the last failure on this thread, empty if none. Valid until the
 * next failing call on the same thread.
 */
const char *ws_last_error_message(void);

/**
 * # Safety
 * `out` must be valid for a pointer write.
 */
WsStatus ws_barrier_new(double height_w, double width_d, struct WsBarrier **out_barrier);

/**
 * # Safety
 * `barrier` must come from [`ws_barrier_new`] and not be freed twice. Null is ignored.
 */
void ws_barrier_free(struct WsBarrier *barrier);

/**
 * `T(p)`.
 *
 * # Safety
 * `barrier` must be a live handle and `out_t` valid for writes.
 */
WsStatus ws_barrier_transmission(const struct WsBarrier *barrier,
                                 double p,
                                 struct WsComplex *out_t);

/**
 * Complex weak shift `ȳ(p0) = i ∂p ln T`.
 *
 * # Safety
 * `barrier` must be a live handle and `out_shift` valid for writes.
 */
WsStatus ws_barrier_weak_shift(const struct WsBarrier *barrier,
                               double p0,
                               struct WsComplex *out_shift);

/**
 * # Safety
 * `barrier` must be a live handle and `out_time` valid for writes.
 */
WsStatus ws_barrier_phase_time(const struct WsBarrier *barrier, double p0, double *out_time);

/**
 * Gaussian pulse of width `sigma`, mean momentum `p0`, centre `x0`.
 * `regime` is a [`WsRegime`] value; `c` is the speed for
 * [`WsRegime::Photon`] and ignored otherwise.
 *
 * # Safety
 * `out_pulse` must be valid for a pointer write.
 */
WsStatus ws_pulse_new(double sigma,
                      double p0,
                      double x0,
                      int32_t regime,
                      double c,
                      struct WsPulse **out_pulse);

/**
 * # Safety
 * `pulse` must come from [`ws_pulse_new`] and not be freed twice. Null is ignored.
 */
void ws_pulse_free(struct WsPulse *pulse);

/**
 * Transmitted pulse `e^{ln_scale} ∫ T(p) C(p) e^{ipx - iε(p)t} dp` on `n_x`
 * points spanning `[x_min, x_max]`, written to `out_values`.
 *
 * # Safety
 * Handles must be live; `out_values` must hold `n_x` elements.
 */
WsStatus ws_transmitted_state(const struct WsPulse *pulse,
                              const struct WsBarrier *barrier,
                              double x_min,
                              double x_max,
                              size_t n_x,
                              double t,
                              double ln_scale,
                              struct WsComplex *out_values);

/**
 * Pre/post-selected measurement of an operator with eigenvalues
 * `eigenvalues[0..dim]`; the states are normalized on entry.
 *
 * # Safety
 * The three arrays must hold `dim` elements; `out_selection` must be valid for writes.
 */
WsStatus ws_selection_new(const double *eigenvalues,
                          const struct WsComplex *pre_state,
                          const struct WsComplex *post_state,
                          size_t dim,
                          struct WsSelection **out_selection);

/**
 * # Safety
 * `selection` must come from [`ws_selection_new`] and not be freed twice. Null is ignored.
 */
void ws_selection_free(struct WsSelection *selection);

/**
 * # Safety
 * `selection` must be a live handle and `out_value` valid for writes.
 */
WsStatus ws_weak_value(const struct WsSelection *selection, struct WsComplex *out_value);

/**
 * `Σ_a ⟨F|a⟩⟨a|I⟩ e^{-ipa}`.
 *
 * # Safety
 * `selection` must be a live handle and `out_value` valid for writes.
 */
WsStatus ws_selection_amplitude(const struct WsSelection *selection,
                                double p,
                                struct WsComplex *out_value);

/**
 * Pulse width `σ(d) = γ d^{(1+ε)/2}`.
 *
 * # Safety
 * `out_sigma` must be valid for writes.
 */
WsStatus ws_sigma_schedule(double d, double gamma, double epsilon, double *out_sigma);

/**
 * # Safety
 * `out_count` must be valid for writes.
 */
WsStatus ws_oscillation_count(double d, double gamma, double epsilon, double *out_count);

double ws_erfc(double z);

/**
 * Scan over `d_list[0..n]` at the default quadrature settings. Row `i` is
 * written to `out_rows[i]` and its status to `out_status[i]`; the return
 * value is the first failing row status, or `WS_STATUS_OK`.
 *
 * # Safety
 * `d_list`, `out_rows` and `out_status` must hold `n` elements.
 */
WsStatus ws_hartman_scan(double height_w,
                         double p0,
                         double gamma,
                         double epsilon,
                         const double *d_list,
                         size_t n,
                         struct WsScanRow *out_rows,
                         WsStatus *out_status);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* WEAKSHIFT_H */
