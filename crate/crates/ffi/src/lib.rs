//! C ABI over the `weakshift` library.
//!
//! Every function returns a [`WsStatus`] (except the pure value helpers) and
//! writes results through out-pointers. Objects are opaque handles created by
//! `ws_*_new` and released by the matching `ws_*_free`. After a failure,
//! [`ws_last_error_message`] describes it; the message is per thread.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use num_complex::Complex64;
use weakshift::barrier::{RectangularBarrier, ShiftMethod};
use weakshift::hartman::{hartman_scan, oscillation_count, ScanConfig};
use weakshift::measurement::{sigma_schedule, MeasuredOperator, PostSelectedMeasurement, SelectionPair};
use weakshift::numerics::{erfc, SpatialGrid};
use weakshift::wavepacket::{transmitted_state, Dispersion, GaussianPulse, QuadratureOptions};
use weakshift::{amplitude::Scaled, Error};

#[repr(i32)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    OutsideRegime = 3,
    NotConverged = 4,
    Numerical = 5,
    Panic = 6,
}

#[repr(i32)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WsRegime {
    Massive = 0,
    Photon = 1,
    Static = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct WsComplex {
    pub re: f64,
    pub im: f64,
}

impl From<Complex64> for WsComplex {
    fn from(z: Complex64) -> Self {
        Self { re: z.re, im: z.im }
    }
}

impl From<WsComplex> for Complex64 {
    fn from(z: WsComplex) -> Self {
        Complex64::new(z.re, z.im)
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct WsScanRow {
    pub d: f64,
    pub sigma: f64,
    pub advancement: f64,
    pub width: f64,
    pub log10_trans_prob: f64,
    pub log10_prob_bound: f64,
    pub n_osc: f64,
    pub log10_tail_bound: f64,
    pub log10_tail_integral: f64,
    pub phase_time: f64,
}

pub struct WsBarrier(RectangularBarrier);

pub struct WsPulse(GaussianPulse);

pub struct WsSelection(PostSelectedMeasurement);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

type Failure = (WsStatus, String);

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> WsStatus {
    match e {
        Error::OutsideTunnellingRegime { .. } | Error::BranchPointSingularity { .. } => WsStatus::OutsideRegime,
        Error::QuadratureNotConverged { .. } => WsStatus::NotConverged,
        Error::ShiftWindowTooNarrow { .. } | Error::WindowTooNarrow(_) => WsStatus::Numerical,
        _ => WsStatus::InvalidArgument,
    }
}

fn lib(e: Error) -> Failure {
    (status_of(&e), e.to_string())
}

fn null(name: &str) -> Failure {
    (WsStatus::NullPointer, format!("{name} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> WsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => WsStatus::Ok,
        Ok(Err((status, msg))) => {
            set_last_error(&msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(&format!("panic: {msg}"));
            WsStatus::Panic
        }
    }
}

unsafe fn out<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(name))
}

unsafe fn handle<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(name))
}

unsafe fn slice<'a, T>(p: *const T, n: usize, name: &str) -> Result<&'a [T], Failure> {
    if n == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(name));
    }
    Ok(std::slice::from_raw_parts(p, n))
}

unsafe fn slice_mut<'a, T>(p: *mut T, n: usize, name: &str) -> Result<&'a mut [T], Failure> {
    if n == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(name));
    }
    Ok(std::slice::from_raw_parts_mut(p, n))
}

/// NUL-terminated library version. Static storage.
#[no_mangle]
pub extern "C" fn ws_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failure on this thread, empty if none. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ws_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// # Safety
/// `out` must be valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn ws_barrier_new(height_w: f64, width_d: f64, out_barrier: *mut *mut WsBarrier) -> WsStatus {
    guard(|| {
        let slot = out(out_barrier, "out_barrier")?;
        let b = RectangularBarrier::new(height_w, width_d).map_err(lib)?;
        *slot = Box::into_raw(Box::new(WsBarrier(b)));
        Ok(())
    })
}

/// # Safety
/// `barrier` must come from [`ws_barrier_new`] and not be freed twice. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn ws_barrier_free(barrier: *mut WsBarrier) {
    if !barrier.is_null() {
        drop(Box::from_raw(barrier));
    }
}

/// `T(p)`.
///
/// # Safety
/// `barrier` must be a live handle and `out_t` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ws_barrier_transmission(barrier: *const WsBarrier, p: f64, out_t: *mut WsComplex) -> WsStatus {
    guard(|| {
        let b = handle(barrier, "barrier")?;
        let slot = out(out_t, "out_t")?;
        *slot = b.0.transmission_amplitude(p).map_err(lib)?.into();
        Ok(())
    })
}

/// Complex weak shift `ȳ(p0) = i ∂p ln T`.
///
/// # Safety
/// `barrier` must be a live handle and `out_shift` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ws_barrier_weak_shift(barrier: *const WsBarrier, p0: f64, out_shift: *mut WsComplex) -> WsStatus {
    guard(|| {
        let b = handle(barrier, "barrier")?;
        let slot = out(out_shift, "out_shift")?;
        *slot = b.0.weak_shift(p0, ShiftMethod::Analytic).map_err(lib)?.as_complex().into();
        Ok(())
    })
}

/// # Safety
/// `barrier` must be a live handle and `out_time` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ws_barrier_phase_time(barrier: *const WsBarrier, p0: f64, out_time: *mut f64) -> WsStatus {
    guard(|| {
        let b = handle(barrier, "barrier")?;
        let slot = out(out_time, "out_time")?;
        *slot = b.0.phase_time(p0).map_err(lib)?;
        Ok(())
    })
}

/// Gaussian pulse of width `sigma`, mean momentum `p0`, centre `x0`.
/// `regime` is a [`WsRegime`] value; `c` is the speed for
/// [`WsRegime::Photon`] and ignored otherwise.
///
/// # Safety
/// `out_pulse` must be valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn ws_pulse_new(
    sigma: f64,
    p0: f64,
    x0: f64,
    regime: i32,
    c: f64,
    out_pulse: *mut *mut WsPulse,
) -> WsStatus {
    guard(|| {
        let slot = out(out_pulse, "out_pulse")?;
        let regime = match regime {
            r if r == WsRegime::Massive as i32 => Dispersion::Massive,
            r if r == WsRegime::Photon as i32 => Dispersion::Photon { c },
            r if r == WsRegime::Static as i32 => Dispersion::Static,
            r => return Err((WsStatus::InvalidArgument, format!("unknown regime {r}"))),
        };
        let pulse = GaussianPulse::new(sigma, p0, x0, regime).map_err(lib)?;
        *slot = Box::into_raw(Box::new(WsPulse(pulse)));
        Ok(())
    })
}

/// # Safety
/// `pulse` must come from [`ws_pulse_new`] and not be freed twice. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn ws_pulse_free(pulse: *mut WsPulse) {
    if !pulse.is_null() {
        drop(Box::from_raw(pulse));
    }
}

/// Transmitted pulse `e^{ln_scale} ∫ T(p) C(p) e^{ipx - iε(p)t} dp` on `n_x`
/// points spanning `[x_min, x_max]`, written to `out_values`.
///
/// # Safety
/// Handles must be live; `out_values` must hold `n_x` elements.
#[no_mangle]
pub unsafe extern "C" fn ws_transmitted_state(
    pulse: *const WsPulse,
    barrier: *const WsBarrier,
    x_min: f64,
    x_max: f64,
    n_x: usize,
    t: f64,
    ln_scale: f64,
    out_values: *mut WsComplex,
) -> WsStatus {
    guard(|| {
        let pulse = handle(pulse, "pulse")?;
        let barrier = handle(barrier, "barrier")?;
        let values = slice_mut(out_values, n_x, "out_values")?;
        let grid = SpatialGrid::new(x_min, x_max, n_x).map_err(lib)?;
        let amp = Scaled {
            inner: &barrier.0,
            ln_scale: Complex64::new(ln_scale, 0.0),
        };
        let state = transmitted_state(&pulse.0, &amp, &grid, t, &QuadratureOptions::default()).map_err(lib)?;
        for (o, v) in values.iter_mut().zip(state.field.values()) {
            *o = (*v).into();
        }
        Ok(())
    })
}

/// Pre/post-selected measurement of an operator with eigenvalues
/// `eigenvalues[0..dim]`; the states are normalized on entry.
///
/// # Safety
/// The three arrays must hold `dim` elements; `out_selection` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ws_selection_new(
    eigenvalues: *const f64,
    pre_state: *const WsComplex,
    post_state: *const WsComplex,
    dim: usize,
    out_selection: *mut *mut WsSelection,
) -> WsStatus {
    guard(|| {
        let slot = out(out_selection, "out_selection")?;
        let eig = slice(eigenvalues, dim, "eigenvalues")?.to_vec();
        let pre = slice(pre_state, dim, "pre_state")?.iter().map(|&z| z.into()).collect();
        let post = slice(post_state, dim, "post_state")?.iter().map(|&z| z.into()).collect();
        let op = MeasuredOperator::new(eig).map_err(lib)?;
        let sel = SelectionPair::normalized(pre, post).map_err(lib)?;
        let m = PostSelectedMeasurement::new(&op, &sel).map_err(lib)?;
        *slot = Box::into_raw(Box::new(WsSelection(m)));
        Ok(())
    })
}

/// # Safety
/// `selection` must come from [`ws_selection_new`] and not be freed twice. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn ws_selection_free(selection: *mut WsSelection) {
    if !selection.is_null() {
        drop(Box::from_raw(selection));
    }
}

/// # Safety
/// `selection` must be a live handle and `out_value` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ws_weak_value(selection: *const WsSelection, out_value: *mut WsComplex) -> WsStatus {
    guard(|| {
        let s = handle(selection, "selection")?;
        let slot = out(out_value, "out_value")?;
        *slot = s.0.weak_value().map_err(lib)?.value.into();
        Ok(())
    })
}

/// `Σ_a ⟨F|a⟩⟨a|I⟩ e^{-ipa}`.
///
/// # Safety
/// `selection` must be a live handle and `out_value` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ws_selection_amplitude(selection: *const WsSelection, p: f64, out_value: *mut WsComplex) -> WsStatus {
    guard(|| {
        let s = handle(selection, "selection")?;
        let slot = out(out_value, "out_value")?;
        if !p.is_finite() {
            return Err((WsStatus::InvalidArgument, format!("momentum must be finite, got {p}")));
        }
        *slot = s.0.selection_amplitude(p).into();
        Ok(())
    })
}

/// Pulse width `σ(d) = γ d^{(1+ε)/2}`.
///
/// # Safety
/// `out_sigma` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ws_sigma_schedule(d: f64, gamma: f64, epsilon: f64, out_sigma: *mut f64) -> WsStatus {
    guard(|| {
        let slot = out(out_sigma, "out_sigma")?;
        *slot = sigma_schedule(d, gamma, epsilon).map_err(lib)?;
        Ok(())
    })
}

/// # Safety
/// `out_count` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ws_oscillation_count(d: f64, gamma: f64, epsilon: f64, out_count: *mut f64) -> WsStatus {
    guard(|| {
        let slot = out(out_count, "out_count")?;
        *slot = oscillation_count(d, gamma, epsilon).map_err(lib)?;
        Ok(())
    })
}

#[no_mangle]
pub extern "C" fn ws_erfc(z: f64) -> f64 {
    erfc(z)
}

/// Scan over `d_list[0..n]` at the default quadrature settings. Row `i` is
/// written to `out_rows[i]` and its status to `out_status[i]`; the return
/// value is the first failing row status, or `WS_STATUS_OK`.
///
/// # Safety
/// `d_list`, `out_rows` and `out_status` must hold `n` elements.
#[no_mangle]
pub unsafe extern "C" fn ws_hartman_scan(
    height_w: f64,
    p0: f64,
    gamma: f64,
    epsilon: f64,
    d_list: *const f64,
    n: usize,
    out_rows: *mut WsScanRow,
    out_status: *mut WsStatus,
) -> WsStatus {
    guard(|| {
        let ds = slice(d_list, n, "d_list")?;
        let rows = slice_mut(out_rows, n, "out_rows")?;
        let statuses = slice_mut(out_status, n, "out_status")?;
        let cfg = ScanConfig {
            height_w,
            p0,
            gamma,
            epsilon,
            d_list: ds.to_vec(),
            ..ScanConfig::default()
        };
        let mut first: Option<Failure> = None;
        for ((r, row), status) in hartman_scan(&cfg).into_iter().zip(rows.iter_mut()).zip(statuses.iter_mut()) {
            match r {
                Ok(r) => {
                    *row = WsScanRow {
                        d: r.d,
                        sigma: r.sigma,
                        advancement: r.advancement,
                        width: r.width,
                        log10_trans_prob: r.log10_trans_prob,
                        log10_prob_bound: r.log10_prob_bound,
                        n_osc: r.n_osc,
                        log10_tail_bound: r.log10_tail_bound,
                        log10_tail_integral: r.log10_tail_integral,
                        phase_time: r.phase_time,
                    };
                    *status = WsStatus::Ok;
                }
                Err(e) => {
                    let f = lib(e);
                    *row = WsScanRow::default();
                    *status = f.0;
                    first.get_or_insert(f);
                }
            }
        }
        first.map_or(Ok(()), Err)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::ffi::CStr;
    use std::ptr;

    fn last_error() -> String {
        unsafe { CStr::from_ptr(ws_last_error_message()) }.to_string_lossy().into_owned()
    }

    #[test]
    fn error_mapping() {
        assert_eq!(status_of(&Error::QuadratureNotConverged { rel_change: 1.0, n_points: 3, tolerance: 0.1 }), WsStatus::NotConverged);
        assert_eq!(status_of(&Error::OutsideTunnellingRegime { p: 2.0, w: 1.0 }), WsStatus::OutsideRegime);
        assert_eq!(status_of(&Error::InvalidMomentum(-1.0)), WsStatus::InvalidArgument);
    }

    #[test]
    fn panics_are_contained() {
        let s = guard(|| panic!("boom"));
        assert_eq!(s, WsStatus::Panic);
        assert_eq!(last_error(), "panic: boom");
    }

    #[test]
    fn null_out_pointer() {
        let s = unsafe { ws_barrier_new(1.0, 1.0, ptr::null_mut()) };
        assert_eq!(s, WsStatus::NullPointer);
        assert!(last_error().contains("out_barrier"));
    }
}
