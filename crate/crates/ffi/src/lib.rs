//! C ABI over `afc_raman`.
//!
//! Every fallible call returns an [`AfcStatus`]; on failure a message is kept
//! per thread and can be fetched with [`afc_last_error_message`]. Handles are
//! opaque and must be released with the matching `*_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use afc_raman::analytic::{self, Direction, ProtocolParams};
use afc_raman::comb::{Comb, CombParams};
use afc_raman::dynamics::{self, FieldTrace, GridSpec};
use afc_raman::link::{self, DistanceConvention, LinkParams};
use afc_raman::optimize::{self, Objective};
use afc_raman::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AfcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidParameter = 2,
    Regime = 3,
    UnderResolved = 4,
    OverlappingRevivals = 5,
    Unreachable = 6,
    Config = 7,
    Io = 8,
    BufferTooSmall = 9,
    Panic = 10,
}

/// Values accepted where an objective is expected.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AfcObjective {
    RamanBackward = 0,
    RamanForward = 1,
    MemoryBackward = 2,
    MemoryForward = 3,
}

/// Values accepted where a readout direction is expected.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AfcDirection {
    Backward = 0,
    Forward = 1,
}

pub struct AfcComb {
    comb: Comb,
}

pub struct AfcProtocol {
    params: ProtocolParams,
}

pub struct AfcTrace {
    trace: FieldTrace,
}

/// Closed-form figures of merit. Optional values are NaN when undefined.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct AfcEfficiencyReport {
    pub finesse: f64,
    pub effective_depth: f64,
    pub p_stokes: f64,
    pub photons_per_write_attempt: f64,
    pub eta_readout: f64,
    pub eta_readout_forward: f64,
    pub eta_memory_backward: f64,
    pub eta_memory_forward: f64,
    pub noise_per_mode: f64,
    pub snr_lower_bound: f64,
    pub snr_asymptotic: f64,
    pub echo_time: f64,
    pub mode_capacity: u64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct AfcLinkParams {
    pub distance_km: f64,
    pub attenuation_db_per_km: f64,
    pub eta_c: f64,
    pub eta_d: f64,
    pub rate_hz: f64,
    pub p: f64,
    /// Charge the full separation to each photon instead of half.
    pub full_distance: bool,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct AfcLinkReport {
    pub eta_t: f64,
    pub t_entangle_s: f64,
    pub fidelity: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct AfcOptimizationResult {
    pub f_star: f64,
    pub depth_star: f64,
    pub eta_star: f64,
    pub at_boundary: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> AfcStatus {
    match e {
        Error::InvalidParameter { .. } => AfcStatus::InvalidParameter,
        Error::Regime(_) => AfcStatus::Regime,
        Error::UnderResolved { .. } => AfcStatus::UnderResolved,
        Error::OverlappingRevivals { .. } => AfcStatus::OverlappingRevivals,
        Error::Unreachable(_) => AfcStatus::Unreachable,
        Error::Config(_) | Error::Json(_) | Error::Csv(_) => AfcStatus::Config,
        Error::Io(_) => AfcStatus::Io,
    }
}

fn fail(status: AfcStatus, msg: impl Into<String>) -> AfcStatus {
    set_error(msg.into());
    status
}

/// Runs `f`, translating errors and panics into status codes.
fn guard<F: FnOnce() -> Result<(), AfcStatus>>(f: F) -> AfcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => AfcStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => fail(AfcStatus::Panic, "internal panic"),
    }
}

trait OrStatus<T> {
    fn or_status(self) -> Result<T, AfcStatus>;
}

impl<T> OrStatus<T> for afc_raman::Result<T> {
    fn or_status(self) -> Result<T, AfcStatus> {
        self.map_err(|e| fail(status_of(&e), e.to_string()))
    }
}

unsafe fn deref<'a, T>(p: *const T, name: &str) -> Result<&'a T, AfcStatus> {
    // SAFETY: caller promises `p` is null or valid for reads.
    unsafe { p.as_ref() }.ok_or_else(|| fail(AfcStatus::NullPointer, format!("`{name}` is null")))
}

unsafe fn write_out<T>(p: *mut T, value: T, name: &str) -> Result<(), AfcStatus> {
    if p.is_null() {
        return Err(fail(AfcStatus::NullPointer, format!("`{name}` is null")));
    }
    // SAFETY: non-null and, per the caller's contract, valid for writes.
    unsafe { p.write(value) };
    Ok(())
}

/// Message of the last failed call on this thread, or NULL. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn afc_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn afc_version() -> *const c_char {
    static VERSION: &CStr = match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
        Ok(v) => v,
        Err(_) => c"",
    };
    VERSION.as_ptr()
}

/// Builds a comb; frequencies in Hz.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn afc_comb_new(
    gamma_fwhm: f64,
    delta0: f64,
    big_gamma: f64,
    alpha_l: f64,
    out: *mut *mut AfcComb,
) -> AfcStatus {
    guard(|| {
        let comb = Comb::new(CombParams::new(gamma_fwhm, delta0, big_gamma, alpha_l)).or_status()?;
        unsafe { write_out(out, Box::into_raw(Box::new(AfcComb { comb })), "out") }
    })
}

/// # Safety
/// `comb` must be NULL or a handle from [`afc_comb_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn afc_comb_free(comb: *mut AfcComb) {
    if !comb.is_null() {
        // SAFETY: allocated by `afc_comb_new`.
        drop(unsafe { Box::from_raw(comb) });
    }
}

/// Finesse `delta0 / gamma`; NaN for a NULL handle.
///
/// # Safety
/// `comb` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn afc_comb_finesse(comb: *const AfcComb) -> f64 {
    unsafe { comb.as_ref() }.map_or(f64::NAN, |c| c.comb.finesse())
}

/// Comb-averaged optical depth; NaN for a NULL handle.
///
/// # Safety
/// `comb` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn afc_comb_effective_depth(comb: *const AfcComb) -> f64 {
    unsafe { comb.as_ref() }.map_or(f64::NAN, |c| c.comb.effective_depth())
}

/// Normalized density at a detuning in Hz, in 1/Hz; NaN for a NULL handle.
///
/// # Safety
/// `comb` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn afc_comb_density(comb: *const AfcComb, delta_hz: f64) -> f64 {
    unsafe { comb.as_ref() }.map_or(f64::NAN, |c| c.comb.density(delta_hz))
}

/// Fourier transform of the density at time `t` (s).
///
/// # Safety
/// `comb` must be a live handle; `re` and `im` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn afc_comb_fourier(comb: *const AfcComb, t: f64, re: *mut f64, im: *mut f64) -> AfcStatus {
    guard(|| {
        let c = unsafe { deref(comb, "comb") }?;
        let z = c.comb.fourier(t);
        unsafe {
            write_out(re, z.re, "re")?;
            write_out(im, z.im, "im")
        }
    })
}

/// Write-pulse area squared, detection time and read delay (s). The read
/// pulse is a perfect pi pulse.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn afc_protocol_new(theta0_sq: f64, t_d: f64, tau: f64, out: *mut *mut AfcProtocol) -> AfcStatus {
    guard(|| {
        let params = ProtocolParams::new(theta0_sq, t_d, tau);
        params.validate().or_status()?;
        unsafe { write_out(out, Box::into_raw(Box::new(AfcProtocol { params })), "out") }
    })
}

/// # Safety
/// `protocol` must be NULL or a handle from [`afc_protocol_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn afc_protocol_free(protocol: *mut AfcProtocol) {
    if !protocol.is_null() {
        // SAFETY: allocated by `afc_protocol_new`.
        drop(unsafe { Box::from_raw(protocol) });
    }
}

/// # Safety
/// Handles must be live; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn afc_full_report(
    comb: *const AfcComb,
    protocol: *const AfcProtocol,
    out: *mut AfcEfficiencyReport,
) -> AfcStatus {
    guard(|| {
        let c = unsafe { deref(comb, "comb") }?;
        let p = unsafe { deref(protocol, "protocol") }?;
        let r = analytic::full_report(c.comb.params(), &p.params).or_status()?;
        let report = AfcEfficiencyReport {
            finesse: r.finesse,
            effective_depth: r.effective_depth,
            p_stokes: r.p_stokes,
            photons_per_write_attempt: r.photons_per_write_attempt,
            eta_readout: r.eta_readout,
            eta_readout_forward: r.eta_readout_forward,
            eta_memory_backward: r.eta_memory_backward,
            eta_memory_forward: r.eta_memory_forward,
            noise_per_mode: r.noise_per_mode,
            snr_lower_bound: r.snr_lower_bound.unwrap_or(f64::NAN),
            snr_asymptotic: r.snr_asymptotic.unwrap_or(f64::NAN),
            echo_time: r.echo_time,
            mode_capacity: r.mode_capacity,
        };
        unsafe { write_out(out, report, "out") }
    })
}

/// # Safety
/// `params` must be valid for reads and `out` for writes.
#[no_mangle]
pub unsafe extern "C" fn afc_link_report(params: *const AfcLinkParams, out: *mut AfcLinkReport) -> AfcStatus {
    guard(|| {
        let p = unsafe { deref(params, "params") }?;
        let lp = LinkParams {
            distance_km: p.distance_km,
            attenuation_db_per_km: p.attenuation_db_per_km,
            eta_c: p.eta_c,
            eta_d: p.eta_d,
            rate_hz: p.rate_hz,
            p: p.p,
            convention: if p.full_distance {
                DistanceConvention::FullDistance
            } else {
                DistanceConvention::HalfDistance
            },
        };
        let r = link::link_report(&lp).or_status()?;
        let report = AfcLinkReport {
            eta_t: r.eta_t,
            t_entangle_s: r.t_entangle_s,
            fidelity: r.fidelity,
        };
        unsafe { write_out(out, report, "out") }
    })
}

fn objective(code: u32) -> Result<Objective, AfcStatus> {
    match code {
        0 => Ok(Objective::RamanBackward),
        1 => Ok(Objective::RamanForward),
        2 => Ok(Objective::MemoryBackward),
        3 => Ok(Objective::MemoryForward),
        _ => Err(fail(AfcStatus::InvalidParameter, format!("unknown objective {code}"))),
    }
}

/// Finesse maximizing the objective (an [`AfcObjective`] value) at tooth depth `alpha_l`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn afc_optimize_finesse(alpha_l: f64, objective_code: u32, out: *mut AfcOptimizationResult) -> AfcStatus {
    guard(|| {
        let r = optimize::optimize_finesse(alpha_l, objective(objective_code)?).or_status()?;
        let res = AfcOptimizationResult {
            f_star: r.f_star.unwrap_or(f64::NAN),
            depth_star: r.depth_star,
            eta_star: r.eta_star,
            at_boundary: r.at_boundary,
        };
        unsafe { write_out(out, res, "out") }
    })
}

/// Runs write, herald and read on the default ensemble grid and returns the
/// anti-Stokes trace in `direction` (an [`AfcDirection`] value).
///
/// # Safety
/// Handles must be live; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn afc_simulate_readout(
    comb: *const AfcComb,
    protocol: *const AfcProtocol,
    direction: u32,
    out: *mut *mut AfcTrace,
) -> AfcStatus {
    guard(|| {
        let c = unsafe { deref(comb, "comb") }?;
        let p = unsafe { deref(protocol, "protocol") }?;
        let dir = match direction {
            0 => Direction::Backward,
            1 => Direction::Forward,
            d => return Err(fail(AfcStatus::InvalidParameter, format!("unknown direction {d}"))),
        };
        let trace = dynamics::simulate_readout(c.comb.params(), &p.params, &GridSpec::default(), dir).or_status()?;
        unsafe { write_out(out, Box::into_raw(Box::new(AfcTrace { trace })), "out") }
    })
}

/// # Safety
/// `trace` must be NULL or a handle from [`afc_simulate_readout`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn afc_trace_free(trace: *mut AfcTrace) {
    if !trace.is_null() {
        // SAFETY: allocated by `afc_simulate_readout`.
        drop(unsafe { Box::from_raw(trace) });
    }
}

/// Number of samples; 0 for a NULL handle.
///
/// # Safety
/// `trace` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn afc_trace_len(trace: *const AfcTrace) -> usize {
    unsafe { trace.as_ref() }.map_or(0, |t| t.trace.times.len())
}

/// Time of the located revival (s); NaN for a NULL handle.
///
/// # Safety
/// `trace` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn afc_trace_peak_time(trace: *const AfcTrace) -> f64 {
    unsafe { trace.as_ref() }.map_or(f64::NAN, |t| t.trace.peak_time)
}

/// Photons per mode at the revival; NaN for a NULL handle.
///
/// # Safety
/// `trace` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn afc_trace_mode_counts(trace: *const AfcTrace) -> f64 {
    unsafe { trace.as_ref() }.map_or(f64::NAN, |t| t.trace.mode_integrated_counts)
}

/// Copies sample times (s) and flux (photons/s) into caller buffers of `len`
/// elements each; `len` must be at least [`afc_trace_len`].
///
/// # Safety
/// `trace` must be live; `times` and `flux` must be valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn afc_trace_copy(trace: *const AfcTrace, times: *mut f64, flux: *mut f64, len: usize) -> AfcStatus {
    guard(|| {
        let t = &unsafe { deref(trace, "trace") }?.trace;
        let n = t.times.len();
        if len < n {
            return Err(fail(AfcStatus::BufferTooSmall, format!("buffers hold {len} samples, trace has {n}")));
        }
        if times.is_null() || flux.is_null() {
            return Err(fail(AfcStatus::NullPointer, "output buffer is null"));
        }
        // SAFETY: both buffers hold at least `n` elements and do not overlap the trace.
        unsafe {
            ptr::copy_nonoverlapping(t.times.as_ptr(), times, n);
            ptr::copy_nonoverlapping(t.flux.as_ptr(), flux, n);
        }
        Ok(())
    })
}
