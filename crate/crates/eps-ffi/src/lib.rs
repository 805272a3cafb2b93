//! C ABI over the phase-space oscillator library.
//!
//! Conventions:
//! - Handles (`EpsState`, `EpsDistribution`) are opaque; create them with
//!   the `_new_` constructors, release them with the matching `_free`.
//!   Passing a handle after freeing it is undefined behavior, as in any C
//!   API; passing NULL to any function is caught and reported.
//! - Every fallible function returns an [`EpsStatus`]; `EPS_STATUS_OK` is
//!   zero.  On any other status the thread-local error message is set and
//!   can be fetched with [`eps_last_error_message`].
//! - All pointers are borrowed for the duration of the call only.
//! - Panics never cross the boundary; they convert to `EPS_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use eps_core::algebra::{parse_expr, print_expr_grouped, smoothed_flow_generator};
use eps_core::error::Error;
use eps_core::evolution::eps_expectation;
use eps_core::hamilton_jacobi::{modified_hj_residual, PhaseRate};
use eps_core::numerics::{integrate_2d, DerivMethod, PhaseSpaceGrid};
use eps_core::states::{
    build_eps_state, EPSState, OscillatorParams, WavefunctionSpec, DEFAULT_POLAR_THRESHOLD,
};
use eps_core::transforms::{build_wigner, smooth_distribution, QuasiDistribution, SmoothingParams, SmoothingRoute};

/// Status codes returned by every fallible call.  Zero is success; the
/// other values mirror the library's error classes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EpsStatus {
    Ok = 0,
    InvalidInput = 1,
    Unsupported = 2,
    DomainCoverage = 3,
    NumericalConsistency = 4,
    SeriesDivergence = 5,
    SeriesNonTerminating = 6,
    ExpressionBlowup = 7,
    UnboundSymbol = 8,
    Expansion = 9,
    Normalization = 10,
    Stability = 11,
    Config = 12,
    Io = 13,
    NullPointer = 14,
    Panic = 15,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::new("").unwrap());
}

fn set_error(msg: &str) {
    let sanitized: String = msg.chars().map(|c| if c == '\0' { ' ' } else { c }).collect();
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(sanitized).unwrap());
}

fn status_of(err: &Error) -> EpsStatus {
    match err {
        Error::InvalidInput(_) => EpsStatus::InvalidInput,
        Error::Unsupported(_) => EpsStatus::Unsupported,
        Error::DomainCoverage(_) => EpsStatus::DomainCoverage,
        Error::NumericalConsistency(_) => EpsStatus::NumericalConsistency,
        Error::SeriesDivergence { .. } => EpsStatus::SeriesDivergence,
        Error::SeriesNonTerminating { .. } => EpsStatus::SeriesNonTerminating,
        Error::ExpressionBlowup(_) => EpsStatus::ExpressionBlowup,
        Error::UnboundSymbol(_) => EpsStatus::UnboundSymbol,
        Error::Expansion(_) => EpsStatus::Expansion,
        Error::Normalization(_) => EpsStatus::Normalization,
        Error::Stability(_) => EpsStatus::Stability,
        Error::Config(_) => EpsStatus::Config,
        Error::Io(_) => EpsStatus::Io,
    }
}

fn fail(err: Error) -> EpsStatus {
    set_error(&err.to_string());
    status_of(&err)
}

/// Runs a fallible body, converting errors and panics to statuses.
fn guarded(body: impl FnOnce() -> Result<EpsStatus, Error>) -> EpsStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(status)) => status,
        Ok(Err(err)) => fail(err),
        Err(_) => {
            set_error("internal panic crossed the boundary; this is a bug");
            EpsStatus::Panic
        }
    }
}

fn null_pointer(what: &str) -> EpsStatus {
    set_error(&format!("{what} must not be NULL"));
    EpsStatus::NullPointer
}

/// Copies the message for the most recent error on this thread into `buf`
/// (NUL-terminated, truncated to `len`).  Returns the full message length
/// in bytes, excluding the NUL, so callers can size a second attempt.
///
/// # Safety
/// `buf` must point to `len` writable bytes, or be NULL (then only the
/// required length is returned).
#[no_mangle]
pub unsafe extern "C" fn eps_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            unsafe {
                ptr::copy_nonoverlapping(bytes.as_ptr() as *const c_char, buf, n);
                *buf.add(n) = 0;
            }
        }
        bytes.len()
    })
}

/// Opaque phase-space state handle.
pub struct EpsState {
    inner: EPSState,
}

/// Opaque distribution handle.
pub struct EpsDistribution {
    inner: QuasiDistribution,
}

fn build_params(m: f64, omega: f64, hbar: f64) -> OscillatorParams {
    OscillatorParams { m, omega, hbar }
}

fn build_state(
    spec: Result<WavefunctionSpec, Error>,
    half_width: f64,
    n: usize,
    t: f64,
    out: *mut *mut EpsState,
) -> EpsStatus {
    guarded(|| {
        let grid = PhaseSpaceGrid::square(half_width, n)?;
        let state = build_eps_state(&spec?, grid, t)?;
        unsafe { *out = Box::into_raw(Box::new(EpsState { inner: state })) };
        Ok(EpsStatus::Ok)
    })
}

/// Builds the oscillator level `n_level` on a square `[-half_width,
/// half_width]^2 grid` with `n` samples per axis, at time `t`.
///
/// # Safety
/// `out` must be a valid pointer to receive the handle.
#[no_mangle]
pub unsafe extern "C" fn eps_state_new_eigenstate(
    n_level: u32,
    m: f64,
    omega: f64,
    hbar: f64,
    half_width: f64,
    n: usize,
    t: f64,
    out: *mut *mut EpsState,
) -> EpsStatus {
    if out.is_null() {
        return null_pointer("out");
    }
    build_state(
        WavefunctionSpec::eigenstate(n_level, build_params(m, omega, hbar)),
        half_width,
        n,
        t,
        out,
    )
}

/// Builds a coherent state centered at `(q0, p0)`; see
/// [`eps_state_new_eigenstate`] for the grid arguments.
///
/// # Safety
/// `out` must be a valid pointer to receive the handle.
#[no_mangle]
pub unsafe extern "C" fn eps_state_new_coherent(
    q0: f64,
    p0: f64,
    m: f64,
    omega: f64,
    hbar: f64,
    half_width: f64,
    n: usize,
    t: f64,
    out: *mut *mut EpsState,
) -> EpsStatus {
    if out.is_null() {
        return null_pointer("out");
    }
    build_state(
        WavefunctionSpec::coherent(q0, p0, build_params(m, omega, hbar)),
        half_width,
        n,
        t,
        out,
    )
}

/// Releases a state handle.  NULL is accepted and ignored.
///
/// # Safety
/// `state` must have come from a constructor and not been freed before.
#[no_mangle]
pub unsafe extern "C" fn eps_state_free(state: *mut EpsState) {
    if !state.is_null() {
        drop(unsafe { Box::from_raw(state) });
    }
}

/// Reports the grid shape (`n_p` rows, `n_q` columns).
///
/// # Safety
/// All pointers must be valid or NULL (`out_*` may be NULL to skip).
#[no_mangle]
pub unsafe extern "C" fn eps_state_grid_shape(
    state: *const EpsState,
    out_n_p: *mut usize,
    out_n_q: *mut usize,
) -> EpsStatus {
    let Some(state) = (unsafe { state.as_ref() }) else {
        return null_pointer("state");
    };
    if !out_n_p.is_null() {
        unsafe { *out_n_p = state.inner.grid.n_p };
    }
    if !out_n_q.is_null() {
        unsafe { *out_n_q = state.inner.grid.n_q };
    }
    EpsStatus::Ok
}

/// Reads one complex sample of the state, row `ip` (momentum index) and
/// column `iq` (position index).
///
/// # Safety
/// Pointers must be valid; out-of-range indices are reported, not UB.
#[no_mangle]
pub unsafe extern "C" fn eps_state_chi_at(
    state: *const EpsState,
    ip: usize,
    iq: usize,
    out_re: *mut f64,
    out_im: *mut f64,
) -> EpsStatus {
    let Some(state) = (unsafe { state.as_ref() }) else {
        return null_pointer("state");
    };
    if out_re.is_null() || out_im.is_null() {
        return null_pointer("out_re/out_im");
    }
    let g = state.inner.grid;
    if ip >= g.n_p || iq >= g.n_q {
        set_error(&format!("index ({ip}, {iq}) outside the {}x{} grid", g.n_p, g.n_q));
        return EpsStatus::InvalidInput;
    }
    let v = state.inner.chi.values[[ip, iq]];
    unsafe {
        *out_re = v.re;
        *out_im = v.im;
    }
    EpsStatus::Ok
}

/// Averages a classical observable over the state.  `observable` is the
/// text form, e.g. `"q"`, `"p^2"`, or `"p^2/(2*m) + (k/2)*q^2"`.
///
/// # Safety
/// `observable` must be a NUL-terminated string; out pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn eps_state_expectation(
    state: *const EpsState,
    observable: *const c_char,
    out_re: *mut f64,
    out_im: *mut f64,
) -> EpsStatus {
    let Some(state) = (unsafe { state.as_ref() }) else {
        return null_pointer("state");
    };
    if observable.is_null() {
        return null_pointer("observable");
    }
    if out_re.is_null() || out_im.is_null() {
        return null_pointer("out_re/out_im");
    }
    guarded(|| {
        let text = unsafe { CStr::from_ptr(observable) }
            .to_str()
            .map_err(|_| Error::Config("observable text must be UTF-8".into()))?;
        let expr = parse_expr(text)?;
        let value = eps_expectation(&state.inner, &expr)?;
        unsafe {
            *out_re = value.re;
            *out_im = value.im;
        }
        Ok(EpsStatus::Ok)
    })
}

/// Maximum absolute residual of the stationary phase equation on the
/// state's support mask; small values certify the state solves it.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn eps_state_phase_equation_residual(
    state: *const EpsState,
    out_max_abs: *mut f64,
) -> EpsStatus {
    let Some(state) = (unsafe { state.as_ref() }) else {
        return null_pointer("state");
    };
    if out_max_abs.is_null() {
        return null_pointer("out_max_abs");
    }
    guarded(|| {
        let report = modified_hj_residual(
            &state.inner,
            PhaseRate::Stationary,
            DEFAULT_POLAR_THRESHOLD,
            DerivMethod::Spectral,
        )?;
        unsafe { *out_max_abs = report.max_abs };
        Ok(EpsStatus::Ok)
    })
}

/// Which distribution [`eps_distribution_new`] builds.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EpsDistributionKind {
    Wigner = 0,
    Husimi = 1,
    QFunction = 2,
}

/// Builds a distribution from the state's defining wavefunctions at the
/// state's own time.  `f` is the smoothing width for `Husimi`; pass any
/// value `<= 0` to use the matched width.  `Wigner` ignores `f` and
/// `QFunction` always uses the matched width.
///
/// # Safety
/// `out` must be a valid pointer to receive the handle.
#[no_mangle]
pub unsafe extern "C" fn eps_distribution_new(
    state: *const EpsState,
    kind: EpsDistributionKind,
    f: f64,
    out: *mut *mut EpsDistribution,
) -> EpsStatus {
    let Some(state) = (unsafe { state.as_ref() }) else {
        return null_pointer("state");
    };
    if out.is_null() {
        return null_pointer("out");
    }
    guarded(|| {
        let spec = &state.inner.spec;
        let wigner = build_wigner(spec, state.inner.grid, state.inner.t)?;
        let dist = match kind {
            EpsDistributionKind::Wigner => wigner,
            EpsDistributionKind::Husimi | EpsDistributionKind::QFunction => {
                let width = if kind == EpsDistributionKind::QFunction || f <= 0.0 {
                    spec.params.matched_f()?
                } else {
                    f
                };
                let smoothing = SmoothingParams::new(width)?;
                smooth_distribution(&wigner, smoothing, SmoothingRoute::Convolution)?.0
            }
        };
        unsafe { *out = Box::into_raw(Box::new(EpsDistribution { inner: dist })) };
        Ok(EpsStatus::Ok)
    })
}

/// Releases a distribution handle.  NULL is accepted and ignored.
///
/// # Safety
/// `dist` must have come from [`eps_distribution_new`] and not been freed.
#[no_mangle]
pub unsafe extern "C" fn eps_distribution_free(dist: *mut EpsDistribution) {
    if !dist.is_null() {
        drop(unsafe { Box::from_raw(dist) });
    }
}

/// Reads one sample of the distribution.
///
/// # Safety
/// Pointers must be valid; out-of-range indices are reported, not UB.
#[no_mangle]
pub unsafe extern "C" fn eps_distribution_value_at(
    dist: *const EpsDistribution,
    ip: usize,
    iq: usize,
    out_value: *mut f64,
) -> EpsStatus {
    let Some(dist) = (unsafe { dist.as_ref() }) else {
        return null_pointer("dist");
    };
    if out_value.is_null() {
        return null_pointer("out_value");
    }
    let g = dist.inner.field.grid;
    if ip >= g.n_p || iq >= g.n_q {
        set_error(&format!("index ({ip}, {iq}) outside the {}x{} grid", g.n_p, g.n_q));
        return EpsStatus::InvalidInput;
    }
    unsafe { *out_value = dist.inner.field.values[[ip, iq]] };
    EpsStatus::Ok
}

/// Minimum, maximum, and total mass of the distribution in one call.
///
/// # Safety
/// Pointers must be valid or NULL (NULL outputs are skipped).
#[no_mangle]
pub unsafe extern "C" fn eps_distribution_stats(
    dist: *const EpsDistribution,
    out_min: *mut f64,
    out_max: *mut f64,
    out_mass: *mut f64,
) -> EpsStatus {
    let Some(dist) = (unsafe { dist.as_ref() }) else {
        return null_pointer("dist");
    };
    guarded(|| {
        if !out_min.is_null() {
            unsafe { *out_min = dist.inner.field.min() };
        }
        if !out_max.is_null() {
            unsafe { *out_max = dist.inner.field.max() };
        }
        if !out_mass.is_null() {
            unsafe { *out_mass = integrate_2d(&dist.inner.field)? };
        }
        Ok(EpsStatus::Ok)
    })
}

/// Writes the exact conjugated-flow derivation (the generator with its
/// mixed correction in grouped form) into `buf`, NUL-terminated and
/// truncated to `len`.  Returns the status; the full length can be
/// obtained by calling with `buf = NULL` first via
/// [`eps_last_error_message`]-style sizing: the text is also stored as the
/// last "error" message on success for easy retrieval.
///
/// # Safety
/// `buf` must point to `len` writable bytes, or be NULL.
#[no_mangle]
pub unsafe extern "C" fn eps_algebra_smoothed_flow(buf: *mut c_char, len: usize) -> EpsStatus {
    guarded(|| {
        let expansion = smoothed_flow_generator()?;
        let text = format!(
            "{}\nterminated_at = {}",
            print_expr_grouped(&expansion.result),
            expansion.terminated_at
        );
        set_error(&text);
        if !buf.is_null() && len > 0 {
            let bytes = text.as_bytes();
            let n = bytes.len().min(len - 1);
            unsafe {
                ptr::copy_nonoverlapping(bytes.as_ptr() as *const c_char, buf, n);
                *buf.add(n) = 0;
            }
        }
        Ok(EpsStatus::Ok)
    })
}
