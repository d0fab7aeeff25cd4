//! C interface to `rwm-core`.
//!
//! Functions return an `RwmStatus`; results go through out-pointers. On any
//! status other than `RWM_STATUS_OK` a message is kept per thread and can be
//! read with `rwm_last_error_message`. Handles are opaque and must be
//! released with their `_free` function.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, c_void, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use rwm_core::analytics::{self, Expectation, LastReturnVariant};
use rwm_core::stats::{self, KsResult};
use rwm_core::walk::{self, ModificationParams, Trajectory};
use rwm_core::{limits, RwmError, SimRng};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RwmStatus {
    Ok = 0,
    InvalidArgument = 1,
    NullPointer = 2,
    Truncated = 3,
    SampleTooSmall = 4,
    BufferTooSmall = 5,
    Internal = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RwmLastReturnVariant {
    ExcursionDerived = 0,
    PaperDisplay = 1,
}

/// Kolmogorov-Smirnov outcome.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RwmKsResult {
    pub statistic: f64,
    pub n_effective: f64,
    pub p_value: f64,
}

/// Return structure of one run to the last visit of 0.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RwmReturnSummary {
    pub returns_count: u32,
    pub last_return: u64,
    pub truncation_bias_bound: f64,
    pub steps: u64,
}

/// Opaque generator handle (xoshiro256++).
pub struct RwmRng(SimRng);

/// Opaque walk path handle.
pub struct RwmTrajectory(Trajectory);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(err: &RwmError) -> RwmStatus {
    match err {
        RwmError::Truncated { .. } | RwmError::TruncationExceeded { .. } => RwmStatus::Truncated,
        RwmError::EmptySample | RwmError::TooFewSamples { .. } => RwmStatus::SampleTooSmall,
        RwmError::Io(_) | RwmError::Json(_) | RwmError::Replicate { .. } => RwmStatus::Internal,
        _ => RwmStatus::InvalidArgument,
    }
}

/// Runs `f`, turning errors and panics into a status plus thread-local message.
fn guard<F: FnOnce() -> Result<(), (RwmStatus, String)>>(f: F) -> RwmStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => RwmStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            RwmStatus::Internal
        }
    }
}

fn core<T>(r: rwm_core::Result<T>) -> Result<T, (RwmStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn invalid<T>(msg: &str) -> Result<T, (RwmStatus, String)> {
    Err((RwmStatus::InvalidArgument, msg.to_string()))
}

unsafe fn out<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, (RwmStatus, String)> {
    p.as_mut()
        .ok_or_else(|| (RwmStatus::NullPointer, format!("{name} is null")))
}

unsafe fn handle<'a, T>(p: *const T, name: &str) -> Result<&'a T, (RwmStatus, String)> {
    p.as_ref()
        .ok_or_else(|| (RwmStatus::NullPointer, format!("{name} is null")))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, name: &str) -> Result<&'a [T], (RwmStatus, String)> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err((RwmStatus::NullPointer, format!("{name} is null")));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

/// `visit_cap == 0` means uncapped.
fn params(delta: f64, visit_cap: u32) -> Result<ModificationParams, (RwmStatus, String)> {
    let p = core(ModificationParams::new(delta))?;
    if visit_cap == 0 {
        Ok(p)
    } else {
        core(p.with_cap(visit_cap))
    }
}

/// Message for the last failing call on this thread; empty if none.
/// Valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn rwm_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn rwm_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

#[no_mangle]
pub extern "C" fn rwm_derive_seed(master: u64, index: u64) -> u64 {
    rwm_core::derive_seed(master, index)
}

/// New generator seeded through SplitMix64. Free with `rwm_rng_free`.
#[no_mangle]
pub extern "C" fn rwm_rng_new(seed: u64) -> *mut RwmRng {
    Box::into_raw(Box::new(RwmRng(SimRng::from_seed(seed))))
}

#[no_mangle]
pub unsafe extern "C" fn rwm_rng_free(rng: *mut RwmRng) {
    if !rng.is_null() {
        drop(Box::from_raw(rng));
    }
}

#[no_mangle]
pub unsafe extern "C" fn rwm_rng_next_u64(rng: *mut RwmRng, value: *mut u64) -> RwmStatus {
    guard(|| {
        let r = out(rng, "rng")?;
        *out(value, "value")? = r.0.next_u64();
        Ok(())
    })
}

/// Uniform on `[0, 1)` with 53 random bits.
#[no_mangle]
pub unsafe extern "C" fn rwm_rng_uniform(rng: *mut RwmRng, value: *mut f64) -> RwmStatus {
    guard(|| {
        let r = out(rng, "rng")?;
        *out(value, "value")? = r.0.uniform();
        Ok(())
    })
}

/// Standard normal by inversion of one uniform.
#[no_mangle]
pub unsafe extern "C" fn rwm_rng_standard_normal(rng: *mut RwmRng, value: *mut f64) -> RwmStatus {
    guard(|| {
        let r = out(rng, "rng")?;
        *out(value, "value")? = r.0.standard_normal();
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn rwm_transition_probabilities(
    visits: u32,
    delta: f64,
    visit_cap: u32,
    p: *mut f64,
    q: *mut f64,
) -> RwmStatus {
    guard(|| {
        let params = params(delta, visit_cap)?;
        let (pp, qq) = walk::transition_probabilities(visits, &params);
        *out(p, "p")? = pp;
        *out(q, "q")? = qq;
        Ok(())
    })
}

/// Simulates `steps` steps from 0. Free the result with `rwm_trajectory_free`.
#[no_mangle]
pub unsafe extern "C" fn rwm_simulate_path(
    delta: f64,
    visit_cap: u32,
    steps: usize,
    rng: *mut RwmRng,
    trajectory: *mut *mut RwmTrajectory,
) -> RwmStatus {
    guard(|| {
        let params = params(delta, visit_cap)?;
        let r = out(rng, "rng")?;
        let slot = out(trajectory, "trajectory")?;
        let traj = core(walk::simulate_path(&params, steps, &mut r.0))?;
        *slot = Box::into_raw(Box::new(RwmTrajectory(traj)));
        Ok(())
    })
}

/// Builds a path from positions with unit steps.
#[no_mangle]
pub unsafe extern "C" fn rwm_trajectory_from_positions(
    positions: *const i32,
    len: usize,
    trajectory: *mut *mut RwmTrajectory,
) -> RwmStatus {
    guard(|| {
        let xs = slice(positions, len, "positions")?;
        let slot = out(trajectory, "trajectory")?;
        let traj = core(Trajectory::from_positions(xs.to_vec()))?;
        *slot = Box::into_raw(Box::new(RwmTrajectory(traj)));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn rwm_trajectory_free(trajectory: *mut RwmTrajectory) {
    if !trajectory.is_null() {
        drop(Box::from_raw(trajectory));
    }
}

/// Number of positions (steps + 1); 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn rwm_trajectory_len(trajectory: *const RwmTrajectory) -> usize {
    trajectory.as_ref().map_or(0, |t| t.0.positions.len())
}

/// Copies the positions into `buffer`, which must hold `rwm_trajectory_len` values.
#[no_mangle]
pub unsafe extern "C" fn rwm_trajectory_positions(
    trajectory: *const RwmTrajectory,
    buffer: *mut i32,
    capacity: usize,
) -> RwmStatus {
    guard(|| copy_out(&handle(trajectory, "trajectory")?.0.positions, buffer, capacity))
}

/// Copies the running visit counts into `buffer`.
#[no_mangle]
pub unsafe extern "C" fn rwm_trajectory_visits(
    trajectory: *const RwmTrajectory,
    buffer: *mut u32,
    capacity: usize,
) -> RwmStatus {
    guard(|| copy_out(&handle(trajectory, "trajectory")?.0.visits, buffer, capacity))
}

unsafe fn copy_out<T: Copy>(src: &[T], buffer: *mut T, capacity: usize) -> Result<(), (RwmStatus, String)> {
    if capacity < src.len() {
        return Err((
            RwmStatus::BufferTooSmall,
            format!("buffer holds {capacity} values, need {}", src.len()),
        ));
    }
    if buffer.is_null() {
        return Err((RwmStatus::NullPointer, "buffer is null".into()));
    }
    ptr::copy_nonoverlapping(src.as_ptr(), buffer, src.len());
    Ok(())
}

/// Likelihood ratio of the modified walk against the symmetric walk on `trajectory`.
#[no_mangle]
pub unsafe extern "C" fn rwm_discrete_density(
    trajectory: *const RwmTrajectory,
    delta: f64,
    visit_cap: u32,
    value: *mut f64,
) -> RwmStatus {
    guard(|| {
        let params = params(delta, visit_cap)?;
        let t = handle(trajectory, "trajectory")?;
        *out(value, "value")? = limits::discrete_density(&t.0, &params);
        Ok(())
    })
}

/// Runs from 0 until the walk stands `barrier` above 0 with `p > 1/2`.
/// Returns `RWM_STATUS_TRUNCATED` if `horizon_cap` steps pass first; the
/// summary then holds the partial statistics with bias bound 1.
#[no_mangle]
pub unsafe extern "C" fn rwm_simulate_to_last_return(
    delta: f64,
    barrier: u32,
    horizon_cap: u64,
    rng: *mut RwmRng,
    summary: *mut RwmReturnSummary,
) -> RwmStatus {
    guard(|| {
        let params = params(delta, 0)?;
        let r = out(rng, "rng")?;
        let slot = out(summary, "summary")?;
        let fill = |s: &walk::ReturnStatistics| RwmReturnSummary {
            returns_count: s.returns_count,
            last_return: s.last_return,
            truncation_bias_bound: s.truncation_bias_bound,
            steps: s.steps,
        };
        match walk::simulate_to_last_return(&params, barrier, horizon_cap, &mut r.0) {
            Ok(s) => {
                *slot = fill(&s);
                Ok(())
            }
            Err(RwmError::Truncated { horizon_cap, partial }) => {
                *slot = fill(&partial);
                Err((
                    RwmStatus::Truncated,
                    format!("horizon cap of {horizon_cap} steps reached before escape"),
                ))
            }
            Err(e) => core(Err(e)),
        }
    })
}

/// `P(R >= k)` for the returns count `R`.
#[no_mangle]
pub unsafe extern "C" fn rwm_returns_survival(k: u64, delta: f64, value: *mut f64) -> RwmStatus {
    guard(|| {
        params(delta, 0)?;
        *out(value, "value")? = analytics::returns_survival(k, delta);
        Ok(())
    })
}

#[no_mangle]
pub extern "C" fn rwm_rayleigh_cdf(x: f64) -> f64 {
    analytics::rayleigh_cdf(x)
}

#[no_mangle]
pub unsafe extern "C" fn rwm_slope_limit_cdf(x: f64, c: f64, value: *mut f64) -> RwmStatus {
    guard(|| {
        if !(c > 0.0 && c.is_finite()) {
            return invalid("c must be positive");
        }
        *out(value, "value")? = analytics::slope_limit_cdf(x, c);
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn rwm_return_time_transform(s: f64, p: f64, value: *mut f64) -> RwmStatus {
    guard(|| {
        if !(0.0..=1.0).contains(&s) || !(0.0..=1.0).contains(&p) {
            return invalid("s and p must lie in [0, 1]");
        }
        *out(value, "value")? = analytics::return_time_transform(s, p);
        Ok(())
    })
}

/// `E[tau; tau < inf]`. Sets `*finite` to false (and `*value` to +inf) at `p = 1/2`.
#[no_mangle]
pub unsafe extern "C" fn rwm_expected_return_time(p: f64, value: *mut f64, finite: *mut bool) -> RwmStatus {
    guard(|| {
        if !(0.0..=1.0).contains(&p) {
            return invalid("p must lie in [0, 1]");
        }
        let v = out(value, "value")?;
        let f = out(finite, "finite")?;
        match analytics::expected_return_time(p) {
            Expectation::Finite(x) => {
                *v = x;
                *f = true;
            }
            Expectation::Infinite => {
                *v = f64::INFINITY;
                *f = false;
            }
        }
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn rwm_expected_last_return(
    delta: f64,
    variant: RwmLastReturnVariant,
    value: *mut f64,
) -> RwmStatus {
    guard(|| {
        params(delta, 0)?;
        let v = match variant {
            RwmLastReturnVariant::ExcursionDerived => LastReturnVariant::ExcursionDerived,
            RwmLastReturnVariant::PaperDisplay => LastReturnVariant::PaperDisplay,
        };
        *out(value, "value")? = analytics::expected_last_return(delta, v);
        Ok(())
    })
}

fn ks_out(r: KsResult) -> RwmKsResult {
    RwmKsResult {
        statistic: r.statistic,
        n_effective: r.n_effective,
        p_value: r.p_value,
    }
}

#[no_mangle]
pub unsafe extern "C" fn rwm_ks_pvalue(d: f64, n_effective: f64, value: *mut f64) -> RwmStatus {
    guard(|| {
        if !(0.0..=1.0).contains(&d) || n_effective.is_nan() || n_effective <= 0.0 {
            return invalid("need d in [0, 1] and n_effective > 0");
        }
        *out(value, "value")? = stats::ks_pvalue(d, n_effective);
        Ok(())
    })
}

/// Distribution function callback for `rwm_ks_one_sample`.
pub type RwmCdf = Option<unsafe extern "C" fn(x: f64, user_data: *mut c_void) -> f64>;

#[no_mangle]
pub unsafe extern "C" fn rwm_ks_one_sample(
    samples: *const f64,
    len: usize,
    cdf: RwmCdf,
    user_data: *mut c_void,
    result: *mut RwmKsResult,
) -> RwmStatus {
    guard(|| {
        let xs = slice(samples, len, "samples")?;
        let Some(f) = cdf else {
            return Err((RwmStatus::NullPointer, "cdf is null".into()));
        };
        let slot = out(result, "result")?;
        *slot = ks_out(core(stats::ks_one_sample(xs, |x| unsafe { f(x, user_data) }))?);
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn rwm_ks_two_sample(
    a: *const f64,
    a_len: usize,
    b: *const f64,
    b_len: usize,
    result: *mut RwmKsResult,
) -> RwmStatus {
    guard(|| {
        let xa = slice(a, a_len, "a")?;
        let xb = slice(b, b_len, "b")?;
        let slot = out(result, "result")?;
        *slot = ks_out(core(stats::ks_two_sample(xa, xb))?);
        Ok(())
    })
}
