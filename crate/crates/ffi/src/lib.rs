//! C ABI for `sausage-core`.
//!
//! Conventions:
//!
//! * every fallible function returns a [`SausageStatus`] and writes its
//!   result through an out-pointer; on failure the out-pointer is untouched
//!   and [`sausage_last_error`] describes the problem,
//! * objects cross the boundary as opaque handles created by a
//!   `sausage_*_new`/`sausage_*_sample` function and released by the
//!   matching `sausage_*_free`,
//! * panics never unwind into C; they surface as `SAUSAGE_STATUS_PANIC`.
//!
//! The error string is thread-local and stays valid until the next failing
//! call on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use sausage_core::analytic::{self, BoundParams};
use sausage_core::cli::{self, ExperimentConfig};
use sausage_core::estimators::naive_mc;
use sausage_core::paths::{sample_path, PathSample};
use sausage_core::rng::{domain, StreamId};
use sausage_core::sausage::{cover_intervals, IntervalUnion, SausageParams};
use sausage_core::wos::{wos_estimate, WosConfig};
use sausage_core::{Error, Point};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SausageStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    Numerical = 3,
    Config = 4,
    Io = 5,
    Panic = 6,
}

/// Opaque sampled path.
pub struct SausagePath(PathSample);

/// Opaque union of disjoint subintervals of `[0, 1]`.
pub struct SausageUnion(IntervalUnion);

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SausageEstimate {
    pub mean: f64,
    /// Named to avoid the `stderr` macro of `<stdio.h>`.
    pub std_error: f64,
    pub n: u64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SausageBounds {
    pub upper: f64,
    pub lower: f64,
    pub upper_measure: f64,
    pub lower_measure: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).expect("nul bytes removed"));
}

fn status_of(e: &Error) -> SausageStatus {
    match e {
        Error::InvalidInput { .. } => SausageStatus::InvalidInput,
        Error::Numerical { .. } => SausageStatus::Numerical,
        Error::Config { .. } => SausageStatus::Config,
        Error::Io { .. } | Error::Serde(_) => SausageStatus::Io,
    }
}

enum Failure {
    Null(&'static str),
    Core(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> SausageStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SausageStatus::Ok,
        Ok(Err(Failure::Null(name))) => {
            set_error(format!("null pointer passed as `{name}`"));
            SausageStatus::NullPointer
        }
        Ok(Err(Failure::Core(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("internal panic: {msg}"));
            SausageStatus::Panic
        }
    }
}

fn out<'a, T>(p: *mut T, name: &'static str) -> Result<&'a mut T, Failure> {
    // SAFETY: the caller promises `p` is null or valid for writes.
    unsafe { p.as_mut() }.ok_or(Failure::Null(name))
}

fn handle<'a, T>(p: *const T, name: &'static str) -> Result<&'a T, Failure> {
    // SAFETY: the caller promises `p` is null or a live handle from this library.
    unsafe { p.as_ref() }.ok_or(Failure::Null(name))
}

fn estimate(e: &sausage_core::Estimate) -> SausageEstimate {
    SausageEstimate {
        mean: e.mean,
        std_error: e.stderr,
        n: e.n,
    }
}

/// The message of the last failure on this thread; empty if none. Owned by
/// the library.
#[no_mangle]
pub extern "C" fn sausage_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version, a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn sausage_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Probability that planar Brownian motion from radius `z` hits radius `a` before `b`.
#[no_mangle]
pub extern "C" fn sausage_annulus_hit_prob(z: f64, a: f64, b: f64, result: *mut f64) -> SausageStatus {
    guard(|| {
        let r = out(result, "result")?;
        *r = analytic::annulus_hit_prob(z, a, b)?;
        Ok(())
    })
}

/// Probability that one-dimensional Brownian motion from `y` leaves `[lo, hi]` through `lo`.
#[no_mangle]
pub extern "C" fn sausage_exit_below_prob(y: f64, lo: f64, hi: f64, result: *mut f64) -> SausageStatus {
    guard(|| {
        let r = out(result, "result")?;
        *r = analytic::exit_below_prob(y, lo, hi)?;
        Ok(())
    })
}

/// `P[|c + σZ| ≤ r]` for a standard planar Gaussian `Z` and `|c| = center_dist`.
#[no_mangle]
pub extern "C" fn sausage_gaussian_disk_prob(
    center_dist: f64,
    sigma: f64,
    radius: f64,
    result: *mut f64,
) -> SausageStatus {
    guard(|| {
        let r = out(result, "result")?;
        *r = analytic::gaussian_disk_prob(center_dist, sigma, radius)?;
        Ok(())
    })
}

#[no_mangle]
pub extern "C" fn sausage_theorem1_bounds(
    epsilon: f64,
    theta: f64,
    c1: f64,
    c2: f64,
    c3: f64,
    c4: f64,
    result: *mut SausageBounds,
) -> SausageStatus {
    guard(|| {
        let r = out(result, "result")?;
        let b = analytic::theorem1_bounds(epsilon, theta, &BoundParams::new(c1, c2, c3, c4)?)?;
        *r = SausageBounds {
            upper: b.upper,
            lower: b.lower,
            upper_measure: b.upper_measure,
            lower_measure: b.lower_measure,
        };
        Ok(())
    })
}

/// Samples a Brownian path from the origin on stream `(seed, index)`.
/// Release with [`sausage_path_free`].
#[no_mangle]
pub extern "C" fn sausage_path_sample(
    dt: f64,
    duration: f64,
    seed: u64,
    index: u64,
    path: *mut *mut SausagePath,
) -> SausageStatus {
    guard(|| {
        let slot = out(path, "path")?;
        let mut stream = StreamId::new(seed, domain::PATH, index).stream();
        let p = sample_path(dt, duration, &mut stream)?;
        *slot = Box::into_raw(Box::new(SausagePath(p)));
        Ok(())
    })
}

/// Builds a path from `len` points with time step `dt`.
///
/// # Safety
/// `xs` and `ys` must each point to `len` readable doubles.
#[no_mangle]
pub unsafe extern "C" fn sausage_path_from_points(
    dt: f64,
    xs: *const f64,
    ys: *const f64,
    len: usize,
    path: *mut *mut SausagePath,
) -> SausageStatus {
    guard(|| {
        let slot = out(path, "path")?;
        if len > 0 && xs.is_null() {
            return Err(Failure::Null("xs"));
        }
        if len > 0 && ys.is_null() {
            return Err(Failure::Null("ys"));
        }
        let points = if len == 0 {
            Vec::new()
        } else {
            // SAFETY: non-null and `len` long per the contract above.
            let (xs, ys) = unsafe { (std::slice::from_raw_parts(xs, len), std::slice::from_raw_parts(ys, len)) };
            xs.iter().zip(ys).map(|(&x, &y)| Point::new(x, y)).collect()
        };
        let p = PathSample::new(dt, points, None)?;
        *slot = Box::into_raw(Box::new(SausagePath(p)));
        Ok(())
    })
}

/// Number of points of `path`, or 0 for a null handle.
#[no_mangle]
pub extern "C" fn sausage_path_len(path: *const SausagePath) -> usize {
    handle(path, "path").map_or(0, |p| p.0.len())
}

#[no_mangle]
pub extern "C" fn sausage_path_dt(path: *const SausagePath) -> f64 {
    handle(path, "path").map_or(f64::NAN, |p| p.0.dt)
}

/// Copies up to `capacity` points into `xs`/`ys` and stores the count copied in `written`.
///
/// # Safety
/// `xs` and `ys` must each be writable for `capacity` doubles.
#[no_mangle]
pub unsafe extern "C" fn sausage_path_points(
    path: *const SausagePath,
    xs: *mut f64,
    ys: *mut f64,
    capacity: usize,
    written: *mut usize,
) -> SausageStatus {
    guard(|| {
        let p = handle(path, "path")?;
        let w = out(written, "written")?;
        let k = capacity.min(p.0.len());
        if k > 0 && (xs.is_null() || ys.is_null()) {
            return Err(Failure::Null(if xs.is_null() { "xs" } else { "ys" }));
        }
        for (i, pt) in p.0.points.iter().take(k).enumerate() {
            // SAFETY: `i < capacity` and both buffers hold `capacity` doubles.
            unsafe {
                *xs.add(i) = pt.x;
                *ys.add(i) = pt.y;
            }
        }
        *w = k;
        Ok(())
    })
}

/// Releases a path handle; null is ignored.
///
/// # Safety
/// `path` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sausage_path_free(path: *mut SausagePath) {
    if !path.is_null() {
        // SAFETY: created by `Box::into_raw` in this library.
        drop(unsafe { Box::from_raw(path) });
    }
}

/// The part of `[0,1]×{0}` within `epsilon` of the polyline `path`.
/// Release with [`sausage_union_free`].
#[no_mangle]
pub extern "C" fn sausage_cover_intervals(
    path: *const SausagePath,
    epsilon: f64,
    result: *mut *mut SausageUnion,
) -> SausageStatus {
    guard(|| {
        let p = handle(path, "path")?;
        let slot = out(result, "result")?;
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(Error::InvalidInput {
                field: "epsilon",
                reason: "must be positive".into(),
            }
            .into());
        }
        *slot = Box::into_raw(Box::new(SausageUnion(cover_intervals(&p.0, epsilon, None))));
        Ok(())
    })
}

/// Total length of the union, or NaN for a null handle.
#[no_mangle]
pub extern "C" fn sausage_union_measure(union: *const SausageUnion) -> f64 {
    handle(union, "union").map_or(f64::NAN, |u| u.0.measure())
}

#[no_mangle]
pub extern "C" fn sausage_union_count(union: *const SausageUnion) -> usize {
    handle(union, "union").map_or(0, |u| u.0.intervals().len())
}

/// Endpoints of interval `k` (in increasing order).
#[no_mangle]
pub extern "C" fn sausage_union_get(
    union: *const SausageUnion,
    k: usize,
    lo: *mut f64,
    hi: *mut f64,
) -> SausageStatus {
    guard(|| {
        let u = handle(union, "union")?;
        let &(a, b) = u.0.intervals().get(k).ok_or_else(|| Error::InvalidInput {
            field: "k",
            reason: format!("index {k} out of range for {} intervals", u.0.intervals().len()),
        })?;
        *out(lo, "lo")? = a;
        *out(hi, "hi")? = b;
        Ok(())
    })
}

/// # Safety
/// `union` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sausage_union_free(union: *mut SausageUnion) {
    if !union.is_null() {
        // SAFETY: created by `Box::into_raw` in this library.
        drop(unsafe { Box::from_raw(union) });
    }
}

/// Walk-on-spheres estimate of the probability that Brownian motion from
/// `(x, y)` hits the `epsilon`-ball at `(alpha, 0)` before leaving the strip `|y| < 1`.
#[no_mangle]
pub extern "C" fn sausage_wos_estimate(
    x: f64,
    y: f64,
    alpha: f64,
    epsilon: f64,
    n_walks: u64,
    seed: u64,
    result: *mut SausageEstimate,
) -> SausageStatus {
    guard(|| {
        let r = out(result, "result")?;
        let cfg = WosConfig::new(epsilon, n_walks);
        let mut stream = StreamId::new(seed, domain::WOS, 0).stream();
        let w = wos_estimate(Point::new(x, y), alpha, &cfg, &mut stream)?;
        *r = estimate(&w.estimate);
        Ok(())
    })
}

/// Direct Monte Carlo of `P[covers]` and `P[Ξ ≥ θ]`.
#[no_mangle]
pub extern "C" fn sausage_naive_mc(
    epsilon: f64,
    theta: f64,
    n: u64,
    dt: f64,
    seed: u64,
    p_cover: *mut SausageEstimate,
    p_theta: *mut SausageEstimate,
) -> SausageStatus {
    guard(|| {
        let c = out(p_cover, "p_cover")?;
        let t = out(p_theta, "p_theta")?;
        let r = naive_mc(&SausageParams::new(epsilon, theta, 0.0)?, n, dt, seed)?;
        *c = estimate(&r.p_cover);
        *t = estimate(&r.p_theta);
        Ok(())
    })
}

/// Runs the TOML configuration at `config_path` like `sausage run`.
/// `exit_code` receives the command-line exit code (0, 3 or 4).
///
/// # Safety
/// `config_path` must be a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn sausage_run_config(config_path: *const c_char, exit_code: *mut i32) -> SausageStatus {
    guard(|| {
        if config_path.is_null() {
            return Err(Failure::Null("config_path"));
        }
        let code = out(exit_code, "exit_code")?;
        // SAFETY: non-null and NUL-terminated per the contract above.
        let s = unsafe { CStr::from_ptr(config_path) }.to_str().map_err(|_| Error::Config {
            field: "config_path".into(),
            reason: "not valid UTF-8".into(),
        })?;
        let cfg = ExperimentConfig::from_path(Path::new(s))?;
        *code = cli::run(&cfg)?.exit_code();
        Ok(())
    })
}
