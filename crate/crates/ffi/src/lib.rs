//! C interface to the `antilop` solvers.
//!
//! Matrices and results are opaque handles owned by the caller and released
//! with the matching `*_free` function. Every fallible call returns an
//! [`AntilopStatus`]; on failure the message is available from
//! [`antilop_last_error`] on the same thread until the next failing call.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{self, AssertUnwindSafe};
use std::ptr;
use std::time::Duration;

use antilop::bench::Algorithm;
use antilop::error::Error;
use antilop::linalg::{DenseMatrix, Vector};
use antilop::nnls::NnlsResult;
use antilop::nqp::{SolverConfig, Termination};

/// Dense column-major matrix.
pub struct AntilopMatrix(DenseMatrix);

/// Outcome of a solve.
pub struct AntilopResult(NnlsResult);

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AntilopStatus {
    Ok = 0,
    NullPointer = 1,
    Dimension = 2,
    NonFinite = 3,
    InvalidArgument = 4,
    Singular = 5,
    NumericFailure = 6,
    Io = 7,
    Parse = 8,
    Panic = 9,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AntilopAlgorithm {
    /// Cosine-rescaled exact-line-search projected gradient.
    Antilop = 0,
    /// Lawson–Hanson active set.
    Fast = 1,
    /// Projected Nesterov on the unscaled system.
    Accer = 2,
    /// Projected Nesterov on the rescaled system.
    AntiAccer = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AntilopTermination {
    EmptyPassiveSet = 0,
    GradientBelowEpsilon = 1,
    MaxIters = 2,
    TimeCap = 3,
    Stalled = 4,
    ZeroCurvature = 5,
}

/// Solver limits. `time_cap_secs <= 0` disables the wall-clock cap and
/// `stall_window == 0` disables stall detection.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AntilopConfig {
    pub epsilon: f64,
    pub max_iters: usize,
    pub time_cap_secs: f64,
    pub stall_window: usize,
    pub restart: bool,
}

impl From<AntilopAlgorithm> for Algorithm {
    fn from(a: AntilopAlgorithm) -> Self {
        match a {
            AntilopAlgorithm::Antilop => Algorithm::Antilop,
            AntilopAlgorithm::Fast => Algorithm::Fast,
            AntilopAlgorithm::Accer => Algorithm::Accer,
            AntilopAlgorithm::AntiAccer => Algorithm::AntiAccer,
        }
    }
}

impl From<Termination> for AntilopTermination {
    fn from(t: Termination) -> Self {
        match t {
            Termination::EmptyPassiveSet => AntilopTermination::EmptyPassiveSet,
            Termination::GradientBelowEpsilon => AntilopTermination::GradientBelowEpsilon,
            Termination::MaxIters => AntilopTermination::MaxIters,
            Termination::TimeCap => AntilopTermination::TimeCap,
            Termination::Stalled => AntilopTermination::Stalled,
            Termination::ZeroCurvature => AntilopTermination::ZeroCurvature,
        }
    }
}

impl From<&SolverConfig> for AntilopConfig {
    fn from(c: &SolverConfig) -> Self {
        AntilopConfig {
            epsilon: c.epsilon,
            max_iters: c.max_iters,
            time_cap_secs: c.time_cap.map_or(0.0, |d| d.as_secs_f64()),
            stall_window: c.stall_window,
            restart: c.restart,
        }
    }
}

impl AntilopConfig {
    fn to_solver(self, n: usize) -> Result<SolverConfig, Failure> {
        let time_cap = if self.time_cap_secs > 0.0 {
            Some(Duration::try_from_secs_f64(self.time_cap_secs).map_err(|e| Failure::new(AntilopStatus::InvalidArgument, e))?)
        } else if self.time_cap_secs.is_nan() {
            return Err(Failure::new(AntilopStatus::InvalidArgument, "time cap is NaN"));
        } else {
            None
        };
        let mut cfg = SolverConfig::for_dimension(n)
            .with_epsilon(self.epsilon)
            .with_max_iters(self.max_iters)
            .with_stall_window(self.stall_window)
            .with_time_cap(time_cap);
        cfg.restart = self.restart;
        Ok(cfg)
    }
}

struct Failure {
    status: AntilopStatus,
    message: String,
}

impl Failure {
    fn new(status: AntilopStatus, message: impl ToString) -> Self {
        Failure {
            status,
            message: message.to_string(),
        }
    }

    fn null(what: &str) -> Self {
        Failure::new(AntilopStatus::NullPointer, format!("{what} is null"))
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Dimension(_) | Error::IndexOutOfRange { .. } => AntilopStatus::Dimension,
            Error::NonFinite { .. } => AntilopStatus::NonFinite,
            Error::InvalidArgument(_) | Error::NegativeDiagonal { .. } => AntilopStatus::InvalidArgument,
            Error::Singular { .. } => AntilopStatus::Singular,
            Error::NumericFailure { .. } => AntilopStatus::NumericFailure,
            Error::Io { .. } => AntilopStatus::Io,
            Error::Parse { .. } | Error::Json(_) => AntilopStatus::Parse,
        };
        Failure::new(status, e)
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> AntilopStatus {
    match panic::catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => AntilopStatus::Ok,
        Ok(Err(fail)) => {
            set_last_error(fail.message);
            fail.status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("panic: {msg}"));
            AntilopStatus::Panic
        }
    }
}

unsafe fn slice<'a>(data: *const f64, len: usize, what: &str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if data.is_null() {
        return Err(Failure::null(what));
    }
    Ok(std::slice::from_raw_parts(data, len))
}

unsafe fn out_ptr<'a, T>(out: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    out.as_mut().ok_or_else(|| Failure::null(what))
}

/// Message for the most recent failure on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn antilop_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn antilop_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies `rows * cols` column-major values into a new matrix.
///
/// # Safety
/// `data` must point to `rows * cols` readable doubles and `out` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn antilop_matrix_new(rows: usize, cols: usize, data: *const f64, out: *mut *mut AntilopMatrix) -> AntilopStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = ptr::null_mut();
        let len = rows
            .checked_mul(cols)
            .ok_or_else(|| Failure::new(AntilopStatus::Dimension, "rows * cols overflows"))?;
        let m = DenseMatrix::from_col_major(rows, cols, slice(data, len, "data")?.to_vec())?;
        *out = Box::into_raw(Box::new(AntilopMatrix(m)));
        Ok(())
    })
}

/// Reads a MatrixMarket (`.mtx`) or CSV file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn antilop_matrix_read(path: *const c_char, out: *mut *mut AntilopMatrix) -> AntilopStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = ptr::null_mut();
        if path.is_null() {
            return Err(Failure::null("path"));
        }
        let path = CStr::from_ptr(path)
            .to_str()
            .map_err(|e| Failure::new(AntilopStatus::InvalidArgument, format!("path is not UTF-8: {e}")))?;
        let m = antilop::io::read_matrix(path)?;
        *out = Box::into_raw(Box::new(AntilopMatrix(m)));
        Ok(())
    })
}

/// # Safety
/// `m` must be null or a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn antilop_matrix_rows(m: *const AntilopMatrix) -> usize {
    m.as_ref().map_or(0, |m| m.0.rows())
}

/// # Safety
/// `m` must be null or a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn antilop_matrix_cols(m: *const AntilopMatrix) -> usize {
    m.as_ref().map_or(0, |m| m.0.cols())
}

/// # Safety
/// `m` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn antilop_matrix_free(m: *mut AntilopMatrix) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Default limits for an `n`-column problem.
#[no_mangle]
pub extern "C" fn antilop_config_default(n: usize) -> AntilopConfig {
    AntilopConfig::from(&SolverConfig::for_dimension(n))
}

/// Solves `min ½‖Ax − b‖²` subject to `x ≥ 0`. `config` may be null for the
/// defaults.
///
/// # Safety
/// `a` must be a live matrix handle, `b` must point to `b_len` doubles,
/// `config` must be null or valid, and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn antilop_solve(
    algorithm: AntilopAlgorithm,
    a: *const AntilopMatrix,
    b: *const f64,
    b_len: usize,
    config: *const AntilopConfig,
    out: *mut *mut AntilopResult,
) -> AntilopStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = ptr::null_mut();
        let a = &a.as_ref().ok_or_else(|| Failure::null("a"))?.0;
        let b = Vector::new(slice(b, b_len, "b")?.to_vec())?;
        let cfg = match config.as_ref() {
            Some(c) => c.to_solver(a.cols())?,
            None => SolverConfig::for_dimension(a.cols()),
        };
        let r = Algorithm::from(algorithm).solve(a, &b, &cfg)?;
        *out = Box::into_raw(Box::new(AntilopResult(r)));
        Ok(())
    })
}

/// Number of entries in the solution.
///
/// # Safety
/// `r` must be null or a live result handle.
#[no_mangle]
pub unsafe extern "C" fn antilop_result_len(r: *const AntilopResult) -> usize {
    r.as_ref().map_or(0, |r| r.0.x.len())
}

/// Copies the solution into `x`, which must hold `len` doubles with `len`
/// equal to [`antilop_result_len`].
///
/// # Safety
/// `r` must be a live result handle and `x` must point to `len` writable
/// doubles.
#[no_mangle]
pub unsafe extern "C" fn antilop_result_x(r: *const AntilopResult, x: *mut f64, len: usize) -> AntilopStatus {
    guard(|| {
        let r = &r.as_ref().ok_or_else(|| Failure::null("result"))?.0;
        if len != r.x.len() {
            return Err(Failure::new(
                AntilopStatus::Dimension,
                format!("buffer holds {len} values, solution has {}", r.x.len()),
            ));
        }
        if len > 0 {
            if x.is_null() {
                return Err(Failure::null("x"));
            }
            std::slice::from_raw_parts_mut(x, len).copy_from_slice(r.x.as_slice());
        }
        Ok(())
    })
}

/// `½‖Ax − b‖²`, or NaN for a null handle.
///
/// # Safety
/// `r` must be null or a live result handle.
#[no_mangle]
pub unsafe extern "C" fn antilop_result_objective(r: *const AntilopResult) -> f64 {
    r.as_ref().map_or(f64::NAN, |r| r.0.objective())
}

/// `‖Ax − b‖²`, or NaN for a null handle.
///
/// # Safety
/// `r` must be null or a live result handle.
#[no_mangle]
pub unsafe extern "C" fn antilop_result_residual_sq(r: *const AntilopResult) -> f64 {
    r.as_ref().map_or(f64::NAN, |r| r.0.residual_sq)
}

/// # Safety
/// `r` must be null or a live result handle.
#[no_mangle]
pub unsafe extern "C" fn antilop_result_iterations(r: *const AntilopResult) -> usize {
    r.as_ref().map_or(0, |r| r.0.iterations())
}

/// # Safety
/// `r` must be a live result handle and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn antilop_result_termination(r: *const AntilopResult, out: *mut AntilopTermination) -> AntilopStatus {
    guard(|| {
        let r = &r.as_ref().ok_or_else(|| Failure::null("result"))?.0;
        *out_ptr(out, "out")? = r.termination().into();
        Ok(())
    })
}

/// # Safety
/// `r` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn antilop_result_free(r: *mut AntilopResult) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}
