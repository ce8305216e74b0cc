//! C ABI over `sgeo-core`.
//!
//! Objectives and results are opaque heap handles owned by the caller and
//! released with the matching `*_free` function. Every fallible call returns an
//! [`SgeoStatus`]; the message of the most recent failure on the calling thread
//! is available through [`sgeo_last_error_message`]. Panics never cross the
//! boundary and are reported as [`SgeoStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, c_void, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sgeo_core::benchfn::{by_name, BenchmarkSpec};
use sgeo_core::objective::central_difference;
use sgeo_core::qn::{maximize_local, QnSettings};
use sgeo_core::sgeo::{default_config, run_sgeo, SgeoConfig, SgeoResult};
use sgeo_core::{Error, Objective, ObjectiveHandle};

/// Status codes returned by every fallible entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SgeoStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    NumericalDegeneracy = 4,
    NumericalOverflow = 5,
    NonFiniteStart = 6,
    UnknownFunction = 7,
    Config = 8,
    Io = 9,
    Panic = 10,
}

impl From<&Error> for SgeoStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::InvalidArgument(_) => SgeoStatus::InvalidArgument,
            Error::DimensionMismatch { .. } => SgeoStatus::DimensionMismatch,
            Error::NumericalDegeneracy(_) => SgeoStatus::NumericalDegeneracy,
            Error::NumericalOverflow(_) => SgeoStatus::NumericalOverflow,
            Error::NonFiniteStart => SgeoStatus::NonFiniteStart,
            Error::UnknownFunction(_) => SgeoStatus::UnknownFunction,
            Error::Config(_) => SgeoStatus::Config,
            Error::Io(_) => SgeoStatus::Io,
        }
    }
}

/// Objective value callback: `phi(x)` for `x` of length `dim`.
pub type SgeoValueFn =
    Option<unsafe extern "C" fn(x: *const f64, dim: usize, user_data: *mut c_void) -> f64>;

/// Gradient callback writing `dim` entries to `grad_out`.
pub type SgeoGradientFn = Option<
    unsafe extern "C" fn(x: *const f64, dim: usize, grad_out: *mut f64, user_data: *mut c_void),
>;

struct Callbacks {
    dim: usize,
    value: unsafe extern "C" fn(*const f64, usize, *mut c_void) -> f64,
    gradient: SgeoGradientFn,
    user_data: *mut c_void,
}

impl Objective for Callbacks {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64]) -> f64 {
        unsafe { (self.value)(x.as_ptr(), x.len(), self.user_data) }
    }

    fn gradient(&self, x: &[f64], grad: &mut [f64]) {
        match self.gradient {
            Some(g) => unsafe { g(x.as_ptr(), x.len(), grad.as_mut_ptr(), self.user_data) },
            None => central_difference(|p| self.value(p), x, grad),
        }
    }
}

enum Inner {
    Benchmark(BenchmarkSpec),
    Callbacks(Callbacks),
}

/// Opaque objective handle.
pub struct SgeoObjective {
    inner: Inner,
}

impl SgeoObjective {
    fn as_objective(&self) -> &dyn Objective {
        match &self.inner {
            Inner::Benchmark(b) => b,
            Inner::Callbacks(c) => c,
        }
    }
}

/// Opaque result of a driver run.
pub struct SgeoRunResult {
    result: SgeoResult,
}

/// Driver parameters. Obtain defaults with [`sgeo_default_config`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct SgeoRunConfig {
    pub runs: usize,
    pub alpha: f64,
    pub total_steps: usize,
    pub dt_lb0: f64,
    pub qn_interval: usize,
    pub use_qn: bool,
    pub tol_f: f64,
    pub qn_max_iter: usize,
    pub qn_tol_f: f64,
    pub qn_tol_x: f64,
    /// Steps per run; 0 derives it from `total_steps / runs`.
    pub steps_override: usize,
    pub jump: bool,
    pub oscillation_check: bool,
}

impl From<&SgeoConfig> for SgeoRunConfig {
    fn from(c: &SgeoConfig) -> Self {
        Self {
            runs: c.runs,
            alpha: c.alpha,
            total_steps: c.total_steps,
            dt_lb0: c.dt_lb0,
            qn_interval: c.qn_interval,
            use_qn: c.use_qn,
            tol_f: c.tol_f,
            qn_max_iter: c.qn.max_iter,
            qn_tol_f: c.qn.tol_f,
            qn_tol_x: c.qn.tol_x,
            steps_override: c.steps_override.unwrap_or(0),
            jump: c.jump,
            oscillation_check: c.oscillation_check,
        }
    }
}

impl From<&SgeoRunConfig> for SgeoConfig {
    fn from(c: &SgeoRunConfig) -> Self {
        Self {
            runs: c.runs,
            alpha: c.alpha,
            total_steps: c.total_steps,
            dt_lb0: c.dt_lb0,
            qn_interval: c.qn_interval,
            use_qn: c.use_qn,
            tol_f: c.tol_f,
            qn: QnSettings {
                max_iter: c.qn_max_iter,
                tol_f: c.qn_tol_f,
                tol_x: c.qn_tol_x,
            },
            steps_override: (c.steps_override > 0).then_some(c.steps_override),
            jump: c.jump,
            oscillation_check: c.oscillation_check,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn guard<F: FnOnce() -> Result<(), SgeoStatus>>(f: F) -> SgeoStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SgeoStatus::Ok,
        Ok(Err(s)) => s,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("panic: {msg}"));
            SgeoStatus::Panic
        }
    }
}

fn fail(e: Error) -> SgeoStatus {
    let status = SgeoStatus::from(&e);
    set_error(e.to_string());
    status
}

fn null(what: &str) -> SgeoStatus {
    set_error(format!("null pointer: {what}"));
    SgeoStatus::NullPointer
}

unsafe fn slice_arg<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], SgeoStatus> {
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn ref_arg<'a, T>(p: *const T, what: &str) -> Result<&'a T, SgeoStatus> {
    p.as_ref().ok_or_else(|| null(what))
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length excluding the NUL.
///
/// # Safety
/// `buf` must be null or valid for `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn sgeo_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr(), buf as *mut u8, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Creates an objective from C callbacks. `gradient` may be null, in which
/// case central differences are used. `user_data` is passed through untouched
/// and must outlive the handle.
///
/// # Safety
/// `out` must be valid for writes; the callbacks must be safe to call with
/// `dim`-length buffers for the lifetime of the handle.
#[no_mangle]
pub unsafe extern "C" fn sgeo_objective_from_callbacks(
    dim: usize,
    value: SgeoValueFn,
    gradient: SgeoGradientFn,
    user_data: *mut c_void,
    out: *mut *mut SgeoObjective,
) -> SgeoStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let Some(value) = value else {
            return Err(null("value"));
        };
        if dim == 0 {
            return Err(fail(Error::InvalidArgument("dim must be positive".into())));
        }
        let obj = SgeoObjective {
            inner: Inner::Callbacks(Callbacks {
                dim,
                value,
                gradient,
                user_data,
            }),
        };
        *out = Box::into_raw(Box::new(obj));
        Ok(())
    })
}

/// Creates an objective for a named suite benchmark.
///
/// # Safety
/// `name` must be a NUL-terminated string and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sgeo_objective_from_benchmark(
    name: *const c_char,
    out: *mut *mut SgeoObjective,
) -> SgeoStatus {
    guard(|| {
        if name.is_null() {
            return Err(null("name"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let name = CStr::from_ptr(name)
            .to_str()
            .map_err(|_| fail(Error::InvalidArgument("name is not UTF-8".into())))?;
        let spec = by_name(name).map_err(fail)?;
        *out = Box::into_raw(Box::new(SgeoObjective {
            inner: Inner::Benchmark(spec),
        }));
        Ok(())
    })
}

/// Dimension of the objective, or 0 for a null handle.
///
/// # Safety
/// `obj` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sgeo_objective_dim(obj: *const SgeoObjective) -> usize {
    obj.as_ref().map_or(0, |o| o.as_objective().dim())
}

/// Writes the search box and known maximum of a benchmark objective. Fails
/// with `InvalidArgument` for callback objectives. `known_max` may be null.
///
/// # Safety
/// `lower` and `upper` must be valid for `dim` writes.
#[no_mangle]
pub unsafe extern "C" fn sgeo_objective_bounds(
    obj: *const SgeoObjective,
    lower: *mut f64,
    upper: *mut f64,
    known_max: *mut f64,
) -> SgeoStatus {
    guard(|| {
        let obj = ref_arg(obj, "obj")?;
        let Inner::Benchmark(spec) = &obj.inner else {
            return Err(fail(Error::InvalidArgument(
                "callback objectives have no bounds".into(),
            )));
        };
        if lower.is_null() || upper.is_null() {
            return Err(null("lower/upper"));
        }
        ptr::copy_nonoverlapping(spec.lower.as_ptr(), lower, spec.dimension);
        ptr::copy_nonoverlapping(spec.upper.as_ptr(), upper, spec.dimension);
        if !known_max.is_null() {
            *known_max = spec.known_max;
        }
        Ok(())
    })
}

/// Evaluates the objective and, if `grad_out` is non-null, its gradient.
///
/// # Safety
/// `x` must hold `dim` values, `grad_out` must be null or hold `dim` slots.
#[no_mangle]
pub unsafe extern "C" fn sgeo_objective_eval(
    obj: *const SgeoObjective,
    x: *const f64,
    phi_out: *mut f64,
    grad_out: *mut f64,
) -> SgeoStatus {
    guard(|| {
        let obj = ref_arg(obj, "obj")?.as_objective();
        let x = slice_arg(x, obj.dim(), "x")?;
        if phi_out.is_null() {
            return Err(null("phi_out"));
        }
        *phi_out = obj.value(x);
        if !grad_out.is_null() {
            obj.gradient(x, slice::from_raw_parts_mut(grad_out, obj.dim()));
        }
        Ok(())
    })
}

/// Releases an objective handle. Null is a no-op.
///
/// # Safety
/// `obj` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sgeo_objective_free(obj: *mut SgeoObjective) {
    if !obj.is_null() {
        drop(Box::from_raw(obj));
    }
}

/// Fills `out` with the default driver parameters for the box.
///
/// # Safety
/// `lower` and `upper` must hold `dim` values; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sgeo_default_config(
    lower: *const f64,
    upper: *const f64,
    dim: usize,
    out: *mut SgeoRunConfig,
) -> SgeoStatus {
    guard(|| {
        let lower = slice_arg(lower, dim, "lower")?;
        let upper = slice_arg(upper, dim, "upper")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let cfg = default_config(lower, upper).map_err(fail)?;
        *out = SgeoRunConfig::from(&cfg);
        Ok(())
    })
}

/// Runs the stochastic driver on `obj` over `[lower, upper]`. A null `config`
/// uses the defaults. The run is deterministic in `seed`.
///
/// # Safety
/// `lower` and `upper` must hold `dim(obj)` values; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sgeo_run(
    obj: *const SgeoObjective,
    lower: *const f64,
    upper: *const f64,
    config: *const SgeoRunConfig,
    seed: u64,
    out: *mut *mut SgeoRunResult,
) -> SgeoStatus {
    guard(|| {
        let obj = ref_arg(obj, "obj")?.as_objective();
        let d = obj.dim();
        let lower = slice_arg(lower, d, "lower")?;
        let upper = slice_arg(upper, d, "upper")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let cfg = match config.as_ref() {
            Some(c) => SgeoConfig::from(c),
            None => default_config(lower, upper).map_err(fail)?,
        };
        let handle = ObjectiveHandle::new(obj);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let result = run_sgeo(&handle, lower, upper, &cfg, &mut rng).map_err(fail)?;
        *out = Box::into_raw(Box::new(SgeoRunResult { result }));
        Ok(())
    })
}

/// Local quasi-Newton maximization from `x0`. Writes the maximizer to `x_out`
/// and its value to `phi_out`. Zero settings select the defaults.
///
/// # Safety
/// `x0` and `x_out` must hold `dim(obj)` values; `phi_out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sgeo_maximize_local(
    obj: *const SgeoObjective,
    x0: *const f64,
    max_iter: usize,
    tol_f: f64,
    tol_x: f64,
    x_out: *mut f64,
    phi_out: *mut f64,
) -> SgeoStatus {
    guard(|| {
        let obj = ref_arg(obj, "obj")?.as_objective();
        let x0 = slice_arg(x0, obj.dim(), "x0")?;
        if x_out.is_null() || phi_out.is_null() {
            return Err(null("x_out/phi_out"));
        }
        let defaults = QnSettings::default();
        let settings = QnSettings {
            max_iter: if max_iter == 0 {
                defaults.max_iter
            } else {
                max_iter
            },
            tol_f: if tol_f == 0.0 { defaults.tol_f } else { tol_f },
            tol_x: if tol_x == 0.0 { defaults.tol_x } else { tol_x },
        };
        let handle = ObjectiveHandle::new(obj);
        let r = maximize_local(&handle, x0, &settings).map_err(fail)?;
        ptr::copy_nonoverlapping(r.x_star.as_ptr(), x_out, r.x_star.len());
        *phi_out = r.phi_star;
        Ok(())
    })
}

/// Best value found, or NaN for a null handle.
///
/// # Safety
/// `res` must be null or a live result handle.
#[no_mangle]
pub unsafe extern "C" fn sgeo_result_phi_star(res: *const SgeoRunResult) -> f64 {
    res.as_ref().map_or(f64::NAN, |r| r.result.phi_star)
}

/// Copies the best point into `x_out`, which must hold `len` values.
/// Fails with `DimensionMismatch` if `len` differs from the problem dimension.
///
/// # Safety
/// `x_out` must be valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn sgeo_result_x_star(
    res: *const SgeoRunResult,
    x_out: *mut f64,
    len: usize,
) -> SgeoStatus {
    guard(|| {
        let r = &ref_arg(res, "res")?.result;
        if x_out.is_null() {
            return Err(null("x_out"));
        }
        if len != r.x_star.len() {
            return Err(fail(Error::DimensionMismatch {
                expected: r.x_star.len(),
                got: len,
            }));
        }
        ptr::copy_nonoverlapping(r.x_star.as_ptr(), x_out, len);
        Ok(())
    })
}

/// Runs executed in the final phase.
///
/// # Safety
/// `res` must be null or a live result handle.
#[no_mangle]
pub unsafe extern "C" fn sgeo_result_runs_executed(res: *const SgeoRunResult) -> usize {
    res.as_ref().map_or(0, |r| r.result.runs_executed)
}

/// # Safety
/// `res` must be null or a live result handle.
#[no_mangle]
pub unsafe extern "C" fn sgeo_result_value_calls(res: *const SgeoRunResult) -> u64 {
    res.as_ref().map_or(0, |r| r.result.calls.value_calls)
}

/// # Safety
/// `res` must be null or a live result handle.
#[no_mangle]
pub unsafe extern "C" fn sgeo_result_gradient_calls(res: *const SgeoRunResult) -> u64 {
    res.as_ref().map_or(0, |r| r.result.calls.gradient_calls)
}

/// Whether the run stopped on the repeated-optimum criterion.
///
/// # Safety
/// `res` must be null or a live result handle.
#[no_mangle]
pub unsafe extern "C" fn sgeo_result_stopped_early(res: *const SgeoRunResult) -> bool {
    res.as_ref().is_some_and(|r| r.result.stopped_early)
}

/// Whether the oscillatory parameter set was switched on.
///
/// # Safety
/// `res` must be null or a live result handle.
#[no_mangle]
pub unsafe extern "C" fn sgeo_result_oscillatory(res: *const SgeoRunResult) -> bool {
    res.as_ref().is_some_and(|r| r.result.oscillatory)
}

/// Releases a result handle. Null is a no-op.
///
/// # Safety
/// `res` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sgeo_result_free(res: *mut SgeoRunResult) {
    if !res.is_null() {
        drop(Box::from_raw(res));
    }
}
