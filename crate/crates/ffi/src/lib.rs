//! C ABI for the `cgso` solver.
//!
//! Objectives and reports are opaque handles owned by the caller and
//! released with their `_free` function. Every entry point returns a
//! [`CgsoStatus`]; on failure [`cgso_last_error`] describes the cause.
//! Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, c_void, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;
use std::sync::Mutex;

use cgso::baselines::{nonlinear_cg, NonlinearCgOptions, Variant};
use cgso::cgso::CorrectionBasis;
use cgso::objectives::{generate_instance, GeneratedInstance, InstanceFile, InstanceSpec, Objective};
use cgso::report::Termination;
use cgso::{Error, SolveReport, SolverOptions};
use nalgebra::DVector;

/// Callback result: success.
pub const CGSO_CALLBACK_OK: c_int = 0;
/// Callback result: the point lies outside the objective's domain.
pub const CGSO_CALLBACK_INFEASIBLE: c_int = 1;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CgsoStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    Infeasible = 4,
    NotPositiveDefinite = 5,
    LineSearch = 6,
    Io = 7,
    Callback = 8,
    Panic = 9,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CgsoTermination {
    Converged = 0,
    IterationLimit = 1,
    Stalled = 2,
    Failed = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CgsoBaseline {
    FletcherReeves = 0,
    PolakRibiere = 1,
    HagerZhang = 2,
    SteepestDescent = 3,
}

/// Solver settings. Start from [`cgso_options_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct CgsoOptions {
    pub tolerance: f64,
    pub rho: f64,
    pub min_exponent: u32,
    /// `0` means `200·n`.
    pub max_iters: usize,
    pub newton_max_iters: usize,
    pub adaptive_rho: bool,
    /// Use only `xʲ − x^{r_p}` as correction column.
    pub displacement_only: bool,
}

/// Writes `f(x)` to `value` and, when `gradient` is non-null, `∇f(x)` to
/// the `n` doubles behind it.
pub type CgsoValueGradientFn =
    Option<unsafe extern "C" fn(user_data: *mut c_void, x: *const f64, n: usize, value: *mut f64, gradient: *mut f64) -> c_int>;

/// Writes `∇²f(x)·v` to `out`.
pub type CgsoHvpFn =
    Option<unsafe extern "C" fn(user_data: *mut c_void, x: *const f64, v: *const f64, n: usize, out: *mut f64) -> c_int>;

/// For an infeasible `x`, writes `h` with `⟨h, x' − x⟩ < 0` for every
/// feasible `x'`.
pub type CgsoSeparatingFn = Option<unsafe extern "C" fn(user_data: *mut c_void, x: *const f64, n: usize, out: *mut f64) -> c_int>;

/// A user-supplied objective. `value_and_gradient` is required. Without
/// `hvp`, Hessian products are central differences of the gradient.
/// Callbacks must tolerate calls from any thread.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct CgsoCallbacks {
    pub value_and_gradient: CgsoValueGradientFn,
    pub hvp: CgsoHvpFn,
    pub separating_direction: CgsoSeparatingFn,
    pub user_data: *mut c_void,
}

struct CallbackObjective {
    n: usize,
    callbacks: CgsoCallbacks,
    failure: Mutex<Option<c_int>>,
}

// SAFETY: the caller guarantees the callbacks and `user_data` are usable
// from any thread, as documented on `CgsoCallbacks`.
unsafe impl Send for CallbackObjective {}
unsafe impl Sync for CallbackObjective {}

impl CallbackObjective {
    fn check(&self, code: c_int) -> cgso::Result<()> {
        match code {
            CGSO_CALLBACK_OK => Ok(()),
            CGSO_CALLBACK_INFEASIBLE => Err(Error::Infeasible),
            other => {
                *self.failure.lock().unwrap_or_else(|e| e.into_inner()) = Some(other);
                Err(Error::Contract(format!("objective callback returned {other}")))
            }
        }
    }

    fn take_failure(&self) -> Option<c_int> {
        self.failure.lock().unwrap_or_else(|e| e.into_inner()).take()
    }

    fn evaluate(&self, x: &DVector<f64>, want_gradient: bool) -> cgso::Result<(f64, Option<DVector<f64>>)> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: x.len() });
        }
        let f = self.callbacks.value_and_gradient.expect("checked at construction");
        let mut value = f64::NAN;
        let mut gradient = want_gradient.then(|| DVector::zeros(self.n));
        let g_ptr = gradient.as_mut().map_or(ptr::null_mut(), |g| g.as_mut_ptr());
        // SAFETY: `x` and `gradient` hold `n` doubles; the callback contract
        // is the caller's.
        let code = unsafe { f(self.callbacks.user_data, x.as_ptr(), self.n, &mut value, g_ptr) };
        self.check(code)?;
        Ok((value, gradient))
    }
}

impl Objective for CallbackObjective {
    fn dim(&self) -> usize {
        self.n
    }

    fn value(&self, x: &DVector<f64>) -> cgso::Result<f64> {
        Ok(self.evaluate(x, false)?.0)
    }

    fn gradient(&self, x: &DVector<f64>) -> cgso::Result<DVector<f64>> {
        Ok(self.evaluate(x, true)?.1.expect("requested"))
    }

    fn value_and_gradient(&self, x: &DVector<f64>) -> cgso::Result<(f64, DVector<f64>)> {
        let (value, gradient) = self.evaluate(x, true)?;
        Ok((value, gradient.expect("requested")))
    }

    fn hvp(&self, x: &DVector<f64>, v: &DVector<f64>) -> cgso::Result<DVector<f64>> {
        if v.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: v.len() });
        }
        match self.callbacks.hvp {
            Some(hvp) => {
                let mut out = DVector::zeros(self.n);
                // SAFETY: all buffers hold `n` doubles.
                let code = unsafe { hvp(self.callbacks.user_data, x.as_ptr(), v.as_ptr(), self.n, out.as_mut_ptr()) };
                self.check(code)?;
                Ok(out)
            }
            None => {
                let norm = v.norm();
                if norm == 0.0 {
                    return Ok(DVector::zeros(self.n));
                }
                let h = 1e-6 * (1.0 + x.norm()) / norm;
                let plus = self.gradient(&(x + v * h))?;
                let minus = self.gradient(&(x - v * h))?;
                Ok((plus - minus) / (2.0 * h))
            }
        }
    }

    fn is_feasible(&self, x: &DVector<f64>) -> bool {
        matches!(self.evaluate(x, false), Ok((v, _)) if v.is_finite())
    }

    fn separating_direction(&self, x: &DVector<f64>) -> cgso::Result<DVector<f64>> {
        let Some(sep) = self.callbacks.separating_direction else {
            return Err(Error::Contract("no separating direction callback".into()));
        };
        let mut out = DVector::zeros(self.n);
        // SAFETY: all buffers hold `n` doubles.
        let code = unsafe { sep(self.callbacks.user_data, x.as_ptr(), self.n, out.as_mut_ptr()) };
        self.check(code)?;
        Ok(out)
    }
}

enum Source {
    Instance(Box<GeneratedInstance>),
    Callbacks(CallbackObjective),
}

/// An objective: a generated test instance or a set of callbacks.
pub struct CgsoObjective {
    source: Source,
}

impl CgsoObjective {
    fn objective(&self) -> &dyn Objective {
        match &self.source {
            Source::Instance(inst) => &inst.problem,
            Source::Callbacks(cb) => cb,
        }
    }

    fn take_callback_failure(&self) -> Option<c_int> {
        match &self.source {
            Source::Callbacks(cb) => cb.take_failure(),
            Source::Instance(_) => None,
        }
    }
}

/// The outcome of one solve.
pub struct CgsoReport {
    report: SolveReport,
}

struct Failure {
    status: CgsoStatus,
    message: String,
}

impl Failure {
    fn new(status: CgsoStatus, message: impl Into<String>) -> Self {
        Failure { status, message: message.into() }
    }

    fn null(what: &str) -> Self {
        Failure::new(CgsoStatus::NullPointer, format!("{what} is null"))
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Infeasible => CgsoStatus::Infeasible,
            Error::DimensionMismatch { .. } => CgsoStatus::DimensionMismatch,
            Error::NotPositiveDefinite { .. } => CgsoStatus::NotPositiveDefinite,
            Error::LineSearch { .. } => CgsoStatus::LineSearch,
            Error::Io { .. } | Error::Json { .. } | Error::Csv(_) => CgsoStatus::Io,
            _ => CgsoStatus::InvalidArgument,
        };
        Failure::new(status, e.to_string())
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: String) {
    let message = CString::new(message.replace('\0', " ")).expect("interior nuls removed");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(message));
}

fn guard(body: impl FnOnce() -> Result<(), Failure>) -> CgsoStatus {
    let outcome = catch_unwind(AssertUnwindSafe(body)).unwrap_or_else(|payload| {
        let message = payload
            .downcast_ref::<&str>()
            .map(|s| s.to_string())
            .or_else(|| payload.downcast_ref::<String>().cloned())
            .unwrap_or_else(|| "unknown panic".into());
        Err(Failure::new(CgsoStatus::Panic, format!("panic: {message}")))
    });
    match outcome {
        Ok(()) => {
            LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
            CgsoStatus::Ok
        }
        Err(failure) => {
            set_last_error(failure.message);
            failure.status
        }
    }
}

/// # Safety
/// `s` must be null or a valid nul-terminated string.
unsafe fn read_str<'a>(s: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if s.is_null() {
        return Err(Failure::null(what));
    }
    CStr::from_ptr(s).to_str().map_err(|_| Failure::new(CgsoStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

/// # Safety
/// `p` must be null or point to `n` readable doubles.
unsafe fn read_vector(p: *const f64, n: usize, what: &str) -> Result<DVector<f64>, Failure> {
    if p.is_null() {
        return Err(Failure::null(what));
    }
    Ok(DVector::from_column_slice(std::slice::from_raw_parts(p, n)))
}

/// # Safety
/// `out` must be null or point to `len` writable doubles.
unsafe fn write_slice(out: *mut f64, len: usize, src: &[f64]) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure::null("output buffer"));
    }
    if len != src.len() {
        return Err(Failure::new(
            CgsoStatus::DimensionMismatch,
            format!("output buffer holds {len} values, expected {}", src.len()),
        ));
    }
    std::slice::from_raw_parts_mut(out, len).copy_from_slice(src);
    Ok(())
}

fn check_dim(obj: &CgsoObjective, n: usize) -> Result<(), Failure> {
    let expected = obj.objective().dim();
    if n == expected {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got: n }.into())
    }
}

unsafe fn store<T>(out: *mut *mut T, value: T) {
    *out = Box::into_raw(Box::new(value));
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn cgso_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or null. The string
/// stays valid until the next call into the library on this thread.
#[no_mangle]
pub extern "C" fn cgso_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Releases a string returned by this library.
///
/// # Safety
/// `s` must be null or a string obtained from this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn cgso_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Generates a seeded test instance from its JSON spec.
///
/// # Safety
/// `spec_json` must be a nul-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cgso_instance_generate(spec_json: *const c_char, out: *mut *mut CgsoObjective) -> CgsoStatus {
    guard(|| {
        if out.is_null() {
            return Err(Failure::null("out"));
        }
        let spec: InstanceSpec = serde_json::from_str(read_str(spec_json, "spec_json")?)
            .map_err(|e| Failure::new(CgsoStatus::InvalidArgument, format!("instance spec: {e}")))?;
        let inst = generate_instance(&spec)?;
        store(out, CgsoObjective { source: Source::Instance(Box::new(inst)) });
        Ok(())
    })
}

/// Loads an instance file written by the benchmark harness.
///
/// # Safety
/// `path` must be a nul-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cgso_instance_load(path: *const c_char, out: *mut *mut CgsoObjective) -> CgsoStatus {
    guard(|| {
        if out.is_null() {
            return Err(Failure::null("out"));
        }
        let inst = InstanceFile::read(Path::new(read_str(path, "path")?))?.into_instance()?;
        store(out, CgsoObjective { source: Source::Instance(Box::new(inst)) });
        Ok(())
    })
}

/// Wraps user callbacks as an objective over `R^n`.
///
/// # Safety
/// `callbacks` must point to a valid [`CgsoCallbacks`] whose functions and
/// `user_data` outlive the returned handle.
#[no_mangle]
pub unsafe extern "C" fn cgso_objective_from_callbacks(
    n: usize,
    callbacks: *const CgsoCallbacks,
    out: *mut *mut CgsoObjective,
) -> CgsoStatus {
    guard(|| {
        if out.is_null() {
            return Err(Failure::null("out"));
        }
        let callbacks = callbacks.as_ref().ok_or_else(|| Failure::null("callbacks"))?;
        if callbacks.value_and_gradient.is_none() {
            return Err(Failure::null("value_and_gradient"));
        }
        if n == 0 {
            return Err(Failure::new(CgsoStatus::InvalidArgument, "dimension must be positive"));
        }
        let objective = CallbackObjective { n, callbacks: *callbacks, failure: Mutex::new(None) };
        store(out, CgsoObjective { source: Source::Callbacks(objective) });
        Ok(())
    })
}

/// # Safety
/// `obj` must be null or a handle from this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn cgso_objective_free(obj: *mut CgsoObjective) {
    if !obj.is_null() {
        drop(Box::from_raw(obj));
    }
}

/// Dimension of the objective, or 0 for a null handle.
///
/// # Safety
/// `obj` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cgso_objective_dim(obj: *const CgsoObjective) -> usize {
    obj.as_ref().map_or(0, |o| o.objective().dim())
}

/// Copies the instance's starting point into `out`. Callback objectives
/// have none.
///
/// # Safety
/// `obj` must be a live handle and `out` hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn cgso_objective_start(obj: *const CgsoObjective, out: *mut f64, len: usize) -> CgsoStatus {
    guard(|| {
        let obj = obj.as_ref().ok_or_else(|| Failure::null("objective"))?;
        match &obj.source {
            Source::Instance(inst) => write_slice(out, len, inst.x0.as_slice()),
            Source::Callbacks(_) => Err(Failure::new(CgsoStatus::InvalidArgument, "callback objectives have no start point")),
        }
    })
}

/// Evaluates `f(x)` and, when `gradient` is non-null, `∇f(x)`.
///
/// # Safety
/// `obj` must be a live handle, `x` and `gradient` hold `n` doubles and
/// `value` be writable.
#[no_mangle]
pub unsafe extern "C" fn cgso_objective_evaluate(
    obj: *const CgsoObjective,
    x: *const f64,
    n: usize,
    value: *mut f64,
    gradient: *mut f64,
) -> CgsoStatus {
    guard(|| {
        let obj = obj.as_ref().ok_or_else(|| Failure::null("objective"))?;
        check_dim(obj, n)?;
        let x = read_vector(x, n, "x")?;
        let value = value.as_mut().ok_or_else(|| Failure::null("value"))?;
        if gradient.is_null() {
            *value = obj.objective().value(&x)?;
        } else {
            let (f, g) = obj.objective().value_and_gradient(&x)?;
            *value = f;
            write_slice(gradient, n, g.as_slice())?;
        }
        Ok(())
    })
}

#[no_mangle]
pub extern "C" fn cgso_options_default() -> CgsoOptions {
    let d = SolverOptions::default();
    CgsoOptions {
        tolerance: d.tolerance,
        rho: d.rho,
        min_exponent: d.min_exponent,
        max_iters: 0,
        newton_max_iters: d.newton_max_iters,
        adaptive_rho: d.adaptive_rho,
        displacement_only: false,
    }
}

impl From<&CgsoOptions> for SolverOptions {
    fn from(o: &CgsoOptions) -> Self {
        SolverOptions {
            tolerance: o.tolerance,
            rho: o.rho,
            min_exponent: o.min_exponent,
            max_iters: (o.max_iters > 0).then_some(o.max_iters),
            newton_max_iters: o.newton_max_iters,
            adaptive_rho: o.adaptive_rho,
            correction_basis: if o.displacement_only { CorrectionBasis::DisplacementOnly } else { CorrectionBasis::Full },
            ..SolverOptions::default()
        }
    }
}

fn finish(obj: &CgsoObjective, result: cgso::Result<SolveReport>, out: *mut *mut CgsoReport) -> Result<(), Failure> {
    let callback_failure = obj.take_callback_failure();
    let report = result.map_err(|e| match callback_failure {
        Some(code) => Failure::new(CgsoStatus::Callback, format!("objective callback returned {code}: {e}")),
        None => e.into(),
    })?;
    // SAFETY: checked non-null by the caller.
    unsafe { store(out, CgsoReport { report }) };
    Ok(())
}

/// Runs CGSO from `x0`. `options` may be null for the defaults. A run that
/// stops early still returns `CGSO_STATUS_OK`; see
/// [`cgso_report_termination`].
///
/// # Safety
/// `obj` must be a live handle, `x0` hold `n` doubles, `options` be null or
/// valid and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cgso_solve(
    obj: *const CgsoObjective,
    x0: *const f64,
    n: usize,
    options: *const CgsoOptions,
    out: *mut *mut CgsoReport,
) -> CgsoStatus {
    guard(|| {
        let obj = obj.as_ref().ok_or_else(|| Failure::null("objective"))?;
        if out.is_null() {
            return Err(Failure::null("out"));
        }
        check_dim(obj, n)?;
        let x0 = read_vector(x0, n, "x0")?;
        let opts = options.as_ref().map(SolverOptions::from).unwrap_or_default();
        obj.take_callback_failure();
        finish(obj, cgso::run(obj.objective(), &x0, &opts), out)
    })
}

/// Runs a nonlinear CG baseline with the Wolfe line search. `max_iters`
/// of 0 means `200·n`.
///
/// # Safety
/// As for [`cgso_solve`].
#[no_mangle]
pub unsafe extern "C" fn cgso_baseline_solve(
    obj: *const CgsoObjective,
    x0: *const f64,
    n: usize,
    variant: CgsoBaseline,
    tolerance: f64,
    max_iters: usize,
    out: *mut *mut CgsoReport,
) -> CgsoStatus {
    guard(|| {
        let obj = obj.as_ref().ok_or_else(|| Failure::null("objective"))?;
        if out.is_null() {
            return Err(Failure::null("out"));
        }
        check_dim(obj, n)?;
        let x0 = read_vector(x0, n, "x0")?;
        let variant = match variant {
            CgsoBaseline::FletcherReeves => Variant::FletcherReeves,
            CgsoBaseline::PolakRibiere => Variant::PolakRibiere,
            CgsoBaseline::HagerZhang => Variant::HagerZhang,
            CgsoBaseline::SteepestDescent => Variant::SteepestDescent,
        };
        let opts = NonlinearCgOptions { tolerance, max_iters: (max_iters > 0).then_some(max_iters), ..Default::default() };
        obj.take_callback_failure();
        finish(obj, nonlinear_cg(obj.objective(), &x0, variant, &opts), out)
    })
}

/// # Safety
/// `report` must be null or a handle from this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn cgso_report_free(report: *mut CgsoReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// # Safety
/// `report` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn cgso_report_termination(report: *const CgsoReport) -> CgsoTermination {
    match report.as_ref().map(|r| &r.report.termination) {
        Some(Termination::Converged) => CgsoTermination::Converged,
        Some(Termination::IterationLimit) => CgsoTermination::IterationLimit,
        Some(Termination::Stalled) => CgsoTermination::Stalled,
        Some(Termination::Failed(_)) | None => CgsoTermination::Failed,
    }
}

/// Major iterations.
///
/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cgso_report_iterations(report: *const CgsoReport) -> usize {
    report.as_ref().map_or(0, |r| r.report.iterations)
}

/// Newton plus ellipsoid iterations.
///
/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cgso_report_inner_iterations(report: *const CgsoReport) -> usize {
    report.as_ref().map_or(0, |r| r.report.inner_iterations())
}

/// Line-search probes of a baseline run.
///
/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cgso_report_line_search_iterations(report: *const CgsoReport) -> usize {
    report.as_ref().map_or(0, |r| r.report.line_search_iterations)
}

/// Blocks that ran in correction mode.
///
/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cgso_report_correction_blocks(report: *const CgsoReport) -> usize {
    report.as_ref().map_or(0, |r| r.report.correction_blocks)
}

/// Largest subspace dimension used.
///
/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cgso_report_max_subspace_dim(report: *const CgsoReport) -> usize {
    report.as_ref().map_or(0, |r| r.report.max_subspace_dim)
}

/// Final objective value, NaN for a null handle.
///
/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cgso_report_value(report: *const CgsoReport) -> f64 {
    report.as_ref().map_or(f64::NAN, |r| r.report.value)
}

/// Final gradient norm, NaN for a null handle.
///
/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cgso_report_grad_norm(report: *const CgsoReport) -> f64 {
    report.as_ref().map_or(f64::NAN, |r| r.report.grad_norm)
}

/// Largest ρ used by the alignment check, NaN when no block was checked.
///
/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cgso_report_rho_max(report: *const CgsoReport) -> f64 {
    report.as_ref().map_or(f64::NAN, |r| r.report.rho_max().unwrap_or(f64::NAN))
}

/// Copies the final point into `out`.
///
/// # Safety
/// `report` must be a live handle and `out` hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn cgso_report_solution(report: *const CgsoReport, out: *mut f64, len: usize) -> CgsoStatus {
    guard(|| {
        let report = report.as_ref().ok_or_else(|| Failure::null("report"))?;
        write_slice(out, len, &report.report.x)
    })
}

/// Serializes the full report, trace included, as JSON. Free the result
/// with [`cgso_string_free`].
///
/// # Safety
/// `report` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cgso_report_to_json(report: *const CgsoReport, out: *mut *mut c_char) -> CgsoStatus {
    guard(|| {
        let report = report.as_ref().ok_or_else(|| Failure::null("report"))?;
        if out.is_null() {
            return Err(Failure::null("out"));
        }
        let json = serde_json::to_string(&report.report)
            .map_err(|e| Failure::new(CgsoStatus::Io, format!("report serialization: {e}")))?;
        *out = CString::new(json).expect("JSON has no interior nul").into_raw();
        Ok(())
    })
}
