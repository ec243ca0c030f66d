use std::ffi::{c_char, c_int, c_void, CStr, CString};
use std::ptr;

use cgso_ffi::*;

fn last_error() -> String {
    let p = cgso_last_error();
    assert!(!p.is_null(), "a failing call sets the last error");
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn generate(spec: &str) -> *mut CgsoObjective {
    let spec = CString::new(spec).unwrap();
    let mut obj = ptr::null_mut();
    assert_eq!(unsafe { cgso_instance_generate(spec.as_ptr(), &mut obj) }, CgsoStatus::Ok);
    obj
}

const F1_SPEC: &str = r#"{"family":"f1","m":60,"n":20,"ds":0.5,"seed":3,"epsilon":1e-8}"#;

#[test]
fn solves_a_generated_instance() {
    let obj = generate(F1_SPEC);
    unsafe {
        let n = cgso_objective_dim(obj);
        assert_eq!(n, 20);
        let mut x0 = vec![f64::NAN; n];
        assert_eq!(cgso_objective_start(obj, x0.as_mut_ptr(), n), CgsoStatus::Ok);

        let mut report = ptr::null_mut();
        let opts = cgso_options_default();
        assert_eq!(cgso_solve(obj, x0.as_ptr(), n, &opts, &mut report), CgsoStatus::Ok);
        assert_eq!(cgso_report_termination(report), CgsoTermination::Converged);
        assert!(cgso_report_grad_norm(report) <= opts.tolerance);
        assert!(cgso_report_iterations(report) > 0);
        assert!(cgso_report_max_subspace_dim(report) >= 1);

        let mut x = vec![0.0; n];
        assert_eq!(cgso_report_solution(report, x.as_mut_ptr(), n), CgsoStatus::Ok);
        let mut value = 0.0;
        let mut grad = vec![0.0; n];
        assert_eq!(cgso_objective_evaluate(obj, x.as_ptr(), n, &mut value, grad.as_mut_ptr()), CgsoStatus::Ok);
        assert_eq!(value, cgso_report_value(report));

        let mut json: *mut c_char = ptr::null_mut();
        assert_eq!(cgso_report_to_json(report, &mut json), CgsoStatus::Ok);
        let text = CStr::from_ptr(json).to_str().unwrap().to_owned();
        cgso_string_free(json);
        let parsed: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(parsed["solver"], "cgso");

        cgso_report_free(report);
        cgso_objective_free(obj);
    }
}

#[test]
fn baseline_runs_through_the_same_handles() {
    let obj = generate(F1_SPEC);
    unsafe {
        let n = cgso_objective_dim(obj);
        let mut x0 = vec![0.0; n];
        cgso_objective_start(obj, x0.as_mut_ptr(), n);
        let mut report = ptr::null_mut();
        let status = cgso_baseline_solve(obj, x0.as_ptr(), n, CgsoBaseline::HagerZhang, 1e-8, 0, &mut report);
        assert_eq!(status, CgsoStatus::Ok);
        assert_eq!(cgso_report_termination(report), CgsoTermination::Converged);
        assert!(cgso_report_line_search_iterations(report) >= cgso_report_iterations(report));
        assert_eq!(cgso_report_inner_iterations(report), 0);
        assert!(cgso_report_rho_max(report).is_nan());
        cgso_report_free(report);
        cgso_objective_free(obj);
    }
}

/// `f(x) = Σ cᵢ(xᵢ − 1)² + Σ exp(xᵢ)`, strongly convex with minimizer
/// independent of the evaluation path.
unsafe extern "C" fn smooth(user: *mut c_void, x: *const f64, n: usize, value: *mut f64, grad: *mut f64) -> c_int {
    let c = &*(user as *const Vec<f64>);
    let x = std::slice::from_raw_parts(x, n);
    *value = x.iter().zip(c).map(|(xi, ci)| ci * (xi - 1.0).powi(2) + xi.exp()).sum();
    if !grad.is_null() {
        let g = std::slice::from_raw_parts_mut(grad, n);
        for i in 0..n {
            g[i] = 2.0 * c[i] * (x[i] - 1.0) + x[i].exp();
        }
    }
    CGSO_CALLBACK_OK
}

unsafe extern "C" fn smooth_hvp(user: *mut c_void, x: *const f64, v: *const f64, n: usize, out: *mut f64) -> c_int {
    let c = &*(user as *const Vec<f64>);
    let (x, v, out) = (std::slice::from_raw_parts(x, n), std::slice::from_raw_parts(v, n), std::slice::from_raw_parts_mut(out, n));
    for i in 0..n {
        out[i] = (2.0 * c[i] + x[i].exp()) * v[i];
    }
    CGSO_CALLBACK_OK
}

fn solve_callbacks(callbacks: &CgsoCallbacks, n: usize) -> (CgsoStatus, *mut CgsoReport) {
    let mut obj = ptr::null_mut();
    unsafe {
        assert_eq!(cgso_objective_from_callbacks(n, callbacks, &mut obj), CgsoStatus::Ok);
        let x0 = vec![0.0; n];
        let mut report = ptr::null_mut();
        let status = cgso_solve(obj, x0.as_ptr(), n, ptr::null(), &mut report);
        cgso_objective_free(obj);
        (status, report)
    }
}

#[test]
fn callback_objective_with_and_without_hessian_products() {
    let c: Vec<f64> = (1..=12).map(|i| i as f64).collect();
    let user = &c as *const Vec<f64> as *mut c_void;
    let mut finals = Vec::new();
    for hvp in [Some(smooth_hvp as _), None] {
        let callbacks = CgsoCallbacks { value_and_gradient: Some(smooth), hvp, separating_direction: None, user_data: user };
        let (status, report) = solve_callbacks(&callbacks, c.len());
        assert_eq!(status, CgsoStatus::Ok);
        unsafe {
            assert_eq!(cgso_report_termination(report), CgsoTermination::Converged);
            finals.push(cgso_report_value(report));
            cgso_report_free(report);
        }
    }
    assert!((finals[0] - finals[1]).abs() <= 1e-9 * finals[0].abs());
}

/// `f(x) = −Σ log(1 − xᵢ²) + Σ xᵢ`, domain `|xᵢ| < 1`.
unsafe extern "C" fn box_barrier(_: *mut c_void, x: *const f64, n: usize, value: *mut f64, grad: *mut f64) -> c_int {
    let x = std::slice::from_raw_parts(x, n);
    if x.iter().any(|xi| xi.abs() >= 1.0) {
        return CGSO_CALLBACK_INFEASIBLE;
    }
    *value = x.iter().map(|xi| -(1.0 - xi * xi).ln() + xi).sum();
    if !grad.is_null() {
        let g = std::slice::from_raw_parts_mut(grad, n);
        for i in 0..n {
            g[i] = 2.0 * x[i] / (1.0 - x[i] * x[i]) + 1.0;
        }
    }
    CGSO_CALLBACK_OK
}

unsafe extern "C" fn box_separator(_: *mut c_void, x: *const f64, n: usize, out: *mut f64) -> c_int {
    let (x, out) = (std::slice::from_raw_parts(x, n), std::slice::from_raw_parts_mut(out, n));
    for i in 0..n {
        out[i] = if x[i] >= 1.0 { 1.0 } else if x[i] <= -1.0 { -1.0 } else { 0.0 };
    }
    CGSO_CALLBACK_OK
}

#[test]
fn callback_domains_are_respected() {
    let callbacks = CgsoCallbacks {
        value_and_gradient: Some(box_barrier),
        hvp: None,
        separating_direction: Some(box_separator),
        user_data: ptr::null_mut(),
    };
    let n = 8;
    let (status, report) = solve_callbacks(&callbacks, n);
    assert_eq!(status, CgsoStatus::Ok);
    unsafe {
        assert_eq!(cgso_report_termination(report), CgsoTermination::Converged);
        let mut x = vec![0.0; n];
        cgso_report_solution(report, x.as_mut_ptr(), n);
        // minimizer of −log(1 − t²) + t is t = 1 − √2
        for xi in x {
            assert!((xi - (1.0 - 2f64.sqrt())).abs() < 1e-6);
        }
        cgso_report_free(report);
    }
}

unsafe extern "C" fn broken(_: *mut c_void, _: *const f64, _: usize, _: *mut f64, _: *mut f64) -> c_int {
    -7
}

#[test]
fn callback_errors_surface_as_status() {
    let callbacks = CgsoCallbacks { value_and_gradient: Some(broken), hvp: None, separating_direction: None, user_data: ptr::null_mut() };
    let (status, report) = solve_callbacks(&callbacks, 3);
    assert_eq!(status, CgsoStatus::Callback);
    assert!(report.is_null());
    assert!(last_error().contains("-7"));
}

#[test]
fn invalid_arguments_are_reported() {
    unsafe {
        let mut obj = ptr::null_mut();
        assert_eq!(cgso_instance_generate(ptr::null(), &mut obj), CgsoStatus::NullPointer);
        assert!(last_error().contains("spec_json"));

        let bad = CString::new(r#"{"family":"f1","m":0,"n":5,"ds":0.5,"seed":1,"epsilon":1e-8}"#).unwrap();
        assert_eq!(cgso_instance_generate(bad.as_ptr(), &mut obj), CgsoStatus::InvalidArgument);
        let junk = CString::new("not json").unwrap();
        assert_eq!(cgso_instance_generate(junk.as_ptr(), &mut obj), CgsoStatus::InvalidArgument);
        assert!(obj.is_null());

        let missing = CString::new("/nonexistent/instance.json").unwrap();
        assert_eq!(cgso_instance_load(missing.as_ptr(), &mut obj), CgsoStatus::Io);

        let obj = generate(F1_SPEC);
        let x = [0.0; 5];
        let mut report = ptr::null_mut();
        assert_eq!(cgso_solve(obj, x.as_ptr(), 5, ptr::null(), &mut report), CgsoStatus::DimensionMismatch);
        assert_eq!(cgso_solve(ptr::null(), x.as_ptr(), 5, ptr::null(), &mut report), CgsoStatus::NullPointer);

        let far = [1e6; 20];
        let mut value = 0.0;
        assert_eq!(cgso_objective_evaluate(obj, far.as_ptr(), 20, &mut value, ptr::null_mut()), CgsoStatus::Infeasible);

        let mut opts = cgso_options_default();
        opts.rho = 0.5;
        let mut x0 = vec![0.0; 20];
        cgso_objective_start(obj, x0.as_mut_ptr(), 20);
        assert_eq!(cgso_solve(obj, x0.as_ptr(), 20, &opts, &mut report), CgsoStatus::InvalidArgument);
        assert!(last_error().contains("rho"));

        let mut short = vec![0.0; 3];
        assert_eq!(cgso_objective_start(obj, short.as_mut_ptr(), 3), CgsoStatus::DimensionMismatch);
        cgso_objective_free(obj);

        let no_fn = CgsoCallbacks { value_and_gradient: None, hvp: None, separating_direction: None, user_data: ptr::null_mut() };
        let mut obj = ptr::null_mut();
        assert_eq!(cgso_objective_from_callbacks(2, &no_fn, &mut obj), CgsoStatus::NullPointer);

        // null handles are tolerated by the free functions and getters
        cgso_objective_free(ptr::null_mut());
        cgso_report_free(ptr::null_mut());
        cgso_string_free(ptr::null_mut());
        assert_eq!(cgso_report_iterations(ptr::null()), 0);
        assert_eq!(cgso_report_termination(ptr::null()), CgsoTermination::Failed);
    }
}

#[test]
fn success_clears_the_last_error() {
    unsafe {
        let mut obj = ptr::null_mut();
        cgso_instance_generate(ptr::null(), &mut obj);
        assert!(!cgso_last_error().is_null());
        let obj = generate(F1_SPEC);
        assert!(cgso_last_error().is_null());
        cgso_objective_free(obj);
    }
}

#[test]
fn version_matches_the_package() {
    let v = unsafe { CStr::from_ptr(cgso_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}
