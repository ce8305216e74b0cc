use std::ffi::{c_void, CString};
use std::ptr;

use sgeo_ffi::*;

struct Quadratic {
    center: [f64; 2],
    calls: usize,
}

unsafe extern "C" fn quad_value(x: *const f64, dim: usize, user: *mut c_void) -> f64 {
    let q = &mut *(user as *mut Quadratic);
    q.calls += 1;
    let x = std::slice::from_raw_parts(x, dim);
    10.0 - (x[0] - q.center[0]).powi(2) - 2.0 * (x[1] - q.center[1]).powi(2)
}

unsafe extern "C" fn quad_gradient(x: *const f64, dim: usize, g: *mut f64, user: *mut c_void) {
    let q = &*(user as *const Quadratic);
    let x = std::slice::from_raw_parts(x, dim);
    *g = -2.0 * (x[0] - q.center[0]);
    *g.add(1) = -4.0 * (x[1] - q.center[1]);
}

fn last_error() -> String {
    let mut buf = vec![0u8; 256];
    let n = unsafe { sgeo_last_error_message(buf.as_mut_ptr().cast(), buf.len()) };
    String::from_utf8_lossy(&buf[..n.min(255)]).into_owned()
}

#[test]
fn callback_objective_round_trip() {
    let mut q = Quadratic {
        center: [1.0, -0.5],
        calls: 0,
    };
    let mut obj = ptr::null_mut();
    let status = unsafe {
        sgeo_objective_from_callbacks(
            2,
            Some(quad_value),
            Some(quad_gradient),
            &mut q as *mut Quadratic as *mut c_void,
            &mut obj,
        )
    };
    assert_eq!(status, SgeoStatus::Ok);
    assert_eq!(unsafe { sgeo_objective_dim(obj) }, 2);

    let (lower, upper) = ([-5.0, -5.0], [5.0, 5.0]);
    let mut cfg = std::mem::MaybeUninit::<SgeoRunConfig>::uninit();
    let status =
        unsafe { sgeo_default_config(lower.as_ptr(), upper.as_ptr(), 2, cfg.as_mut_ptr()) };
    assert_eq!(status, SgeoStatus::Ok);
    let cfg = unsafe { cfg.assume_init() };
    assert_eq!(cfg.runs, 20);
    assert!((cfg.dt_lb0 - 10.0 * 2f64.sqrt() / 100.0).abs() < 1e-15);

    let mut res = ptr::null_mut();
    let status = unsafe { sgeo_run(obj, lower.as_ptr(), upper.as_ptr(), &cfg, 7, &mut res) };
    assert_eq!(status, SgeoStatus::Ok);
    let phi = unsafe { sgeo_result_phi_star(res) };
    assert!((phi - 10.0).abs() < 0.5, "phi {phi}");
    let mut x = [0.0; 2];
    assert_eq!(
        unsafe { sgeo_result_x_star(res, x.as_mut_ptr(), 2) },
        SgeoStatus::Ok
    );
    assert!(
        (x[0] - 1.0).abs() < 0.5 && (x[1] + 0.5).abs() < 0.5,
        "{x:?}"
    );
    assert_eq!(unsafe { sgeo_result_value_calls(res) }, q.calls as u64);
    assert!(unsafe { sgeo_result_gradient_calls(res) } > 0);
    assert!(unsafe { sgeo_result_runs_executed(res) } >= 1);
    assert!(unsafe { sgeo_result_stopped_early(res) });
    assert!(!unsafe { sgeo_result_oscillatory(res) });
    assert_eq!(
        unsafe { sgeo_result_x_star(res, x.as_mut_ptr(), 3) },
        SgeoStatus::DimensionMismatch
    );

    unsafe {
        sgeo_result_free(res);
        sgeo_objective_free(obj);
    }
}

#[test]
fn run_is_deterministic_in_seed() {
    let name = CString::new("branin").unwrap();
    let mut obj = ptr::null_mut();
    assert_eq!(
        unsafe { sgeo_objective_from_benchmark(name.as_ptr(), &mut obj) },
        SgeoStatus::Ok
    );
    let (mut lo, mut hi, mut known) = ([0.0; 2], [0.0; 2], 0.0);
    assert_eq!(
        unsafe { sgeo_objective_bounds(obj, lo.as_mut_ptr(), hi.as_mut_ptr(), &mut known) },
        SgeoStatus::Ok
    );
    assert_eq!(lo, [-5.0, 0.0]);
    assert_eq!(hi, [10.0, 15.0]);

    let run = |seed| unsafe {
        let mut res = ptr::null_mut();
        assert_eq!(
            sgeo_run(obj, lo.as_ptr(), hi.as_ptr(), ptr::null(), seed, &mut res),
            SgeoStatus::Ok
        );
        let out = (sgeo_result_phi_star(res), sgeo_result_value_calls(res));
        sgeo_result_free(res);
        out
    };
    let (a, b) = (run(3), run(3));
    assert_eq!(a.0.to_bits(), b.0.to_bits());
    assert_eq!(a.1, b.1);
    assert!((a.0 - known).abs() <= 0.05 * known.abs());
    unsafe { sgeo_objective_free(obj) };
}

#[test]
fn benchmark_eval_and_local_max() {
    let name = CString::new("sphere-2").unwrap();
    let mut obj = ptr::null_mut();
    assert_eq!(
        unsafe { sgeo_objective_from_benchmark(name.as_ptr(), &mut obj) },
        SgeoStatus::Ok
    );
    let x = [1.0, 2.0];
    let (mut phi, mut g) = (0.0, [0.0; 2]);
    assert_eq!(
        unsafe { sgeo_objective_eval(obj, x.as_ptr(), &mut phi, g.as_mut_ptr()) },
        SgeoStatus::Ok
    );
    assert_eq!(phi, -5.0);
    assert_eq!(g, [-2.0, -4.0]);

    let mut xs = [0.0; 2];
    let status =
        unsafe { sgeo_maximize_local(obj, x.as_ptr(), 0, 1e-12, 1e-12, xs.as_mut_ptr(), &mut phi) };
    assert_eq!(status, SgeoStatus::Ok);
    assert!(
        phi > -1e-8 && xs.iter().all(|v| v.abs() < 1e-4),
        "{phi} {xs:?}"
    );
    unsafe { sgeo_objective_free(obj) };
}

#[test]
fn errors_are_reported() {
    let mut obj = ptr::null_mut();
    let name = CString::new("no-such-function").unwrap();
    assert_eq!(
        unsafe { sgeo_objective_from_benchmark(name.as_ptr(), &mut obj) },
        SgeoStatus::UnknownFunction
    );
    assert!(obj.is_null());
    assert!(last_error().contains("no-such-function"));

    assert_eq!(
        unsafe { sgeo_objective_from_benchmark(ptr::null(), &mut obj) },
        SgeoStatus::NullPointer
    );
    assert_eq!(
        unsafe { sgeo_objective_from_callbacks(2, None, None, ptr::null_mut(), &mut obj) },
        SgeoStatus::NullPointer
    );
    assert_eq!(
        unsafe {
            sgeo_objective_from_callbacks(0, Some(quad_value), None, ptr::null_mut(), &mut obj)
        },
        SgeoStatus::InvalidArgument
    );

    let bad = ([1.0, 0.0], [0.0, 1.0]);
    let mut cfg = std::mem::MaybeUninit::<SgeoRunConfig>::uninit();
    assert_eq!(
        unsafe { sgeo_default_config(bad.0.as_ptr(), bad.1.as_ptr(), 2, cfg.as_mut_ptr()) },
        SgeoStatus::InvalidArgument
    );

    let name = CString::new("sphere-2").unwrap();
    unsafe { sgeo_objective_from_benchmark(name.as_ptr(), &mut obj) };
    let start = [f64::NAN, 0.0];
    let (mut xs, mut phi) = ([0.0; 2], 0.0);
    let status =
        unsafe { sgeo_maximize_local(obj, start.as_ptr(), 0, 0.0, 0.0, xs.as_mut_ptr(), &mut phi) };
    assert_ne!(status, SgeoStatus::Ok);
    assert!(!last_error().is_empty());

    let mut res = ptr::null_mut();
    let mut cfg = unsafe {
        let mut c = std::mem::MaybeUninit::<SgeoRunConfig>::uninit();
        sgeo_default_config(
            [-1.0, -1.0].as_ptr(),
            [1.0, 1.0].as_ptr(),
            2,
            c.as_mut_ptr(),
        );
        c.assume_init()
    };
    cfg.alpha = 1.5;
    let status = unsafe {
        sgeo_run(
            obj,
            [-1.0, -1.0].as_ptr(),
            [1.0, 1.0].as_ptr(),
            &cfg,
            0,
            &mut res,
        )
    };
    assert_ne!(status, SgeoStatus::Ok);
    assert!(res.is_null());
    unsafe { sgeo_objective_free(obj) };
}

#[test]
fn null_handles_are_tolerated() {
    unsafe {
        sgeo_objective_free(ptr::null_mut());
        sgeo_result_free(ptr::null_mut());
        assert_eq!(sgeo_objective_dim(ptr::null()), 0);
        assert!(sgeo_result_phi_star(ptr::null()).is_nan());
        assert_eq!(sgeo_result_runs_executed(ptr::null()), 0);
    }
}
