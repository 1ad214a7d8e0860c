use std::ffi::CStr;
use std::ptr;

use hpe_accel_ffi::*;

fn stop(max_iter: usize) -> HpeStopping {
    HpeStopping {
        max_iter,
        criterion: HpeStopCriterion::None,
        tol: 0.0,
    }
}

fn last_error() -> String {
    let p = hpe_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn quadratic(dim: usize) -> *mut HpeProblem {
    let mut p = ptr::null_mut();
    assert_eq!(unsafe { hpe_problem_quadratic(dim, 0.05, 1.0, 11, &mut p) }, HpeStatus::Ok);
    p
}

#[test]
fn ahpe_run_round_trip() {
    let p = quadratic(8);
    assert_eq!(unsafe { hpe_problem_dim(p) }, 8);
    let mut t = ptr::null_mut();
    let st = unsafe { hpe_run_ahpe(p, ptr::null(), 0, 0.0, 1.0, 0, stop(40), &mut t) };
    assert_eq!(st, HpeStatus::Ok);
    assert_eq!(unsafe { hpe_trace_len(t) }, 40);
    let mut row = HpeTraceRow {
        k: 0,
        lambda: 0.0,
        a: 0.0,
        a_sum: 0.0,
        value_gap: 0.0,
        dist_x: 0.0,
        dist_y: 0.0,
        v_norm: 0.0,
        eps: 0.0,
        residual_ratio: 0.0,
        step_norm: 0.0,
    };
    assert_eq!(unsafe { hpe_trace_row(t, 0, &mut row) }, HpeStatus::Ok);
    assert_eq!(row.k, 1);
    assert_eq!(row.a, 1.0);
    assert_eq!(row.a_sum, 1.0);
    assert!(row.value_gap.is_finite());
    assert_eq!(unsafe { hpe_trace_row(t, 40, &mut row) }, HpeStatus::OutOfRange);
    let mut term = HpeTermination::Converged;
    assert_eq!(unsafe { hpe_trace_termination(t, &mut term) }, HpeStatus::Ok);
    assert_eq!(term, HpeTermination::MaxIterations);
    let mut viol = usize::MAX;
    assert_eq!(unsafe { hpe_trace_verify(t, p, &mut viol) }, HpeStatus::Ok);
    assert_eq!(viol, 0);
    let mut y = vec![0.0; 8];
    assert_eq!(unsafe { hpe_trace_final_y(t, y.as_mut_ptr(), 8) }, HpeStatus::Ok);
    assert!(y.iter().all(|v| v.is_finite()));
    assert_eq!(unsafe { hpe_trace_final_y(t, y.as_mut_ptr(), 3) }, HpeStatus::InvalidParameter);
    unsafe {
        hpe_trace_free(t);
        hpe_problem_free(p);
    }
}

#[test]
fn every_method_certifies() {
    let mut quartic = ptr::null_mut();
    assert_eq!(unsafe { hpe_problem_quartic(6, 1.0, 0.5, 4.0, 3, &mut quartic) }, HpeStatus::Ok);
    let mut logistic = ptr::null_mut();
    assert_eq!(unsafe { hpe_problem_logistic(60, 5, 0.05, 4, &mut logistic) }, HpeStatus::Ok);
    let mut l1 = ptr::null_mut();
    assert_eq!(unsafe { hpe_problem_l1(10, 0.05, 1.0, 0.1, 5, &mut l1) }, HpeStatus::Ok);
    let quad = quadratic(10);

    let mut traces = Vec::new();
    let mut t = ptr::null_mut();
    let gap = HpeStopping {
        max_iter: 60,
        criterion: HpeStopCriterion::ValueGap,
        tol: 1e-12,
    };
    assert_eq!(unsafe { hpe_run_tensor(quartic, ptr::null(), 0, 0.1, 0.5, 0.0, f64::NAN, gap, &mut t) }, HpeStatus::Ok);
    traces.push((t, quartic));
    assert_eq!(unsafe { hpe_run_proxgrad(logistic, ptr::null(), 0, 0.9, stop(100), &mut t) }, HpeStatus::Ok);
    traces.push((t, logistic));
    assert_eq!(unsafe { hpe_run_proxgrad(l1, ptr::null(), 0, 0.9, stop(100), &mut t) }, HpeStatus::Ok);
    traces.push((t, l1));
    assert_eq!(unsafe { hpe_run_largestep(quad, ptr::null(), 0, 2, 0.5, 0.0, 10.0, gap, &mut t) }, HpeStatus::Ok);
    traces.push((t, quad));
    assert_eq!(unsafe { hpe_run_ahpe(quad, ptr::null(), 0, 0.9, 1.0, 500, stop(50), &mut t) }, HpeStatus::Ok);
    traces.push((t, quad));

    for (t, p) in traces {
        assert!(unsafe { hpe_trace_len(t) } > 0);
        let mut viol = 1;
        assert_eq!(unsafe { hpe_trace_verify(t, p, &mut viol) }, HpeStatus::Ok);
        assert_eq!(viol, 0);
        unsafe { hpe_trace_free(t) };
    }
    for p in [quartic, logistic, l1, quad] {
        unsafe { hpe_problem_free(p) };
    }
}

#[test]
fn errors_map_to_status_codes() {
    let mut p = ptr::null_mut();
    assert_eq!(unsafe { hpe_problem_quadratic(4, -1.0, 1.0, 1, &mut p) }, HpeStatus::InvalidParameter);
    assert!(p.is_null());
    assert!(!last_error().is_empty());

    assert_eq!(unsafe { hpe_problem_quadratic(4, 0.1, 1.0, 1, ptr::null_mut()) }, HpeStatus::NullPointer);

    let mut q = ptr::null_mut();
    assert_eq!(unsafe { hpe_problem_quartic(4, 1.0, 0.5, 4.0, 1, &mut q) }, HpeStatus::Ok);
    assert_eq!(unsafe { hpe_problem_drop_hessian(q) }, HpeStatus::Ok);
    let mut t = ptr::null_mut();
    let st = unsafe { hpe_run_tensor(q, ptr::null(), 0, 0.1, 0.5, 0.0, f64::NAN, stop(5), &mut t) };
    assert_eq!(st, HpeStatus::MissingCapability, "{}", last_error());
    assert!(t.is_null());

    let x0 = [1.0, 2.0];
    let st = unsafe { hpe_run_proxgrad(q, x0.as_ptr(), 2, 0.9, stop(5), &mut t) };
    assert_eq!(st, HpeStatus::InvalidParameter);
    assert!(last_error().contains("dimension"));

    let st = unsafe { hpe_run_proxgrad(ptr::null(), ptr::null(), 0, 0.9, stop(5), &mut t) };
    assert_eq!(st, HpeStatus::NullPointer);
    assert_eq!(unsafe { hpe_trace_len(ptr::null()) }, 0);
    unsafe {
        hpe_problem_free(q);
        hpe_problem_free(ptr::null_mut());
        hpe_trace_free(ptr::null_mut());
    }
}

#[test]
fn quadratic_from_row_major_parts() {
    let q = [2.0, 0.0, 0.0, 1.0];
    let b = [2.0, 1.0];
    let mut p = ptr::null_mut();
    assert_eq!(
        unsafe { hpe_problem_quadratic_from_parts(q.as_ptr(), b.as_ptr(), 2, 1.0, 2.0, &mut p) },
        HpeStatus::Ok
    );
    let mut t = ptr::null_mut();
    let st = unsafe { hpe_run_ahpe(p, ptr::null(), 0, 0.0, 1.0, 0, stop(80), &mut t) };
    assert_eq!(st, HpeStatus::Ok, "{}", last_error());
    let mut y = [0.0; 2];
    assert_eq!(unsafe { hpe_trace_final_y(t, y.as_mut_ptr(), 2) }, HpeStatus::Ok);
    assert!((y[0] - 1.0).abs() < 1e-8 && (y[1] - 1.0).abs() < 1e-8, "{y:?}");
    unsafe {
        hpe_trace_free(t);
        hpe_problem_free(p);
    }
}

#[test]
fn version_is_nonempty() {
    let v = unsafe { CStr::from_ptr(hpe_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}
