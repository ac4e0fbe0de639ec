use std::ffi::CStr;
use std::ptr;

use cheeger_ffi::*;

fn last_error() -> String {
    let p = cheeger_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn zt_matches_the_closed_form_on_a_diagonal_tensor() {
    let p = [2.0, 0.0, 0.0, 0.5];
    let dw = [1.0, -1.0];
    let br = [0.5, 2.0];
    let t = 3.0;
    let mut out = 0.0;
    let s = unsafe { cheeger_zt(p.as_ptr(), dw.as_ptr(), br.as_ptr(), 2, t, &mut out) };
    assert_eq!(s, CheegerStatus::Ok);
    let c = [dw[0] + 0.5 * t * br[0], dw[1] + 0.5 * t * br[1]];
    let expect = 3.0 * t * (c[0] * c[0] / (1.0 + t * 2.0) + c[1] * c[1] / (1.0 + t * 0.5));
    assert!((out - expect).abs() < 1e-12 * expect);
}

#[test]
fn zt_rejects_bad_input() {
    let p = [1.0, 2.0, 0.0, 1.0];
    let v = [0.0, 0.0];
    let mut out = 0.0;
    let s = unsafe { cheeger_zt(p.as_ptr(), v.as_ptr(), v.as_ptr(), 2, 1.0, &mut out) };
    assert_eq!(s, CheegerStatus::Input);
    assert!(last_error().contains("symmetric"));
    let s = unsafe { cheeger_zt(p.as_ptr(), v.as_ptr(), v.as_ptr(), 2, -1.0, &mut out) };
    assert_eq!(s, CheegerStatus::Domain);
    let s = unsafe { cheeger_zt(ptr::null(), v.as_ptr(), v.as_ptr(), 2, 1.0, &mut out) };
    assert_eq!(s, CheegerStatus::NullPointer);
}

#[test]
fn feasibility_round_trip() {
    let dims = [1u64, 3];
    let num = [1i64, 1];
    let den = [1i64, 1];
    let mut h = ptr::null_mut();
    let s = unsafe { cheeger_feasibility_new(dims.as_ptr(), 2, 3, num.as_ptr(), den.as_ptr(), 1, &mut h) };
    assert_eq!(s, CheegerStatus::Ok);
    let mut lambdas = [0.0; 2];
    let mut side = 0;
    let s = unsafe { cheeger_feasibility_solve(h, lambdas.as_mut_ptr(), 2, &mut side) };
    assert_eq!(s, CheegerStatus::Ok);
    assert_eq!(side, 1);
    assert_eq!(lambdas, [2.0, -1.0]);
    let s = unsafe { cheeger_feasibility_solve(h, lambdas.as_mut_ptr(), 1, ptr::null_mut()) };
    assert_eq!(s, CheegerStatus::BufferTooSmall);
    unsafe { cheeger_feasibility_free(h) };
}

#[test]
fn infeasible_and_invalid_instances() {
    let dims = [2u64, 2];
    // a = b = 1 sits on the threshold A(l-1)/(A+B) = 1, which is infeasible
    let num = [1i64, 1];
    let den = [1i64, 1];
    let mut h = ptr::null_mut();
    assert_eq!(
        unsafe { cheeger_feasibility_new(dims.as_ptr(), 2, 3, num.as_ptr(), den.as_ptr(), 1, &mut h) },
        CheegerStatus::Ok
    );
    let mut lambdas = [0.0; 2];
    assert_eq!(unsafe { cheeger_feasibility_solve(h, lambdas.as_mut_ptr(), 2, ptr::null_mut()) }, CheegerStatus::Infeasible);
    unsafe { cheeger_feasibility_free(h) };

    let zero = [0i64, 1];
    let s = unsafe { cheeger_feasibility_new(dims.as_ptr(), 2, 3, num.as_ptr(), zero.as_ptr(), 1, &mut h) };
    assert_eq!(s, CheegerStatus::Input);
    assert!(h.is_null());
    unsafe { cheeger_feasibility_free(ptr::null_mut()) };
}

#[test]
fn counterexample_handle() {
    let mut h = ptr::null_mut();
    assert_eq!(unsafe { cheeger_counterexample_new(6, &mut h) }, CheegerStatus::Ok);
    let (mut l1, mut l2, mut ric, mut t0) = (0.0, 0.0, 0.0, 0.0);
    assert_eq!(unsafe { cheeger_counterexample_constants(h, &mut l1, &mut l2, &mut ric, &mut t0) }, CheegerStatus::Ok);
    assert!(l1 > 0.0 && l2 < 0.0);
    assert!((ric - (l1 + 4.0 * l2)).abs() < 1e-12);
    assert!((ric + 4.0 / 3.0).abs() < 1e-12);
    assert!(t0 > 0.0);
    let grid = [0.0, 1.0, 1e3, 1e6];
    let mut out = [0.0; 4];
    assert_eq!(
        unsafe { cheeger_counterexample_ricci(h, grid.as_ptr(), 4, 1e-8, out.as_mut_ptr()) },
        CheegerStatus::Ok
    );
    assert!(out.iter().all(|r| (r - ric).abs() < 1e-8));
    unsafe { cheeger_counterexample_free(h) };

    assert_eq!(unsafe { cheeger_counterexample_new(4, &mut h) }, CheegerStatus::Input);
    assert!(h.is_null());
    assert!(!last_error().is_empty());
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/cheeger.h")).unwrap();
    for name in [
        "cheeger_last_error_message",
        "cheeger_zt",
        "cheeger_feasibility_new",
        "cheeger_feasibility_solve",
        "cheeger_feasibility_free",
        "cheeger_counterexample_new",
        "cheeger_counterexample_constants",
        "cheeger_counterexample_ricci",
        "cheeger_counterexample_free",
        "CHEEGER_STATUS_INFEASIBLE = 9",
    ] {
        assert!(header.contains(name), "{name}");
    }
}

#[test]
fn header_compiles_as_c_and_cpp() {
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(
        &src,
        r#"#include <stdio.h>
#include "cheeger.h"
int main(void) {
    CheegerFeasibility *f = NULL;
    uint64_t dims[] = {1, 3};
    int64_t num[] = {1, 1}, den[] = {1, 1};
    double lambdas[2];
    if (cheeger_feasibility_new(dims, 2, 3, num, den, 1, &f) != CHEEGER_STATUS_OK)
        fprintf(stderr, "%s\n", cheeger_last_error_message());
    cheeger_feasibility_solve(f, lambdas, 2, NULL);
    cheeger_feasibility_free(f);
    return 0;
}
"#,
    )
    .unwrap();
    let include = concat!(env!("CARGO_MANIFEST_DIR"), "/include");
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    for lang in ["c", "c++"] {
        let status = match std::process::Command::new(&cc)
            .args(["-fsyntax-only", "-Wall", "-Werror", "-x", lang, "-I", include])
            .arg(&src)
            .status()
        {
            Ok(s) => s,
            Err(e) => {
                eprintln!("no C compiler ({cc}: {e}), header not compiled");
                return;
            }
        };
        assert!(status.success(), "{lang} compile of cheeger.h failed");
    }
}
