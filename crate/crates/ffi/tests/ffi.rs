use std::ffi::{c_char, CStr};
use std::path::Path;
use std::process::Command;
use std::ptr;

use fgnls_ffi::*;

fn example_surface() -> *mut FgnlsSurface {
    let re = [0.1, 0.0, -0.1];
    let im = [2.0, 0.5, 1.0];
    let mut s = ptr::null_mut();
    let st = unsafe { fgnls_surface_focusing(re.as_ptr(), im.as_ptr(), 3, &mut s) };
    assert_eq!(st, FgnlsStatus::Ok);
    s
}

fn last_error() -> String {
    let mut buf = [0 as c_char; 256];
    unsafe {
        fgnls_last_error_message(buf.as_mut_ptr(), buf.len());
        CStr::from_ptr(buf.as_ptr()).to_string_lossy().into_owned()
    }
}

#[test]
fn example_surface_round_trip() {
    unsafe {
        let s = example_surface();
        assert_eq!(fgnls_surface_genus(s), 2);
        assert!((fgnls_surface_band_sum(s) - 3.5).abs() < 1e-15);
        let mut ctx = ptr::null_mut();
        assert_eq!(fgnls_context_new(s, 0.0, &mut ctx), FgnlsStatus::Ok);
        fgnls_surface_free(s);
        assert_eq!(fgnls_context_genus(ctx), 2);

        let (mut re, mut im) = (0.0, 0.0);
        let half = [0.5, 0.5];
        assert_eq!(fgnls_f_value(ctx, half.as_ptr(), 2, &mut re, &mut im), FgnlsStatus::Ok);
        assert!((re - 1.0 / 7.0).abs() < 1e-8 && im.abs() < 1e-8, "{re} {im}");

        let zero = [0.0, 0.0];
        assert_eq!(fgnls_psi(ctx, 0.0, 0.0, zero.as_ptr(), 2, &mut re, &mut im), FgnlsStatus::Ok);
        assert!(((re * re + im * im).sqrt() - 3.5).abs() < 1e-8);

        let (mut tr, mut ti) = ([0.0; 4], [0.0; 4]);
        assert_eq!(fgnls_period_matrix(ctx, tr.as_mut_ptr(), ti.as_mut_ptr(), 4), FgnlsStatus::Ok);
        assert!((tr[1] - tr[2]).abs() < 1e-8 && (ti[1] - ti[2]).abs() < 1e-8);
        assert!(ti[0] > 0.0 && ti[3] > 0.0);

        let (mut v, mut w) = ([0.0; 2], [0.0; 2]);
        assert_eq!(fgnls_flow_vectors(ctx, v.as_mut_ptr(), w.as_mut_ptr(), 2), FgnlsStatus::Ok);
        assert!(v.iter().chain(&w).all(|x| x.is_finite()));

        assert_eq!(fgnls_theta(ctx, zero.as_ptr(), zero.as_ptr(), 2, &mut re, &mut im), FgnlsStatus::Ok);
        assert!(re > 0.0 && im.abs() < 1e-12);

        let mut res = f64::NAN;
        let omega = [0.3, 0.8];
        assert_eq!(fgnls_jump_residual(ctx, omega.as_ptr(), 2, 8, &mut res), FgnlsStatus::Ok);
        assert!(res < 1e-6, "{res}");
        fgnls_context_free(ctx);
    }
}

#[test]
fn invalid_input_reports_message() {
    unsafe {
        let re = [0.0, 0.0];
        let im = [1.0, 1.0];
        let mut s = ptr::null_mut();
        let st = fgnls_surface_focusing(re.as_ptr(), im.as_ptr(), 2, &mut s);
        assert_eq!(st, FgnlsStatus::InvalidInput);
        assert!(s.is_null());
        assert!(last_error().contains("repeated"), "{}", last_error());

        let json = c"{\"bands\": [[0, 1], [0.5, 2]]}";
        assert_eq!(fgnls_surface_from_json(json.as_ptr(), &mut s), FgnlsStatus::InvalidInput);
        let bad = c"{not json";
        assert_eq!(fgnls_surface_from_json(bad.as_ptr(), &mut s), FgnlsStatus::InvalidInput);
    }
}

#[test]
fn null_and_dimension_errors() {
    unsafe {
        let mut ctx = ptr::null_mut();
        assert_eq!(fgnls_context_new(ptr::null(), 0.0, &mut ctx), FgnlsStatus::NullPointer);
        assert_eq!(fgnls_surface_genus(ptr::null()), 0);
        fgnls_surface_free(ptr::null_mut());
        fgnls_context_free(ptr::null_mut());

        let beta = [0.0, 2.0];
        let alpha = [1.0, 2.5];
        let mut s = ptr::null_mut();
        assert_eq!(fgnls_surface_defocusing(beta.as_ptr(), alpha.as_ptr(), 2, &mut s), FgnlsStatus::Ok);
        assert_eq!(fgnls_context_new(s, 0.0, &mut ctx), FgnlsStatus::Ok);
        let omega = [0.1, 0.2];
        let (mut re, mut im) = (0.0, 0.0);
        assert_eq!(fgnls_f_value(ctx, omega.as_ptr(), 2, &mut re, &mut im), FgnlsStatus::Dimension);
        assert_eq!(fgnls_f_value(ctx, omega.as_ptr(), 1, ptr::null_mut(), &mut im), FgnlsStatus::NullPointer);
        let zero = [0.0];
        assert_eq!(fgnls_psi(ctx, 0.0, 0.0, zero.as_ptr(), 1, &mut re, &mut im), FgnlsStatus::Ok);
        assert!(((re * re + im * im).sqrt() - 0.75).abs() < 1e-8);
        fgnls_context_free(ctx);
        fgnls_surface_free(s);
    }
}

#[test]
fn error_message_truncates_and_reports_length() {
    unsafe {
        let mut s = ptr::null_mut();
        fgnls_surface_from_json(ptr::null(), &mut s);
        let n = fgnls_last_error_message(ptr::null_mut(), 0);
        assert_eq!(n, "json is null".len());
        let mut buf = [1 as c_char; 5];
        assert_eq!(fgnls_last_error_message(buf.as_mut_ptr(), 5), n);
        assert_eq!(CStr::from_ptr(buf.as_ptr()).to_str().unwrap(), "json");
        let msg = CStr::from_ptr(fgnls_status_string(FgnlsStatus::Dimension));
        assert_eq!(msg.to_str().unwrap(), "dimension mismatch");
    }
}

#[test]
fn header_declares_api_and_parses() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/fgnls.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for name in [
        "typedef struct FgnlsSurface FgnlsSurface",
        "typedef struct FgnlsContext FgnlsContext",
        "FGNLS_STATUS_OK = 0",
        "fgnls_surface_focusing",
        "fgnls_context_new",
        "fgnls_f_value",
        "fgnls_psi",
        "fgnls_last_error_message",
    ] {
        assert!(text.contains(name), "header lacks {name}");
    }
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    if let Ok(out) = Command::new(&cc).args(["-fsyntax-only", "-Wall", "-Werror", "-x", "c"]).arg(&header).output() {
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
}
