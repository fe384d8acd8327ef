use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use hyperdual_ffi::*;

fn c(re: f64, im: f64) -> HdComplex {
    HdComplex { re, im }
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(hd_last_error()) }.to_string_lossy().into_owned()
}

fn weights(m1: HdComplex, m2: i64, l1: HdComplex, l2: i64) -> *mut HdWeights {
    let mut w = ptr::null_mut();
    assert_eq!(unsafe { hd_weights_new(m1, m2, l1, l2, 2.5, &mut w) }, HdStatus::Ok, "{}", last_error());
    w
}

#[test]
fn parses_complex_text() {
    let mut z = c(0.0, 0.0);
    let text = CString::new("1.5-2i").unwrap();
    assert_eq!(unsafe { hd_parse_complex(text.as_ptr(), &mut z) }, HdStatus::Ok);
    assert_eq!(z, c(1.5, -2.0));
    let bad = CString::new("1.5 - 2i").unwrap();
    assert_eq!(unsafe { hd_parse_complex(bad.as_ptr(), &mut z) }, HdStatus::Config);
    assert!(last_error().contains("a+bi"));
}

#[test]
fn invalid_weights_are_config_errors() {
    let mut w = ptr::null_mut();
    let st = unsafe { hd_weights_new(c(1.0, 0.0), 1, c(1.0, 0.0), 2, 2.5, &mut w) };
    assert_eq!(st, HdStatus::Config);
    assert!(w.is_null());
    assert!(last_error().contains("balance"));
}

#[test]
fn null_outputs_are_reported() {
    assert_eq!(unsafe { hd_weights_new(c(2.3, 0.0), 1, c(1.3, 0.0), 2, 2.5, ptr::null_mut()) }, HdStatus::NullPointer);
    assert_eq!(unsafe { hd_weights_dim(ptr::null()) }, 0);
    assert_eq!(unsafe { hd_report_pass(ptr::null()) }, 0);
    assert!(unsafe { hd_report_json(ptr::null()) }.is_null());
    unsafe {
        hd_weights_free(ptr::null_mut());
        hd_report_free(ptr::null_mut());
    }
}

#[test]
fn k_ratio_matches_corollary_through_the_abi() {
    let w = weights(c(2.3, 0.0), 1, c(1.3, 0.0), 2);
    let mut d = ptr::null_mut();
    assert_eq!(unsafe { hd_weights_swapped(w, &mut d) }, HdStatus::Ok);
    assert_eq!(unsafe { hd_weights_dim(w) }, 2);
    let z = c(1.0, 2.0);
    for b in 0..2 {
        let mut ratio = c(0.0, 0.0);
        assert_eq!(unsafe { hd_corollary_ratio(w, b, &mut ratio) }, HdStatus::Ok);
        for a in 0..2 {
            let (mut k, mut kd, mut err) = (c(0.0, 0.0), c(0.0, 0.0), 0.0);
            assert_eq!(unsafe { hd_integral_k(w, a, b, z, 0.0, &mut k, &mut err) }, HdStatus::Ok);
            assert_eq!(unsafe { hd_integral_k(d, a, b, z, 0.0, &mut kd, ptr::null_mut()) }, HdStatus::Ok);
            assert!(err < 1e-6);
            let q = num_complex::Complex64::new(k.re, k.im) / num_complex::Complex64::new(kd.re, kd.im);
            let r = num_complex::Complex64::new(ratio.re, ratio.im);
            assert!((q / r - 1.0).norm() < 1e-6, "a={a} b={b}: {q} vs {r}");
        }
    }
    unsafe {
        hd_weights_free(w);
        hd_weights_free(d);
    }
}

#[test]
fn lower_half_plane_is_rejected() {
    let w = weights(c(2.3, 0.0), 1, c(1.3, 0.0), 2);
    let mut out = c(0.0, 0.0);
    assert_eq!(unsafe { hd_integral_i(w, 0, 0, c(1.0, -2.0), 0.0, &mut out, ptr::null_mut()) }, HdStatus::Config);
    let mut r = ptr::null_mut();
    assert_eq!(unsafe { hd_duality_check(w, c(1.0, 0.0), 1e-5, &mut r) }, HdStatus::Config);
    assert!(r.is_null());
    unsafe { hd_weights_free(w) };
}

#[test]
fn reports_carry_json() {
    let w = weights(c(2.3, 0.0), 1, c(1.3, 0.0), 2);
    let mut r = ptr::null_mut();
    assert_eq!(unsafe { hd_duality_check(w, c(1.0, 2.0), 1e-5, &mut r) }, HdStatus::Ok);
    assert_eq!(unsafe { hd_report_pass(r) }, 1);
    assert!(unsafe { hd_report_max_rel_err(r) } < 1e-5);
    let json = unsafe { CStr::from_ptr(hd_report_json(r)) }.to_str().unwrap().to_owned();
    assert!(json.starts_with("{\"schema\":1,\"check\":\"duality-check\""), "{json}");
    unsafe {
        hd_report_free(r);
        hd_weights_free(w);
    }
}

#[test]
fn selberg_closed_form_at_one_loop() {
    let mut j = c(0.0, 0.0);
    assert_eq!(unsafe { hd_selberg_closed(1, c(0.7, 0.0), 2.5, &mut j) }, HdStatus::Ok);
    let mut r = ptr::null_mut();
    assert_eq!(unsafe { hd_selberg_check(1, c(0.7, 0.0), 2.5, 1e-6, &mut r) }, HdStatus::Ok);
    assert_eq!(unsafe { hd_report_pass(r) }, 1);
    unsafe { hd_report_free(r) };
    // a Gamma pole: 1 + m/κ = 0
    assert_eq!(unsafe { hd_selberg_closed(1, c(-2.5, 0.0), 2.5, &mut j) }, HdStatus::Math);
}

#[test]
fn unknown_criterion() {
    let mut r = ptr::null_mut();
    assert_eq!(unsafe { hd_criterion(0, &mut r) }, HdStatus::Config);
}

#[test]
fn header_declares_the_abi() {
    let header = std::fs::read_to_string(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include/hyperdual.h")).unwrap();
    for name in [
        "hd_last_error",
        "hd_version",
        "hd_parse_complex",
        "hd_weights_new",
        "hd_weights_free",
        "hd_weights_swapped",
        "hd_weights_dim",
        "hd_integral_k",
        "hd_integral_i",
        "hd_corollary_ratio",
        "hd_selberg_closed",
        "hd_selberg_check",
        "hd_duality_check",
        "hd_criterion",
        "hd_report_pass",
        "hd_report_max_rel_err",
        "hd_report_json",
        "hd_report_free",
        "typedef struct HdWeights HdWeights",
        "HD_STATUS_NO_CONVERGENCE = 5",
    ] {
        assert!(header.contains(name), "{name} missing from header");
    }
}

const C_PROGRAM: &str = r#"
#include <stdio.h>
#include "hyperdual.h"

int main(void) {
    HdComplex m1 = {2.3, 0.0}, l1 = {1.3, 0.0}, z = {1.0, 2.0}, k;
    HdWeights *w = NULL;
    HdReport *r = NULL;
    if (hd_weights_new(m1, 1, l1, 2, 2.5, &w) != HD_STATUS_OK) return 10;
    if (hd_integral_k(w, 0, 0, z, 0.0, &k, NULL) != HD_STATUS_OK) return 11;
    if (hd_duality_check(w, z, 1e-5, &r) != HD_STATUS_OK) return 12;
    printf("pass=%d k=%.6e%+.6ei\n", hd_report_pass(r), k.re, k.im);
    hd_report_free(r);
    hd_weights_free(w);
    if (hd_integral_k(NULL, 0, 0, z, 0.0, &k, NULL) != HD_STATUS_NULL_POINTER) return 13;
    return 0;
}
"#;

/// Compiles a small C client against the header and the static library.
#[test]
fn c_client_links_and_runs() {
    let Some(cc) = ["cc", "gcc", "clang"].into_iter().find(|c| Command::new(c).arg("--version").output().is_ok()) else {
        eprintln!("no C compiler; skipped");
        return;
    };
    let exe = std::env::current_exe().unwrap();
    let profile = exe.parent().and_then(|d| d.parent()).unwrap();
    let lib = profile.join("libhyperdual_ffi.a");
    if !lib.exists() {
        eprintln!("{} not built; skipped", lib.display());
        return;
    }
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR"));
    let src = dir.join("client.c");
    let bin = dir.join("client");
    std::fs::write(&src, C_PROGRAM).unwrap();
    let include = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include");
    let status = Command::new(cc)
        .arg("-I")
        .arg(&include)
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success(), "C client failed to compile");
    let out = Command::new(&bin).output().unwrap();
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "exit {:?}: {text}", out.status.code());
    assert!(text.starts_with("pass=1 k="), "{text}");
}
