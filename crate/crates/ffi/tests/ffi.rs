use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use hydrosteer_ffi::*;

const SPHERE: &str = r#"{ "geometry": { "shape": "sphere", "radius": 1.0, "refinement": 1 } }"#;

fn body() -> *mut HsBody {
    let json = CString::new(SPHERE).unwrap();
    let mut b = ptr::null_mut();
    assert_eq!(
        unsafe { hs_body_from_config(json.as_ptr(), &mut b) },
        HsStatus::Ok
    );
    assert!(!b.is_null());
    b
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(hs_last_error()) }
        .to_string_lossy()
        .into_owned()
}

#[test]
fn body_handle_reports_inertia_and_channels() {
    let b = body();
    assert_eq!(unsafe { hs_body_controls(b) }, 6);
    let mut j = [0.0; 36];
    assert_eq!(unsafe { hs_body_inertia(b, j.as_mut_ptr()) }, HsStatus::Ok);
    for i in 0..6 {
        for k in 0..6 {
            assert_eq!(j[6 * i + k], j[6 * k + i]);
        }
        assert!(j[7 * i] > 0.0);
    }
    unsafe { hs_body_free(b) };
}

#[test]
fn bad_config_sets_status_and_message() {
    let json =
        CString::new(r#"{ "geometry": { "shape": "sphere", "radius": -1.0, "refinement": 1 } }"#)
            .unwrap();
    let mut b = ptr::null_mut();
    assert_eq!(
        unsafe { hs_body_from_config(json.as_ptr(), &mut b) },
        HsStatus::Config
    );
    assert!(b.is_null());
    assert!(last_error().contains("geometry.radius"), "{}", last_error());
    assert_eq!(
        unsafe { hs_body_from_config(ptr::null(), &mut b) },
        HsStatus::NullPointer
    );
    assert_eq!(
        unsafe { hs_body_inertia(ptr::null(), ptr::null_mut()) },
        HsStatus::NullPointer
    );
    assert_eq!(unsafe { hs_body_controls(ptr::null()) }, 0);
}

#[test]
fn rest_stays_at_rest_through_the_trajectory_handle() {
    let b = body();
    let mut rest = [0.0; 12];
    rest[6] = 0.5;
    let coefs = vec![0.0; 6 * 9];
    let mut t = ptr::null_mut();
    let status = unsafe {
        hs_integrate_potential(
            b,
            rest.as_ptr(),
            coefs.as_ptr(),
            coefs.len(),
            4,
            1.0,
            0.01,
            &mut t,
        )
    };
    assert_eq!(status, HsStatus::Ok);
    let n = unsafe { hs_trajectory_samples(t) };
    assert!(n > 10);
    let mut sample = [0.0; 13];
    assert_eq!(
        unsafe { hs_trajectory_sample(t, n - 1, sample.as_mut_ptr()) },
        HsStatus::Ok
    );
    assert!((sample[0] - 1.0).abs() < 1e-12);
    // a sphere translating without control keeps its velocity
    assert!((sample[7] - 0.5).abs() < 1e-12);
    assert!((sample[1] - 0.5).abs() < 1e-9);
    assert_eq!(
        unsafe { hs_trajectory_sample(t, n, sample.as_mut_ptr()) },
        HsStatus::Config
    );
    let short = unsafe {
        hs_integrate_potential(b, rest.as_ptr(), coefs.as_ptr(), 3, 4, 1.0, 0.01, &mut t)
    };
    assert_eq!(short, HsStatus::Config);
    unsafe {
        hs_trajectory_free(t);
        hs_body_free(b);
    }
}

#[test]
fn steering_reports_buffer_size() {
    let b = body();
    let rest = [0.0; 12];
    let mut target = [0.0; 12];
    target[0] = 0.05;
    let (mut len, mut res) = (0usize, 0.0);
    let mut small = [0.0; 4];
    let s = unsafe {
        hs_potential_steering(
            b,
            rest.as_ptr(),
            target.as_ptr(),
            1.0,
            4,
            small.as_mut_ptr(),
            4,
            &mut len,
            &mut res,
        )
    };
    assert_eq!(s, HsStatus::BufferTooSmall);
    assert_eq!(len, 54);
    let mut out = vec![0.0; len];
    let s = unsafe {
        hs_potential_steering(
            b,
            rest.as_ptr(),
            target.as_ptr(),
            1.0,
            4,
            out.as_mut_ptr(),
            len,
            &mut len,
            &mut res,
        )
    };
    assert_eq!(s, HsStatus::Ok);
    assert!(res < 1e-6);
    assert!(out.iter().any(|c| *c != 0.0));
    unsafe { hs_body_free(b) };
}

#[test]
fn experiments_run_through_the_c_entry_point() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("c.json");
    std::fs::write(&config, SPHERE).unwrap();
    let path = CString::new(config.to_str().unwrap()).unwrap();
    let out = CString::new(dir.path().join("out").to_str().unwrap()).unwrap();
    let s = unsafe {
        hs_run_experiment(
            HsExperiment::Potentials,
            path.as_ptr(),
            out.as_ptr(),
            ptr::null(),
        )
    };
    assert_eq!(s, HsStatus::Ok);
    assert!(dir.path().join("out/added_mass.json").exists());
    let missing = CString::new("/nonexistent/config.json").unwrap();
    let s = unsafe {
        hs_run_experiment(
            HsExperiment::Simulate,
            missing.as_ptr(),
            out.as_ptr(),
            ptr::null(),
        )
    };
    assert_eq!(s, HsStatus::Config);
}

fn target_dir() -> PathBuf {
    // tests run from <target>/<profile>/deps
    std::env::current_exe()
        .unwrap()
        .parent()
        .unwrap()
        .parent()
        .unwrap()
        .to_path_buf()
}

#[test]
fn c_program_links_against_the_header() {
    let lib = target_dir().join("libhydrosteer_ffi.a");
    if !lib.exists() || Command::new("cc").arg("--version").output().is_err() {
        eprintln!("skipping: no C compiler or static library");
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("smoke.c");
    std::fs::write(
        &src,
        r#"
#include <stdio.h>
#include "hydrosteer.h"
int main(void) {
    HsBody *body = NULL;
    const char *cfg = "{ \"geometry\": { \"shape\": \"sphere\", \"radius\": 1.0, \"refinement\": 0 } }";
    if (hs_body_from_config(cfg, &body) != HS_STATUS_OK) { printf("%s\n", hs_last_error()); return 1; }
    double j[36];
    if (hs_body_inertia(body, j) != HS_STATUS_OK) return 2;
    printf("%zu %.3f\n", hs_body_controls(body), j[0]);
    hs_body_free(body);
    return hs_body_from_config("{", &body) == HS_STATUS_CONFIG ? 0 : 3;
}
"#,
    )
    .unwrap();
    let exe = dir.path().join("smoke");
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    let status = Command::new("cc")
        .arg(&src)
        .arg("-I")
        .arg(&include)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success());
    let out = Command::new(&exe).output().unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stdout)
    );
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("6 "));
}
