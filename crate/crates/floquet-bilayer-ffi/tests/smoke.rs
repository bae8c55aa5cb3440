//! Exercises the C ABI through the extern functions directly, plus a real
//! C compile-and-run round trip against the generated header when a C
//! compiler is available.

use floquet_bilayer_ffi::*;
use std::ffi::CStr;

fn p0() -> FbParams {
    FbParams {
        omega: 1.0,
        j1: 0.5,
        eps_xy: 0.0,
        quasi_energy: 2.0,
        u0: 1.0,
        alpha_kx: 0.3,
        beta_ky: 0.4,
        b: 1.0,
        m_base: 0,
        n_len: 1,
    }
}

fn solve_p0() -> *mut FbSolution {
    let params = p0();
    let free = [1.0f64, 0.0, 0.0, 0.0];
    let mut handle: *mut FbSolution = std::ptr::null_mut();
    let status = unsafe { fb_solve(&params, free.as_ptr(), 2, &mut handle) };
    assert_eq!(status, FbStatus::Ok);
    assert!(!handle.is_null());
    handle
}

#[test]
fn solve_eval_verify_roundtrip() {
    let handle = solve_p0();
    let mut spinor = [0.0f64; 4];
    let status = unsafe { fb_eval(handle, 0.0, 0.0, spinor.as_mut_ptr()) };
    assert_eq!(status, FbStatus::Ok);
    assert!((spinor[2] - 2.0).abs() < 1e-10, "down.re = {}", spinor[2]);
    assert!(spinor[3].abs() < 1e-10);

    // wall
    let status = unsafe { fb_eval(handle, 1.0, 0.7, spinor.as_mut_ptr()) };
    assert_eq!(status, FbStatus::Ok);
    assert!(spinor.iter().all(|v| v.abs() < 1e-9));

    let mut summary = FbVerifySummary {
        residual_algebraic: -1.0,
        continuity_value: -1.0,
        continuity_deriv: -1.0,
        boundary_value: -1.0,
        pass: 0,
    };
    let status = unsafe { fb_verify(handle, &mut summary) };
    assert_eq!(status, FbStatus::Ok);
    assert_eq!(summary.pass, 1);
    assert!(summary.residual_algebraic <= 1e-12);

    assert!(unsafe { fb_solution_scale(handle) } > 1.0);

    let json = unsafe { fb_coefficients_json(handle) };
    assert!(!json.is_null());
    let text = unsafe { CStr::from_ptr(json) }.to_str().unwrap().to_owned();
    unsafe { fb_string_free(json) };
    let parsed: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert!(parsed["c"]["0"].is_array());
    assert!(parsed["g"]["1"].is_array());

    unsafe { fb_solution_free(handle) };
}

#[test]
fn error_paths_set_messages_and_codes() {
    // inadmissible configuration
    let mut params = p0();
    params.n_len = 2;
    let mut accept = -1i32;
    let mut bad_index = 0i64;
    let status = unsafe { fb_admissible(&params, &mut accept, &mut bad_index) };
    assert_eq!(status, FbStatus::Ok);
    assert_eq!(accept, 0);
    assert_eq!(bad_index, 4);

    let free = [1.0f64, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0];
    let mut handle: *mut FbSolution = std::ptr::null_mut();
    let status = unsafe { fb_solve(&params, free.as_ptr(), 4, &mut handle) };
    assert_eq!(status, FbStatus::Inadmissible);
    assert!(handle.is_null());
    let msg = unsafe { CStr::from_ptr(fb_last_error()) }.to_str().unwrap();
    assert!(msg.contains("evanescent"), "{msg}");

    // wrong free-constant count
    let params = p0();
    let status = unsafe { fb_solve(&params, free.as_ptr(), 4, &mut handle) };
    assert_eq!(status, FbStatus::InvalidArgument);

    // out-of-domain evaluation
    let handle = solve_p0();
    let mut spinor = [0.0f64; 4];
    let status = unsafe { fb_eval(handle, 2.5, 0.0, spinor.as_mut_ptr()) };
    assert_eq!(status, FbStatus::Domain);
    unsafe { fb_solution_free(handle) };

    // null arguments
    let status = unsafe { fb_eval(std::ptr::null(), 0.0, 0.0, spinor.as_mut_ptr()) };
    assert_eq!(status, FbStatus::InvalidArgument);
    unsafe { fb_solution_free(std::ptr::null_mut()) };
}

#[test]
fn generated_header_covers_the_surface() {
    let header = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("include/floquet_bilayer.h");
    let text = std::fs::read_to_string(&header).expect("header generated at build time");
    for symbol in [
        "fb_solve",
        "fb_solution_free",
        "fb_eval",
        "fb_eval_dz",
        "fb_verify",
        "fb_admissible",
        "fb_coefficients_json",
        "fb_string_free",
        "fb_last_error",
        "FbParams",
        "FbStatus",
        "FbVerifySummary",
    ] {
        assert!(text.contains(symbol), "header missing {symbol}");
    }
}

#[test]
fn c_program_links_and_runs() {
    let cc = ["cc", "gcc", "clang"]
        .iter()
        .find(|c| {
            std::process::Command::new(c)
                .arg("--version")
                .output()
                .map(|o| o.status.success())
                .unwrap_or(false)
        })
        .copied();
    let Some(cc) = cc else {
        eprintln!("no C compiler available; skipping link test");
        return;
    };

    let manifest = std::path::Path::new(env!("CARGO_MANIFEST_DIR"));
    let include = manifest.join("include");
    // workspace target dir: tests run from target/debug/deps
    let lib_dir = std::env::current_exe()
        .unwrap()
        .parent()
        .unwrap()
        .parent()
        .unwrap()
        .to_path_buf();
    let static_lib = lib_dir.join("libfloquet_bilayer_ffi.a");
    if !static_lib.exists() {
        eprintln!(
            "static library not built at {}; skipping",
            static_lib.display()
        );
        return;
    }

    let dir = std::env::temp_dir().join(format!("floquet-ffi-c-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let c_src = dir.join("smoke.c");
    std::fs::write(
        &c_src,
        r#"
#include "floquet_bilayer.h"
#include <stdio.h>
#include <math.h>

int main(void) {
    FbParams params = {1.0, 0.5, 0.0, 2.0, 1.0, 0.3, 0.4, 1.0, 0, 1};
    double free_consts[4] = {1.0, 0.0, 0.0, 0.0};
    FbSolution *sol = NULL;
    if (fb_solve(&params, free_consts, 2, &sol) != FB_STATUS_OK) return 1;
    double spinor[4];
    if (fb_eval(sol, 0.0, 0.0, spinor) != FB_STATUS_OK) return 2;
    if (fabs(spinor[2] - 2.0) > 1e-10) return 3;
    FbVerifySummary summary;
    if (fb_verify(sol, &summary) != FB_STATUS_OK) return 4;
    if (!summary.pass) return 5;
    fb_solution_free(sol);
    printf("ok\n");
    return 0;
}
"#,
    )
    .unwrap();
    let exe = dir.join("smoke");
    let out = std::process::Command::new(cc)
        .arg(&c_src)
        .arg("-I")
        .arg(&include)
        .arg(static_lib)
        .args(["-lm", "-lpthread", "-ldl"])
        .arg("-o")
        .arg(&exe)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "compile failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let run = std::process::Command::new(&exe).output().unwrap();
    std::fs::remove_dir_all(&dir).ok();
    assert_eq!(
        run.status.code(),
        Some(0),
        "C smoke exited {:?}",
        run.status
    );
}
