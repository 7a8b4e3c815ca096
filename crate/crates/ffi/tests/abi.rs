use std::ffi::CStr;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use afc_raman_ffi::*;

fn last_error() -> String {
    let p = afc_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn comb(gamma: f64, alpha_l: f64) -> *mut AfcComb {
    let mut c = ptr::null_mut();
    assert_eq!(unsafe { afc_comb_new(gamma, 150e3, 2e6, alpha_l, &mut c) }, AfcStatus::Ok);
    c
}

fn protocol(theta0_sq: f64, t_d: f64) -> *mut AfcProtocol {
    let mut p = ptr::null_mut();
    assert_eq!(unsafe { afc_protocol_new(theta0_sq, t_d, 5e-6, &mut p) }, AfcStatus::Ok);
    p
}

#[test]
fn comb_handle() {
    let c = comb(30e3, 10.0);
    unsafe {
        assert_eq!(afc_comb_finesse(c), 5.0);
        assert!((afc_comb_effective_depth(c) - 2.1289).abs() < 1e-4);
        assert!(afc_comb_density(c, 0.0) > afc_comb_density(c, 75e3));
        let (mut re, mut im) = (0.0, 0.0);
        assert_eq!(afc_comb_fourier(c, 0.0, &mut re, &mut im), AfcStatus::Ok);
        assert!((re - 1.0).abs() < 1e-6 && im.abs() < 1e-12);
        assert_eq!(afc_comb_fourier(c, 0.0, ptr::null_mut(), &mut im), AfcStatus::NullPointer);
        afc_comb_free(c);
        afc_comb_free(ptr::null_mut());
        assert!(afc_comb_finesse(ptr::null()).is_nan());
    }
}

#[test]
fn error_codes() {
    let mut c = ptr::null_mut();
    assert_eq!(unsafe { afc_comb_new(0.0, 150e3, 2e6, 1.0, &mut c) }, AfcStatus::InvalidParameter);
    assert!(c.is_null());
    assert!(last_error().contains("gamma_fwhm"));

    let mut p = ptr::null_mut();
    assert_eq!(unsafe { afc_protocol_new(0.5, 1e-6, 1e-6, &mut p) }, AfcStatus::Regime);

    let c = comb(30e3, 10.0);
    let p = protocol(0.1, 7e-6);
    let mut r = AfcEfficiencyReport::default();
    unsafe {
        assert_eq!(afc_full_report(c, p, &mut r), AfcStatus::Regime);
        assert!(last_error().contains("2pi/delta0"));
        assert_eq!(afc_full_report(ptr::null(), p, &mut r), AfcStatus::NullPointer);
        afc_protocol_free(p);
        afc_comb_free(c);
    }

    let mut o = AfcOptimizationResult::default();
    assert_eq!(unsafe { afc_optimize_finesse(1.0, 17, &mut o) }, AfcStatus::InvalidParameter);
    assert_eq!(unsafe { afc_comb_new(1.0, 1.0, 1.0, 1.0, ptr::null_mut()) }, AfcStatus::NullPointer);
}

#[test]
fn reports() {
    let c = comb(30e3, 10.0);
    let p = protocol(0.1, 2e-6);
    let mut r = AfcEfficiencyReport::default();
    unsafe {
        assert_eq!(afc_full_report(c, p, &mut r), AfcStatus::Ok);
        afc_protocol_free(p);
        afc_comb_free(c);
    }
    assert!((r.eta_readout - 0.6627).abs() < 1e-4);
    assert!((r.snr_lower_bound - 13.44).abs() < 0.01);
    assert_eq!(r.mode_capacity, 13);

    let lp = AfcLinkParams {
        distance_km: 1.0,
        attenuation_db_per_km: 9.0,
        eta_c: 0.5,
        eta_d: 0.7,
        rate_hz: 1e3,
        p: 0.05,
        full_distance: false,
    };
    let mut lr = AfcLinkReport::default();
    assert_eq!(unsafe { afc_link_report(&lp, &mut lr) }, AfcStatus::Ok);
    assert!((lr.t_entangle_s - 0.0805).abs() < 1e-4);
    let dead = AfcLinkParams { eta_d: 0.0, ..lp };
    assert_eq!(unsafe { afc_link_report(&dead, &mut lr) }, AfcStatus::Unreachable);

    let mut o = AfcOptimizationResult::default();
    assert_eq!(unsafe { afc_optimize_finesse(0.1, AfcObjective::RamanBackward as u32, &mut o) }, AfcStatus::Ok);
    assert!((o.f_star - 3.8).abs() < 0.01 && !o.at_boundary);
}

#[test]
fn trace_round_trip() {
    let c = comb(30e3, 10.0);
    let p = protocol(0.01, 2e-6);
    let mut t = ptr::null_mut();
    unsafe {
        assert_eq!(afc_simulate_readout(c, p, AfcDirection::Backward as u32, &mut t), AfcStatus::Ok);
        let n = afc_trace_len(t);
        let (mut times, mut flux) = (vec![0.0; n], vec![0.0; n]);
        assert_eq!(afc_trace_copy(t, times.as_mut_ptr(), flux.as_mut_ptr(), n), AfcStatus::Ok);
        assert_eq!(afc_trace_copy(t, times.as_mut_ptr(), flux.as_mut_ptr(), n - 1), AfcStatus::BufferTooSmall);
        let peak = afc_trace_peak_time(t);
        let i = times.iter().position(|&x| x == peak).unwrap();
        assert!(flux.iter().all(|&f| f <= flux[i]));
        assert!((afc_trace_mode_counts(t) - 0.6627).abs() < 0.01);
        assert_eq!(afc_simulate_readout(c, p, 9, &mut t), AfcStatus::InvalidParameter);
        afc_trace_free(t);
        afc_protocol_free(p);
        afc_comb_free(c);
    }
}

fn header() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("include/afc_raman.h")
}

#[test]
fn header_declares_api() {
    let h = std::fs::read_to_string(header()).unwrap();
    for name in [
        "AFC_STATUS_OK",
        "AFC_STATUS_REGIME",
        "AFC_OBJECTIVE_RAMAN_BACKWARD",
        "AFC_DIRECTION_FORWARD",
        "typedef struct AfcComb AfcComb;",
        "afc_comb_new",
        "afc_full_report",
        "afc_link_report",
        "afc_optimize_finesse",
        "afc_simulate_readout",
        "afc_trace_copy",
        "afc_last_error_message",
    ] {
        assert!(h.contains(name), "{name} missing from header");
    }
}

fn staticlib() -> Option<PathBuf> {
    let deps = std::env::current_exe().ok()?.parent()?.to_path_buf();
    [deps.parent()?.to_path_buf(), deps]
        .iter()
        .map(|d| d.join("libafc_raman_ffi.a"))
        .find(|p| p.exists())
}

#[test]
fn c_program_links_against_header() {
    let Some(lib) = staticlib() else {
        eprintln!("static library not found next to the test binary; skipping C build");
        return;
    };
    let dir = tempfile::tempdir().unwrap();
    let exe = dir.path().join("smoke");
    let src = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/c/smoke.c");
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    let built = match Command::new(&cc)
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(header().parent().unwrap())
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .output()
    {
        Ok(o) => o,
        Err(e) => {
            eprintln!("no C compiler ({e}); skipping C build");
            return;
        }
    };
    assert!(built.status.success(), "{}", String::from_utf8_lossy(&built.stderr));
    let run = Command::new(&exe).output().unwrap();
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    assert!(String::from_utf8_lossy(&run.stdout).starts_with("ok 0.1.0"));
}
