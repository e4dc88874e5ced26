use std::ffi::{CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use qrepeater_ffi::*;

fn last_error() -> String {
    let p = qr_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn run_through_handles() {
    unsafe {
        let mut cfg = ptr::null_mut();
        assert_eq!(qr_config_new(&mut cfg), QrStatus::Ok);
        assert_eq!(qr_config_set_levels(cfg, 3), QrStatus::Ok);
        assert_eq!(qr_config_set_total_distance_km(cfg, 40.0), QrStatus::Ok);
        assert_eq!(qr_config_set_samples(cfg, 2_000), QrStatus::Ok);
        assert_eq!(qr_config_set_seed(cfg, 9), QrStatus::Ok);

        let mut a = QrStatistics::default();
        let mut b = QrStatistics::default();
        assert_eq!(qr_run(cfg, &mut a), QrStatus::Ok);
        assert_eq!(qr_run(cfg, &mut b), QrStatus::Ok);
        assert_eq!(a, b);
        assert_eq!(a.samples, 2_000);
        assert!(a.mean_rounds >= 1.0);
        assert!((a.secret_key_rate - a.raw_rate * a.secret_key_fraction).abs() <= 1e-9 * a.raw_rate);

        assert_eq!(qr_config_set_protocol(cfg, QrProtocol::Sb), QrStatus::Ok);
        let mut sb = QrStatistics::default();
        assert_eq!(qr_run(cfg, &mut sb), QrStatus::Ok);
        assert_ne!(a.mean_rounds, sb.mean_rounds);
        qr_config_free(cfg);
    }
}

#[test]
fn json_round_trip_and_sample_accessors() {
    unsafe {
        let json = CString::new(
            r#"{"levels": 3, "total_distance_km": 80, "dephasing_time_s": 0.5, "merge_probability": 0.6, "seed": 4}"#,
        )
        .unwrap();
        let mut cfg = ptr::null_mut();
        assert_eq!(qr_config_from_json(json.as_ptr(), &mut cfg), QrStatus::Ok);

        let mut text = ptr::null_mut();
        assert_eq!(qr_config_to_json(cfg, &mut text), QrStatus::Ok);
        let mut again = ptr::null_mut();
        assert_eq!(qr_config_from_json(text, &mut again), QrStatus::Ok);
        qr_string_free(text);
        qr_config_free(again);

        let mut s = ptr::null_mut();
        assert_eq!(qr_sample_new(cfg, 3, &mut s), QrStatus::Ok);
        let mut rounds = 0;
        assert_eq!(qr_sample_rounds(s, &mut rounds), QrStatus::Ok);
        assert!(rounds >= 1);
        let mut gap = u32::MAX;
        assert_eq!(qr_sample_max_gap(s, &mut gap), QrStatus::Ok);
        assert!(gap <= 4);

        let mut probs = [0.0f64; 4];
        assert_eq!(qr_sample_bell_probabilities(s, probs.as_mut_ptr()), QrStatus::Ok);
        assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let (mut e_x, mut e_z) = (0.0, 0.0);
        assert_eq!(qr_sample_qber(s, &mut e_x, &mut e_z), QrStatus::Ok);
        assert!((e_x - (probs[2] + probs[3])).abs() < 1e-15);
        assert!((e_z - (probs[1] + probs[3])).abs() < 1e-15);

        let mut trace = ptr::null_mut();
        assert_eq!(qr_sample_trace_json(s, &mut trace), QrStatus::Ok);
        let parsed: serde_json::Value = serde_json::from_str(CStr::from_ptr(trace).to_str().unwrap()).unwrap();
        assert!(parsed["events"].as_array().is_some_and(|e| !e.is_empty()));
        qr_string_free(trace);

        qr_sample_free(s);
        qr_config_free(cfg);
    }
}

#[test]
fn bad_input_reports_status_and_message() {
    unsafe {
        let mut cfg = ptr::null_mut();
        assert_eq!(qr_config_from_json(ptr::null(), &mut cfg), QrStatus::NullPointer);
        assert!(cfg.is_null());

        let json = CString::new("{\"levels\": 3").unwrap();
        assert_eq!(qr_config_from_json(json.as_ptr(), &mut cfg), QrStatus::Json);

        let json = CString::new(r#"{"levels": 3, "dephasing_time_s": 1, "merge_probability": 0.5}"#).unwrap();
        assert_eq!(qr_config_from_json(json.as_ptr(), &mut cfg), QrStatus::InvalidArgument);
        assert!(last_error().contains("total_distance_km"));

        let mut stats = QrStatistics::default();
        assert_eq!(qr_run(ptr::null(), &mut stats), QrStatus::NullPointer);
        assert_eq!(last_error(), "config is NULL");

        assert_eq!(qr_config_new(&mut cfg), QrStatus::Ok);
        assert_eq!(qr_config_set_levels(cfg, 0), QrStatus::InvalidArgument);
        assert_eq!(qr_run(cfg, ptr::null_mut()), QrStatus::NullPointer);
        qr_config_free(cfg);

        // freeing NULL is a no-op
        qr_config_free(ptr::null_mut());
        qr_sample_free(ptr::null_mut());
        qr_string_free(ptr::null_mut());
    }
}

#[test]
fn version_matches_the_crate() {
    let v = unsafe { CStr::from_ptr(qr_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_is_valid_c() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/qrepeater.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for sym in [
        "qr_config_new",
        "qr_run",
        "qr_sample_trace_json",
        "qr_last_error_message",
        "QR_STATUS_PANIC",
    ] {
        assert!(text.contains(sym), "{sym} missing from header");
    }
    let Ok(status) = Command::new("cc")
        .args(["-fsyntax-only", "-Wall", "-Werror", "-x", "c"])
        .arg(&header)
        .status()
    else {
        eprintln!("no C compiler; skipping syntax check");
        return;
    };
    assert!(status.success());
}
