use std::ffi::{CStr, CString};
use std::ptr;

use resetlab_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(rl_last_error_message()) }.to_string_lossy().into_owned()
}

fn preset(name: &str) -> *mut RlChannel {
    let name = CString::new(name).unwrap();
    let mut ch = ptr::null_mut();
    assert_eq!(unsafe { rl_channel_from_preset(name.as_ptr(), &mut ch) }, RlStatus::Ok);
    assert!(!ch.is_null());
    ch
}

#[test]
fn preset_channel_round_trip() {
    let ch = preset("fig3");
    unsafe {
        let d = rl_channel_dim(ch);
        assert_eq!(d, 8);
        let mut residual = f64::NAN;
        assert_eq!(rl_channel_completeness(ch, &mut residual), RlStatus::Ok);
        assert!(residual < 1e-9);

        // Maximally mixed input, trace must be preserved.
        let mut rho = vec![0.0; 2 * d * d];
        for i in 0..d {
            rho[2 * (i * d + i)] = 1.0 / d as f64;
        }
        let mut out = vec![0.0; 2 * d * d];
        assert_eq!(rl_channel_apply(ch, rho.as_ptr(), out.as_mut_ptr(), out.len()), RlStatus::Ok);
        let trace: f64 = (0..d).map(|i| out[2 * (i * d + i)]).sum();
        assert!((trace - 1.0).abs() < 1e-12);

        let mut sup = vec![0.0; 2 * d.pow(4)];
        assert_eq!(rl_channel_superoperator(ch, sup.as_mut_ptr(), sup.len()), RlStatus::Ok);

        let mut spec = ptr::null_mut();
        assert_eq!(rl_spectrum_new(ch, &mut spec), RlStatus::Ok);
        let n = rl_spectrum_len(spec);
        assert_eq!(n, 64);
        let mut ev = vec![0.0; 2 * n];
        assert_eq!(rl_spectrum_eigenvalues(spec, ev.as_mut_ptr(), ev.len()), RlStatus::Ok);
        assert!((ev[0] - 1.0).abs() < 1e-8 && ev[1].abs() < 1e-8);
        let (mut res, mut def) = (f64::NAN, f64::NAN);
        assert_eq!(rl_spectrum_diagnostics(spec, &mut res, &mut def), RlStatus::Ok);
        assert!(res < 1e-7 && def >= 1.0);
        rl_spectrum_free(spec);

        let mut s = vec![0.0; 4];
        assert_eq!(rl_qmi_trajectory(ch, 3, s.as_mut_ptr(), s.len()), RlStatus::Ok);
        assert!((s[0] - 2.0 * std::f64::consts::LN_2).abs() < 1e-12);
        assert!(s[3] <= s[0]);
        rl_channel_free(ch);
    }
}

#[test]
fn json_config_builds_a_channel() {
    let json = CString::new(r#"{"model": {"kind": "pxp"}, "layout": {"n_s": 2, "n_b": 2}, "t": 3.0}"#).unwrap();
    let mut ch = ptr::null_mut();
    unsafe {
        assert_eq!(rl_channel_from_json(json.as_ptr(), &mut ch), RlStatus::Ok);
        assert_eq!(rl_channel_dim(ch), 3);
        rl_channel_free(ch);
    }
}

#[test]
fn errors_are_reported() {
    unsafe {
        let mut ch = ptr::null_mut();
        assert_eq!(rl_channel_from_preset(ptr::null(), &mut ch), RlStatus::NullPointer);
        assert!(ch.is_null());

        let name = CString::new("fig1").unwrap();
        assert_eq!(rl_channel_from_preset(name.as_ptr(), &mut ch), RlStatus::Config);
        assert!(last_error().contains("unknown preset"), "{}", last_error());

        let bad = CString::new(r#"{"model": {"kind": "aah", "jzz": 0.3, "jz": 0.1}, "layout": {"n_s": -1, "n_b": 2}, "t": 1.0}"#).unwrap();
        assert_eq!(rl_channel_from_json(bad.as_ptr(), &mut ch), RlStatus::Config);
        assert!(last_error().contains("n_s"), "{}", last_error());

        let ch = preset("fig3");
        let mut tiny = [0.0; 3];
        assert_eq!(rl_spectrum_eigenvalues(ptr::null(), tiny.as_mut_ptr(), 3), RlStatus::NullPointer);
        assert_eq!(rl_channel_superoperator(ch, tiny.as_mut_ptr(), tiny.len()), RlStatus::BufferTooSmall);
        assert_eq!(rl_channel_dim(ptr::null()), 0);
        rl_channel_free(ch);
        rl_channel_free(ptr::null_mut());
        rl_spectrum_free(ptr::null_mut());
    }
    let v = unsafe { CStr::from_ptr(rl_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_declares_the_interface() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/resetlab.h")).unwrap();
    for name in [
        "rl_channel_from_json",
        "rl_channel_apply",
        "rl_spectrum_eigenvalues",
        "rl_qmi_trajectory",
        "rl_last_error_message",
        "typedef struct RlChannel RlChannel",
        "RL_STATUS_OK",
    ] {
        assert!(header.contains(name), "{name} missing from header");
    }
}
