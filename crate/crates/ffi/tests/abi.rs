use std::ffi::CStr;
use std::path::Path;
use std::process::Command;
use std::ptr;

use tsscreen_ffi::*;

fn last_error() -> String {
    let p = tss_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn simulate(p: usize, seed: u64) -> *mut TssDataset {
    let mut ds = ptr::null_mut();
    let st = unsafe { tss_simulate_preset(TssCase::C1, TssDist::Gaussian, p, 0.4, 0.6, seed, 0, &mut ds) };
    assert_eq!(st, TssStatus::Ok);
    ds
}

#[test]
fn dataset_round_trip() {
    let x = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
    let y = [7.0, 8.0, 9.0];
    let mut ds = ptr::null_mut();
    unsafe {
        assert_eq!(tss_dataset_new(x.as_ptr(), y.as_ptr(), 3, 2, &mut ds), TssStatus::Ok);
        let (mut n, mut p) = (0, 0);
        assert_eq!(tss_dataset_dims(ds, &mut n, &mut p), TssStatus::Ok);
        assert_eq!((n, p), (3, 2));
        let mut bx = [0.0; 6];
        assert_eq!(tss_dataset_copy_x(ds, bx.as_mut_ptr(), 6), TssStatus::Ok);
        assert_eq!(bx, x);
        let mut by = [0.0; 3];
        assert_eq!(tss_dataset_copy_y(ds, by.as_mut_ptr(), 3), TssStatus::Ok);
        assert_eq!(by, y);
        assert_eq!(tss_dataset_copy_y(ds, by.as_mut_ptr(), 2), TssStatus::BufferTooSmall);
        assert!(last_error().contains("need 3"));
        tss_dataset_free(ds);
        tss_dataset_free(ptr::null_mut());
    }
}

#[test]
fn screening_matches_library() {
    let ds = simulate(50, 9);
    let spec = TssScreenSpec { method: TssMethod::Glss, band: 15, taper: 1, standardize: 1 };
    let mut s = ptr::null_mut();
    unsafe {
        assert_eq!(tss_screen(ds, &spec, 10, &mut s), TssStatus::Ok);
        assert_eq!(tss_screening_selected_len(s), 10);
        let mut scores = vec![0.0; 50];
        assert_eq!(tss_screening_scores(s, scores.as_mut_ptr(), 50), TssStatus::Ok);
        let mut sel = vec![0usize; 10];
        assert_eq!(tss_screening_selected(s, sel.as_mut_ptr(), 10), TssStatus::Ok);
        let mut rank = vec![0usize; 50];
        assert_eq!(tss_screening_ranking(s, rank.as_mut_ptr(), 50), TssStatus::Ok);

        let design = tsscreen::dgp::preset_design(
            tsscreen::dgp::PresetCase::C1,
            50,
            tsscreen::dgp::PresetDist::Gaussian,
            tsscreen::dgp::PresetParams { gamma: Some(0.4), alpha: 0.6, seed: 9 },
        )
        .unwrap();
        let sim = tsscreen::dgp::generate(&design, 0).unwrap();
        let r = tsscreen::screen::screen(
            &sim.x,
            &sim.y,
            tsscreen::screen::Method::Glss { band: 15, taper: true },
            true,
            tsscreen::screen::Rule::Top { d: 10 },
        )
        .unwrap();
        assert_eq!(scores, r.scores);
        assert_eq!(sel, r.selected);
        assert_eq!(rank, r.ranking);
        tss_screening_free(s);
        tss_dataset_free(ds);
    }
}

#[test]
fn errors_map_to_status_codes() {
    let ds = simulate(20, 1);
    let spec = TssScreenSpec { method: TssMethod::Glss, band: 500, taper: 0, standardize: 1 };
    let mut s = ptr::null_mut();
    unsafe {
        assert_eq!(tss_screen(ds, &spec, 5, &mut s), TssStatus::InvalidArgument);
        assert!(last_error().contains("max lag 500"), "{}", last_error());
        assert!(s.is_null());
        assert_eq!(tss_screen(ptr::null(), &spec, 5, &mut s), TssStatus::NullPointer);
        let mut out = ptr::null_mut();
        let st = tss_simulate_preset(TssCase::C2a, TssDist::T5, 10, 0.0, 1.5, 1, 0, &mut out);
        assert_eq!(st, TssStatus::InvalidArgument);
        let (mut j, mut v) = (0.0, 0.0);
        assert_eq!(tss_asy_var(0.6, 0.0, 1.0, 1.0, &mut j, &mut v), TssStatus::Ok);
        assert!((v - 1.5625).abs() < 1e-12 && (j - 1.0 / 1.36).abs() < 1e-12);
        assert_eq!(tss_asy_var(1.0, 0.0, 1.0, 1.0, &mut j, &mut v), TssStatus::InvalidArgument);
        tss_dataset_free(ds);
    }
}

#[test]
fn two_stage_recovers_signal() {
    let ds = simulate(100, 4);
    let spec = TssScreenSpec { method: TssMethod::Glss, band: 15, taper: 1, standardize: 1 };
    let mut coefs = vec![0.0; 100];
    let mut icpt = f64::NAN;
    unsafe {
        let st = tss_two_stage(ds, &spec, 50, coefs.as_mut_ptr(), 100, &mut icpt);
        assert_eq!(st, TssStatus::Ok, "{}", last_error());
        assert!(icpt.is_finite());
        assert!(coefs[..6].iter().all(|c| (c - 0.5).abs() < 0.3), "{coefs:?}");
        assert_eq!(tss_two_stage(ds, &spec, 50, coefs.as_mut_ptr(), 99, &mut icpt), TssStatus::BufferTooSmall);
        let st = tss_two_stage(ds, ptr::null(), 0, coefs.as_mut_ptr(), 100, ptr::null_mut());
        assert_eq!(st, TssStatus::Ok);
        tss_dataset_free(ds);
    }
}

#[test]
fn header_compiles_as_c_and_cpp() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/tsscreen.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for f in ["tss_dataset_new", "tss_screen", "tss_two_stage", "tss_last_error", "TSS_STATUS_PANIC"] {
        assert!(text.contains(f), "{f} missing from header");
    }
    for (cc, lang) in [("cc", "c"), ("c++", "c++")] {
        let Ok(out) = Command::new(cc)
            .args(["-fsyntax-only", "-Wall", "-Werror", "-x", lang])
            .arg(&header)
            .output()
        else {
            eprintln!("{cc} not available; skipping");
            continue;
        };
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
}
