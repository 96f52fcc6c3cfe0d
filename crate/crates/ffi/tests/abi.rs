use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use spde_taylor_ffi::*;

unsafe fn take(p: *mut std::ffi::c_char) -> String {
    let s = CStr::from_ptr(p).to_str().unwrap().to_owned();
    spt_string_free(p);
    s
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(spt_last_error()).to_str().unwrap().to_owned() }
}

#[test]
fn wood_round_trip() {
    unsafe {
        let mut w0 = ptr::null_mut();
        assert_eq!(spt_wood_initial(&mut w0), SptStatus::Ok);
        let mut n = 0;
        assert_eq!(spt_wood_active_count(w0, &mut n), SptStatus::Ok);
        assert_eq!(n, 2);
        let (mut t, mut j) = (0, 0);
        assert_eq!(spt_wood_active_node(w0, 1, &mut t, &mut j), SptStatus::Ok);
        assert_eq!((t, j), (3, 1));
        assert_eq!(spt_wood_active_node(w0, 2, &mut t, &mut j), SptStatus::OutOfRange);
        assert!(last_error().contains("active node 2 of 2"));

        let mut w1 = ptr::null_mut();
        assert_eq!(spt_wood_expand(w0, 3, 1, &mut w1), SptStatus::Ok);
        let mut len = 0;
        spt_wood_len(w1, &mut len);
        assert_eq!(len, 6);
        let mut s = ptr::null_mut();
        assert_eq!(spt_wood_order_text(w1, &mut s), SptStatus::Ok);
        assert_eq!(take(s), "δ + min(γ, δ)");
        let mut ord = 0.0;
        spt_wood_order(w1, 0.1, 0.4, &mut ord);
        assert!((ord - 0.5).abs() < 1e-12);

        assert_eq!(spt_wood_serialize(w1, &mut s), SptStatus::Ok);
        let text = CString::new(take(s)).unwrap();
        let mut back = ptr::null_mut();
        assert_eq!(spt_wood_parse(text.as_ptr(), &mut back), SptStatus::Ok);
        let mut psi_a = ptr::null_mut();
        let mut psi_b = ptr::null_mut();
        spt_wood_psi(w1, &mut psi_a);
        spt_wood_psi(back, &mut psi_b);
        assert_eq!(take(psi_a), take(psi_b));

        assert_eq!(spt_wood_expand(w0, 1, 1, &mut back), SptStatus::TreeError);
        spt_wood_free(w0);
        spt_wood_free(w1);
        spt_wood_free(back);
    }
}

#[test]
fn errors_and_null_pointers() {
    unsafe {
        let mut w = ptr::null_mut();
        let bad = CString::new("(3)").unwrap();
        assert_eq!(spt_wood_parse(bad.as_ptr(), &mut w), SptStatus::ParseError);
        assert!(last_error().contains("line 1, column 2"), "{}", last_error());
        assert!(w.is_null());
        assert_eq!(spt_wood_parse(ptr::null(), &mut w), SptStatus::NullPointer);
        assert_eq!(spt_wood_len(ptr::null(), ptr::null_mut()), SptStatus::NullPointer);
        let inert = CString::new("(0)").unwrap();
        assert_eq!(spt_wood_parse(inert.as_ptr(), &mut w), SptStatus::Ok);
        let mut ord = 0.0;
        assert_eq!(spt_wood_order(w, 0.5, 0.5, &mut ord), SptStatus::NoActiveTree);
        spt_wood_free(w);
        spt_wood_free(ptr::null_mut());
        spt_string_free(ptr::null_mut());
    }
}

#[test]
fn symbolic_report_matches_the_library() {
    unsafe {
        let text = CString::new("(0);(1*);(2*)").unwrap();
        let mut s = ptr::null_mut();
        assert_eq!(spt_symbolic_report(text.as_ptr(), &mut s), SptStatus::Ok);
        assert_eq!(take(s), spde_taylor::harness::symbolic_report("(0);(1*);(2*)").unwrap());
    }
}

#[test]
fn converge_from_config_text() {
    let cfg = CString::new("fine = 8\nladder = [2, 3, 4]\npaths = 12\nmodes = 8\nnoise_modes = 8\n").unwrap();
    unsafe {
        let mut r = ptr::null_mut();
        assert_eq!(spt_converge(cfg.as_ptr(), &mut r), SptStatus::Ok);
        let mut n = 0;
        spt_report_row_count(r, &mut n);
        assert_eq!(n, 3);
        let mut row = SptErrorRow::default();
        assert_eq!(spt_report_row(r, 0, &mut row), SptStatus::Ok);
        assert_eq!(row.n_paths, 12);
        assert!(row.error > 0.0 && row.std_error > 0.0);
        assert_eq!(spt_report_row(r, 3, &mut row), SptStatus::OutOfRange);
        let (mut slope, mut pred) = (0.0, 0.0);
        spt_report_slope(r, &mut slope);
        spt_report_predicted(r, &mut pred);
        assert!(slope.is_finite() && (pred - 0.495).abs() < 1e-12);
        let mut v = SptVerdict::Fail;
        assert_eq!(spt_report_verdict(r, &mut v), SptStatus::Ok);
        let mut s = ptr::null_mut();
        spt_report_json(r, &mut s);
        let json: serde_json::Value = serde_json::from_str(&take(s)).unwrap();
        assert_eq!(json["config"]["paths"], 12);
        spt_report_csv(r, &mut s);
        assert_eq!(take(s).lines().count(), 4);
        spt_report_free(r);

        let bad = CString::new("paths = 1\n").unwrap();
        assert_eq!(spt_converge(bad.as_ptr(), &mut r), SptStatus::ConfigError);
        let unknown = CString::new("pahts = 3\n").unwrap();
        assert_eq!(spt_converge(unknown.as_ptr(), &mut r), SptStatus::ConfigError);
    }
}

#[test]
fn c_program_links_against_the_header() {
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    // target/<profile>/deps/abi-xxxx -> target/<profile>
    let exe = std::env::current_exe().unwrap();
    let lib_dir = exe.parent().unwrap().parent().unwrap().to_path_buf();
    if !lib_dir.join("libspde_taylor_ffi.so").exists() {
        eprintln!("shared library not found in {}; skipping", lib_dir.display());
        return;
    }
    let out = tempfile::tempdir().unwrap();
    let bin = out.path().join("smoke");
    let status = Command::new("cc")
        .arg(manifest.join("tests/c/smoke.c"))
        .arg("-I")
        .arg(manifest.join("include"))
        .arg("-L")
        .arg(&lib_dir)
        .arg(format!("-Wl,-rpath,{}", lib_dir.display()))
        .args(["-lspde_taylor_ffi", "-Wall", "-Werror", "-o"])
        .arg(&bin)
        .status()
        .expect("C compiler");
    assert!(status.success());
    let run = Command::new(&bin).output().unwrap();
    let stdout = String::from_utf8_lossy(&run.stdout);
    assert!(run.status.success(), "{stdout}{}", String::from_utf8_lossy(&run.stderr));
    assert!(stdout.contains("order δ + min(γ, δ)"), "{stdout}");
    assert!(stdout.contains("rows ok 1"), "{stdout}");
}
