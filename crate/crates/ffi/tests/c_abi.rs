use std::ffi::{CStr, CString};
use std::ptr;

use sausage_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(sausage_last_error()) }.to_string_lossy().into_owned()
}

#[test]
fn analytic_functions_match_core() {
    let mut v = f64::NAN;
    assert_eq!(sausage_gaussian_disk_prob(0.0, 1.0, 1.0, &mut v), SausageStatus::Ok);
    assert!((v - (1.0 - (-0.5f64).exp())).abs() < 1e-12);
    assert_eq!(sausage_annulus_hit_prob(0.5, 0.5, 2.0, &mut v), SausageStatus::Ok);
    assert_eq!(v, 1.0);
    assert_eq!(sausage_exit_below_prob(0.25, 0.0, 1.0, &mut v), SausageStatus::Ok);
    assert!((v - 0.75).abs() < 1e-15);

    let mut b = SausageBounds::default();
    assert_eq!(sausage_theorem1_bounds(0.05, 0.5, 1.0, 1.0, 1.0, 1.0, &mut b), SausageStatus::Ok);
    let core = sausage_core::analytic::theorem1_bounds(0.05, 0.5, &Default::default()).unwrap();
    assert_eq!(b.upper, core.upper);
    assert_eq!(b.lower_measure, core.lower_measure);
}

#[test]
fn errors_are_reported() {
    let mut v = 7.0;
    assert_eq!(sausage_annulus_hit_prob(0.5, 1.0, 0.5, &mut v), SausageStatus::InvalidInput);
    assert_eq!(v, 7.0);
    assert!(last_error().contains("b"), "{}", last_error());
    assert_eq!(sausage_annulus_hit_prob(0.5, 0.1, 1.0, ptr::null_mut()), SausageStatus::NullPointer);
    assert!(last_error().contains("result"));
    let mut b = SausageBounds::default();
    assert_eq!(sausage_theorem1_bounds(0.5, 0.5, 1.0, 1.0, 1.0, 1.0, &mut b), SausageStatus::InvalidInput);
}

#[test]
fn path_and_union_handles() {
    let xs = [0.0, 0.5, 1.0];
    let ys = [0.0, 0.0, 0.0];
    let mut path = ptr::null_mut();
    unsafe {
        assert_eq!(sausage_path_from_points(0.5, xs.as_ptr(), ys.as_ptr(), 3, &mut path), SausageStatus::Ok);
    }
    assert_eq!(sausage_path_len(path), 3);
    let mut u = ptr::null_mut();
    assert_eq!(sausage_cover_intervals(path, 0.1, &mut u), SausageStatus::Ok);
    assert_eq!(sausage_union_measure(u), 1.0);
    assert_eq!(sausage_union_count(u), 1);
    let (mut lo, mut hi) = (f64::NAN, f64::NAN);
    assert_eq!(sausage_union_get(u, 0, &mut lo, &mut hi), SausageStatus::Ok);
    assert_eq!((lo, hi), (0.0, 1.0));
    assert_eq!(sausage_union_get(u, 1, &mut lo, &mut hi), SausageStatus::InvalidInput);
    unsafe {
        sausage_union_free(u);
        sausage_path_free(path);
        sausage_path_free(ptr::null_mut());
    }
    assert_eq!(sausage_union_count(ptr::null()), 0);
    assert!(sausage_union_measure(ptr::null()).is_nan());
}

#[test]
fn sampled_paths_are_reproducible() {
    let mut a = ptr::null_mut();
    let mut b = ptr::null_mut();
    assert_eq!(sausage_path_sample(1e-2, 1.0, 5, 0, &mut a), SausageStatus::Ok);
    assert_eq!(sausage_path_sample(1e-2, 1.0, 5, 0, &mut b), SausageStatus::Ok);
    let n = sausage_path_len(a);
    assert_eq!(n, 101);
    let (mut xa, mut ya, mut xb, mut yb) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let mut w = 0;
    unsafe {
        assert_eq!(sausage_path_points(a, xa.as_mut_ptr(), ya.as_mut_ptr(), n, &mut w), SausageStatus::Ok);
        assert_eq!(w, n);
        sausage_path_points(b, xb.as_mut_ptr(), yb.as_mut_ptr(), n, &mut w);
        sausage_path_free(a);
        sausage_path_free(b);
    }
    assert_eq!((xa, ya), (xb, yb));
    assert_eq!(sausage_path_sample(-1.0, 1.0, 5, 0, &mut a), SausageStatus::InvalidInput);
}

#[test]
fn estimators_run() {
    let mut e = SausageEstimate::default();
    assert_eq!(sausage_wos_estimate(0.02, 0.0, 0.0, 0.05, 100, 1, &mut e), SausageStatus::Ok);
    assert_eq!(e.mean, 1.0);
    let (mut c, mut t) = (SausageEstimate::default(), SausageEstimate::default());
    assert_eq!(sausage_naive_mc(2.0, 1.0, 50, 1e-2, 1, &mut c, &mut t), SausageStatus::Ok);
    assert_eq!((c.mean, t.mean, c.n), (1.0, 1.0, 50));
}

#[test]
fn run_config_writes_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = dir.path().join("c.toml");
    std::fs::write(
        &cfg,
        format!(
            "kind = \"bounds-report\"\nseed = 1\noutput_dir = {:?}\n[params]\nepsilon = [0.1]\ntheta = [0.5]\n",
            out.display().to_string()
        ),
    )
    .unwrap();
    let c = CString::new(cfg.display().to_string()).unwrap();
    let mut code = -1;
    assert_eq!(unsafe { sausage_run_config(c.as_ptr(), &mut code) }, SausageStatus::Ok);
    assert_eq!(code, 0);
    assert!(out.join("manifest.json").is_file());

    std::fs::write(&cfg, "kind = \"nope\"\nseed = 1\noutput_dir = \"x\"\n").unwrap();
    assert_eq!(unsafe { sausage_run_config(c.as_ptr(), &mut code) }, SausageStatus::Config);
    assert!(last_error().contains("kind"));
}

#[test]
fn version_is_set() {
    let v = unsafe { CStr::from_ptr(sausage_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_compiles_as_c() {
    let header = concat!(env!("CARGO_MANIFEST_DIR"), "/include/sausage.h");
    let text = std::fs::read_to_string(header).unwrap();
    for name in ["sausage_path_free", "sausage_run_config", "SAUSAGE_STATUS_PANIC", "typedef struct SausagePath"] {
        assert!(text.contains(name), "header lacks {name}");
    }
    let Ok(status) = std::process::Command::new("cc")
        .args(["-fsyntax-only", "-Wall", "-Werror", "-x", "c", header])
        .status()
    else {
        eprintln!("no C compiler found; header syntax not checked");
        return;
    };
    assert!(status.success());
}

#[test]
fn c_program_links_and_runs() {
    let exe = std::env::current_exe().unwrap();
    let lib_dir = exe.parent().and_then(|d| d.parent()).unwrap().to_path_buf();
    if !lib_dir.join("libsausage_ffi.so").is_file() {
        eprintln!("shared library not found next to the test binary; link test skipped");
        return;
    }
    let manifest = env!("CARGO_MANIFEST_DIR");
    let tmp = tempfile::tempdir().unwrap();
    let bin = tmp.path().join("smoke");
    let Ok(status) = std::process::Command::new("cc")
        .arg(format!("{manifest}/tests/c/smoke.c"))
        .arg(format!("-I{manifest}/include"))
        .arg(format!("-L{}", lib_dir.display()))
        .args(["-lsausage_ffi", "-lm", "-o"])
        .arg(&bin)
        .status()
    else {
        eprintln!("no C compiler found; link test skipped");
        return;
    };
    assert!(status.success(), "C smoke program failed to build");
    let out = std::process::Command::new(&bin)
        .env("LD_LIBRARY_PATH", &lib_dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "exit {:?}", out.status.code());
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("ok "));
}
