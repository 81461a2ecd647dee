//! The `ci2d` binary end to end on the small configuration.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;

use ci2d_core::cli::generators::{closed_form_l2, InitialConfig};
use ci2d_core::cli::RunConfig;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn ci2d(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_ci2d")).args(args).env("CI2D_THREADS", "2").output().unwrap();
    (out.status.code().unwrap_or(-1), String::from_utf8_lossy(&out.stdout).into_owned() + &String::from_utf8_lossy(&out.stderr))
}

fn write_config(dir: &Path, name: &str, edit: impl FnOnce(&mut Value)) -> PathBuf {
    let mut v: Value = serde_json::from_slice(&fs::read(configs().join("small.json")).unwrap()).unwrap();
    edit(&mut v);
    let p = dir.join(name);
    fs::write(&p, serde_json::to_vec(&v).unwrap()).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn check_passes_on_shipped_toy_configs() {
    for name in ["small.json", "acceptance.json"] {
        let (code, out) = ci2d(&["check", "--config", s(&configs().join(name))]);
        assert_eq!(code, 0, "{name}: {out}");
        let report: Value = serde_json::from_str(out.trim_start_matches(|c| c != '{')).unwrap();
        assert!(report["passed"].as_u64().unwrap() >= 25);
        assert_eq!(report["failed"].as_u64().unwrap(), 0);
    }
}

#[test]
fn guard_and_constraint_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let small_grid = write_config(dir.path(), "n16.json", |v| v["n"] = 16.into());
    assert_eq!(ci2d(&["check", "--config", s(&small_grid)]).0, 2);
    assert_eq!(ci2d(&["check", "--config", s(&configs().join("paper_bad_alpha.json"))]).0, 3);
    assert_eq!(ci2d(&["check", "--config", s(&configs().join("paper_witness.json"))]).0, 0);
    let thin_pad = write_config(dir.path(), "pad.json", |v| v["t_pad"] = 0.01.into());
    assert_eq!(ci2d(&["init", "--config", s(&thin_pad), "--out", s(&dir.path().join("x"))]).0, 2);
    assert!(!dir.path().join("x").exists());
}

fn dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
    files.sort();
    files.into_iter().map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap())).collect()
}

#[test]
fn init_step_diagnose_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cfg_path = configs().join("small.json");
    let cfg = RunConfig::load(&cfg_path).unwrap();
    let lambda = cfg.toy.as_ref().unwrap().lambda as f64;

    assert_eq!(ci2d(&["init", "--config", s(&cfg_path), "--out", s(&d.join("s0"))]).0, 0);
    assert_eq!(ci2d(&["init", "--config", s(&cfg_path), "--out", s(&d.join("s0b"))]).0, 0);
    assert_eq!(dir_bytes(&d.join("s0")), dir_bytes(&d.join("s0b")));
    // refuses to overwrite
    assert_ne!(ci2d(&["init", "--config", s(&cfg_path), "--out", s(&d.join("s0"))]).0, 0);

    // diagnose of the initial state reproduces the generator's closed form
    assert_eq!(ci2d(&["diagnose", "--state", s(&d.join("s0")), "--out", s(&d.join("d0"))]).0, 0);
    let report: Value = serde_json::from_slice(&fs::read(d.join("d0/report.json")).unwrap()).unwrap();
    for sl in report["slices"].as_array().unwrap() {
        let t = sl["t"].as_f64().unwrap();
        let want = closed_form_l2(&cfg.initial, cfg.horizon, t).unwrap();
        assert!((sl["v_l2"].as_f64().unwrap() - want).abs() < 1e-8, "t = {t}");
    }

    let (code, out) = ci2d(&["step", "--config", s(&cfg_path), "--state", s(&d.join("s0")), "--out", s(&d.join("s1"))]);
    assert_eq!(code, 0, "{out}");
    assert_eq!(ci2d(&["step", "--config", s(&cfg_path), "--state", s(&d.join("s0")), "--out", s(&d.join("s1b"))]).0, 0);
    assert_eq!(dir_bytes(&d.join("s1")), dir_bytes(&d.join("s1b")));
    let csv = fs::read_to_string(d.join("s1/diagnostics.csv")).unwrap();
    assert!(csv.starts_with("quantity,paper_ref,value,predicted_scaling,margin\n"));

    assert_eq!(ci2d(&["diagnose", "--state", s(&d.join("s1")), "--out", s(&d.join("d1"))]).0, 0);
    let report: Value = serde_json::from_slice(&fs::read(d.join("d1/report.json")).unwrap()).unwrap();
    assert_eq!(report["q"], 1);
    assert!(report["residual_max_interior"].as_f64().unwrap() <= 1e-4);
    assert!(report["r_linf_l1"].as_f64().unwrap() > 0.0);
    // the perturbation puts the spectral peak, and most of the energy, in [lambda/2, 2 lambda]
    let spectrum: Vec<(f64, f64)> = fs::read_to_string(d.join("d1/spectrum.csv"))
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| {
            let (k, e) = l.split_once(',').unwrap();
            (k.parse().unwrap(), e.parse().unwrap())
        })
        .collect();
    let total: f64 = spectrum.iter().map(|x| x.1).sum();
    let inside: f64 = spectrum.iter().filter(|x| x.0 >= lambda / 2.0 && x.0 <= 2.0 * lambda).map(|x| x.1).sum();
    let peak = spectrum.iter().cloned().fold((0.0, 0.0), |a, b| if b.1 > a.1 { b } else { a });
    assert!(peak.0 >= lambda / 2.0 && peak.0 <= 2.0 * lambda, "peak at shell {}", peak.0);
    assert!(inside > 0.5 * total, "fraction {}", inside / total);
}

#[test]
fn zero_state_is_reported_as_zero_and_stays_zero() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cfg = write_config(d, "zero.json", |v| v["initial"] = serde_json::to_value(InitialConfig::Zero).unwrap());
    assert_eq!(ci2d(&["init", "--config", s(&cfg), "--out", s(&d.join("z0"))]).0, 0);
    assert_eq!(ci2d(&["step", "--config", s(&cfg), "--state", s(&d.join("z0")), "--out", s(&d.join("z1"))]).0, 0);
    assert_eq!(ci2d(&["diagnose", "--state", s(&d.join("z1")), "--out", s(&d.join("dz"))]).0, 0);
    let report: Value = serde_json::from_slice(&fs::read(d.join("dz/report.json")).unwrap()).unwrap();
    for sl in report["slices"].as_array().unwrap() {
        for (k, v) in sl.as_object().unwrap() {
            if k != "t" {
                assert_eq!(v.as_f64().unwrap(), 0.0, "{k}");
            }
        }
    }
    assert!(report["spectrum"].as_array().unwrap().iter().all(|e| e[1].as_f64().unwrap() == 0.0));
}

#[test]
fn failed_step_leaves_no_output() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cfg = configs().join("small.json");
    assert_eq!(ci2d(&["init", "--config", s(&cfg), "--out", s(&d.join("s0"))]).0, 0);
    let strict = write_config(d, "strict.json", |v| v["tolerances"] = serde_json::json!({ "residual": 1e-40 }));
    let (code, _) = ci2d(&["step", "--config", s(&strict), "--state", s(&d.join("s0")), "--out", s(&d.join("s1"))]);
    assert_eq!(code, 1);
    let left: Vec<_> = fs::read_dir(d).unwrap().map(|e| e.unwrap().file_name().to_string_lossy().into_owned()).collect();
    assert!(!left.iter().any(|n| n == "s1" || n.contains("partial")), "{left:?}");
}
