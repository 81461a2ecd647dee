//! `check`, `init`, `step` and `diagnose`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::cli::check::{run_checks, CheckReport};
use crate::cli::config::{Mode, RunConfig};
use crate::cli::generators::generate;
use crate::error::{CiError, Result};
use crate::field::SpectralField;
use crate::io::{load_tracks, save_tracks, Manifest};
use crate::step::residual::nsr_residual;
use crate::step::state::{init_state, NSRState};
use crate::step::{step, StepOutput};

pub fn cmd_check(cfg: &RunConfig) -> Result<CheckReport> {
    run_checks(cfg)
}

fn manifest_for(cfg: &RunConfig, state: &NSRState) -> Result<Manifest> {
    Ok(Manifest {
        horizon: cfg.horizon,
        t_pad: cfg.t_pad,
        n: cfg.n,
        n_t: cfg.n_t,
        theta: state.theta,
        nu: state.nu,
        q: state.q,
        mode: match cfg.mode {
            Mode::Toy => "toy".into(),
            Mode::Paper => "paper".into(),
        },
        params: serde_json::to_value(cfg)?,
        slices: 0,
        has_v_dt: false,
        meta: state.meta.clone(),
    })
}

/// Write into a sibling temporary directory, then move it into place, so a
/// failure never leaves a partial state behind.
fn write_atomically<F: FnOnce(&Path) -> Result<()>>(out: &Path, f: F) -> Result<()> {
    if out.exists() {
        return Err(CiError::InvalidInput(format!("output {} already exists", out.display())));
    }
    let name = out.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_else(|| "state".into());
    let tmp: PathBuf = out.with_file_name(format!(".{name}.partial-{}", std::process::id()));
    if tmp.exists() {
        fs::remove_dir_all(&tmp)?;
    }
    fs::create_dir_all(&tmp)?;
    match f(&tmp) {
        Ok(()) => {
            fs::rename(&tmp, out)?;
            Ok(())
        }
        Err(e) => {
            let _ = fs::remove_dir_all(&tmp);
            Err(e)
        }
    }
}

pub fn save_state(dir: &Path, cfg: &RunConfig, state: &NSRState) -> Result<()> {
    save_tracks(dir, &manifest_for(cfg, state)?, &state.v, &state.p, &state.r)
}

pub fn load_state(dir: &Path) -> Result<(Manifest, NSRState)> {
    let (m, v, p, r) = load_tracks(dir)?;
    let mut s = NSRState::new(v, p, r, m.theta, m.nu, m.q)?;
    s.meta = m.meta.clone();
    Ok((m, s))
}

/// Initial state of a configuration, in memory.
pub fn initial_state(cfg: &RunConfig) -> Result<NSRState> {
    cfg.validate()?;
    let u = generate(cfg.axis()?, cfg.grid()?, &cfg.initial)?;
    let s = init_state(u, cfg.theta, cfg.nu)?;
    let res = nsr_residual(&s)?.max_interior;
    if res > cfg.tolerances.init_residual {
        return Err(CiError::InvalidInput(format!("initial state residual {res:e} exceeds {:e}", cfg.tolerances.init_residual)));
    }
    Ok(s)
}

pub fn cmd_init(cfg: &RunConfig, out: &Path) -> Result<NSRState> {
    let s = initial_state(cfg)?;
    write_atomically(out, |dir| save_state(dir, cfg, &s))?;
    Ok(s)
}

/// One step in memory, failing if the new residual exceeds the configured tolerance.
pub fn run_step(cfg: &RunConfig, state: &NSRState) -> Result<StepOutput> {
    if cfg.mode == Mode::Paper {
        return Err(CiError::AliasingRisk("paper-mode frequencies lambda_q = A^(B^q) cannot be resolved on a grid".into()));
    }
    cfg.validate()?;
    let out = step(state, &cfg.step_config()?)?;
    let res = out.diagnostics.value("residual_new").unwrap_or(f64::NAN);
    if !(res <= cfg.tolerances.residual) {
        return Err(CiError::InvalidInput(format!("new state residual {res:e} exceeds {:e}", cfg.tolerances.residual)));
    }
    Ok(out)
}

pub fn cmd_step(cfg: &RunConfig, state_dir: &Path, out: &Path) -> Result<StepOutput> {
    let (_, state) = load_state(state_dir)?;
    if state.grid().n() != cfg.n || state.axis() != cfg.axis()? {
        return Err(CiError::GridMismatch("state directory does not match the configuration's grids".into()));
    }
    let result = run_step(cfg, &state)?;
    write_atomically(out, |dir| {
        save_state(dir, cfg, &result.state)?;
        fs::write(dir.join("diagnostics.csv"), result.diagnostics.to_csv())?;
        fs::write(dir.join("diagnostics.json"), serde_json::to_vec_pretty(&result.diagnostics)?)?;
        Ok(())
    })?;
    Ok(result)
}

/// Norms of one slice.
#[derive(Clone, Debug, Serialize)]
pub struct SliceNorms {
    pub t: f64,
    pub v_l1: f64,
    pub v_l2: f64,
    pub v_linf: f64,
    pub v_c1: f64,
    pub r_l1: f64,
    pub r_l2: f64,
    pub r_linf: f64,
    pub r_c1: f64,
    pub residual: f64,
}

/// Output of `ci2d diagnose`.
#[derive(Clone, Debug, Serialize)]
pub struct DiagnoseReport {
    pub q: u32,
    pub slices: Vec<SliceNorms>,
    /// `||R||_{L^inf L^1}` over `[0, T]`.
    pub r_linf_l1: f64,
    pub residual_max_interior: f64,
    /// Isotropic energy spectrum of `v`, averaged over `[0, T]`: `(shell, energy)`.
    pub spectrum: Vec<(usize, f64)>,
}

impl DiagnoseReport {
    pub fn spectrum_csv(&self) -> String {
        let mut s = String::from("shell,energy\n");
        for (k, e) in &self.spectrum {
            s.push_str(&format!("{k},{e:e}\n"));
        }
        s
    }

    /// Fraction of the spectrum's energy in shells `lo..=hi`.
    pub fn energy_fraction(&self, lo: f64, hi: f64) -> f64 {
        let total: f64 = self.spectrum.iter().map(|(_, e)| e).sum();
        let part: f64 = self.spectrum.iter().filter(|(k, _)| (*k as f64) >= lo && (*k as f64) <= hi).map(|(_, e)| e).sum();
        if total == 0.0 {
            0.0
        } else {
            part / total
        }
    }
}

/// `E(k) = (2 pi)^2 / 2 * sum_{k - 1/2 <= |xi| < k + 1/2} |v_xi|^2`.
pub fn isotropic_spectrum(v: &SpectralField) -> Vec<f64> {
    let mut e = vec![0.0; (v.band() as f64 * std::f64::consts::SQRT_2).ceil() as usize + 2];
    for c in 0..v.rank().components() {
        for (i, xi) in v.waves().enumerate() {
            let shell = ((xi[0] * xi[0] + xi[1] * xi[1]) as f64).sqrt().round() as usize;
            e[shell] += 2.0 * std::f64::consts::PI * std::f64::consts::PI * v.coeffs(c)[i].norm_sqr();
        }
    }
    e
}

pub fn diagnose(state: &NSRState) -> Result<DiagnoseReport> {
    let axis = state.axis();
    let res = nsr_residual(state)?;
    let mut slices = Vec::new();
    let mut spectrum: Vec<f64> = Vec::new();
    let mut r_linf_l1 = 0.0f64;
    for i in axis.interior() {
        let v = state.v.slice(i);
        let r = state.r.slice(i);
        let sn = SliceNorms {
            t: axis.time(i),
            v_l1: v.l1_norm(),
            v_l2: v.l2_from_coeffs(),
            v_linf: v.sup_norm(),
            v_c1: v.cn_norm(1),
            r_l1: r.l1_norm(),
            r_l2: r.l2_from_coeffs(),
            r_linf: r.sup_norm(),
            r_c1: r.cn_norm(1),
            residual: res.relative[i],
        };
        r_linf_l1 = r_linf_l1.max(sn.r_l1);
        slices.push(sn);
        let e = isotropic_spectrum(v);
        if spectrum.len() < e.len() {
            spectrum.resize(e.len(), 0.0);
        }
        for (a, b) in spectrum.iter_mut().zip(&e) {
            *a += b / axis.n_t as f64;
        }
    }
    Ok(DiagnoseReport {
        q: state.q,
        slices,
        r_linf_l1,
        residual_max_interior: res.max_interior,
        spectrum: spectrum.into_iter().enumerate().collect(),
    })
}

/// Diagnose a state directory, writing `report.json` and `spectrum.csv` into `out` if given.
pub fn cmd_diagnose(state_dir: &Path, out: Option<&Path>) -> Result<DiagnoseReport> {
    let (_, state) = load_state(state_dir)?;
    let report = diagnose(&state)?;
    if let Some(out) = out {
        fs::create_dir_all(out)?;
        fs::write(out.join("report.json"), serde_json::to_vec_pretty(&report)?)?;
        fs::write(out.join("spectrum.csv"), report.spectrum_csv())?;
    }
    Ok(report)
}
