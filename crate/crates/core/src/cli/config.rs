//! JSON run configuration.

use std::path::Path;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::blocks::WaveParams;
use crate::cli::generators::InitialConfig;
use crate::error::{CiError, Result};
use crate::field::Grid2;
use crate::schedule::{toy_params, validate_schedule, PaperSchedule, ScheduleReport};
use crate::step::coefficients::choose_coeff_grid;
use crate::step::StepConfig;
use crate::track::TimeAxis;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Paper,
    Toy,
}

/// Desk-scale wave parameters plus the amplitude scale `A eps`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToyConfig {
    pub lambda: u64,
    pub sigma_inv: u64,
    pub r: u64,
    pub mu: u64,
    pub ell: f64,
    #[serde(rename = "A", default = "default_amp")]
    pub amp_a: f64,
    #[serde(default = "default_eps")]
    pub eps: f64,
}

fn default_amp() -> f64 {
    5.0
}

fn default_eps() -> f64 {
    0.04
}

/// Schedule constants; rationals as `"n/d"` strings and `A` as a decimal string.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PaperConfig {
    #[serde(rename = "A")]
    pub a: String,
    #[serde(rename = "B")]
    pub b: u64,
    pub alpha: String,
    pub beta: String,
    #[serde(default)]
    pub q: u32,
    #[serde(default)]
    pub ell_exponent: Option<String>,
}

/// Tolerances of the check suites and of the step's residual gate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    #[serde(default = "tol_residual")]
    pub residual: f64,
    #[serde(default = "tol_identity")]
    pub identity: f64,
    #[serde(default = "tol_oscillation")]
    pub oscillation: f64,
    #[serde(default = "tol_init")]
    pub init_residual: f64,
}

fn tol_residual() -> f64 {
    1e-4
}

fn tol_identity() -> f64 {
    1e-10
}

fn tol_oscillation() -> f64 {
    1e-8
}

fn tol_init() -> f64 {
    1e-6
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            residual: tol_residual(),
            identity: tol_identity(),
            oscillation: tol_oscillation(),
            init_residual: tol_init(),
        }
    }
}

/// A complete run configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub mode: Mode,
    pub theta: f64,
    #[serde(default = "default_nu")]
    pub nu: f64,
    pub n: usize,
    pub n_t: usize,
    #[serde(rename = "T")]
    pub horizon: f64,
    pub t_pad: f64,
    #[serde(default)]
    pub toy: Option<ToyConfig>,
    #[serde(default)]
    pub paper: Option<PaperConfig>,
    pub initial: InitialConfig,
    #[serde(default)]
    pub output: Option<String>,
    #[serde(default)]
    pub tolerances: Tolerances,
}

fn default_nu() -> f64 {
    1.0
}

pub fn parse_rational(s: &str) -> Result<BigRational> {
    let bad = || CiError::Config(format!("cannot parse rational {s:?}"));
    let s = s.trim();
    match s.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().map_err(|_| bad())?;
            let d: BigInt = d.trim().parse().map_err(|_| bad())?;
            if d == BigInt::from(0) {
                return Err(bad());
            }
            Ok(BigRational::new(n, d))
        }
        None => {
            if let Some((m, e)) = s.split_once(['e', 'E']) {
                let m = parse_rational(m)?;
                let e: i32 = e.parse().map_err(|_| bad())?;
                let p = BigRational::from_integer(BigInt::from(10).pow(e.unsigned_abs()));
                Ok(if e >= 0 { m * p } else { m / p })
            } else if let Some((ip, fp)) = s.split_once('.') {
                let digits = fp.len() as u32;
                let n: BigInt = format!("{ip}{fp}").parse().map_err(|_| bad())?;
                Ok(BigRational::new(n, BigInt::from(10).pow(digits)))
            } else {
                Ok(BigRational::from_integer(s.parse().map_err(|_| bad())?))
            }
        }
    }
}

impl PaperConfig {
    pub fn schedule(&self, theta: f64) -> Result<PaperSchedule> {
        let a: BigUint = self.a.trim().parse().map_err(|_| CiError::Config(format!("cannot parse A = {:?}", self.a)))?;
        let mut s = PaperSchedule::new(theta, parse_rational(&self.alpha)?, self.b, parse_rational(&self.beta)?, a, self.q);
        if let Some(e) = &self.ell_exponent {
            s.ell_exponent = parse_rational(e)?;
        }
        Ok(s)
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig> {
        let cfg: RunConfig = serde_json::from_slice(&std::fs::read(path)?)?;
        Ok(cfg)
    }

    pub fn from_json(text: &str) -> Result<RunConfig> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn axis(&self) -> Result<TimeAxis> {
        TimeAxis::new(self.horizon, self.n_t, self.t_pad)
    }

    pub fn grid(&self) -> Result<Grid2> {
        Grid2::new(self.n)
    }

    pub fn toy(&self) -> Result<&ToyConfig> {
        self.toy.as_ref().ok_or_else(|| CiError::Config("toy mode needs a \"toy\" block".into()))
    }

    pub fn wave_params(&self) -> Result<WaveParams> {
        let t = self.toy()?;
        WaveParams::new(t.lambda, t.sigma_inv, t.r, t.mu)
    }

    /// Step parameters in toy mode.
    pub fn step_config(&self) -> Result<StepConfig> {
        let t = self.toy()?;
        let tp = toy_params(t.lambda, t.sigma_inv, t.r, t.mu, t.ell, self.theta, self.nu)?;
        Ok(StepConfig {
            wp: tp.wp,
            ell: t.ell,
            amp_a: t.amp_a,
            eps_next: t.eps,
            diagnostics: true,
            keep_perturbations: false,
        })
    }

    /// Re-validate every referenced invariant: grids, padding, the
    /// band budget of a step from the initial data, and the schedule.
    pub fn validate(&self) -> Result<Option<ScheduleReport>> {
        if !(0.0..=1.0).contains(&self.theta) || !(self.nu >= 0.0) {
            return Err(CiError::Config(format!("theta = {}, nu = {} out of range", self.theta, self.nu)));
        }
        let grid = self.grid()?;
        let axis = self.axis()?;
        let tol = &self.tolerances;
        if [tol.residual, tol.identity, tol.oscillation, tol.init_residual].iter().any(|t| !(*t > 0.0)) {
            return Err(CiError::Config("tolerances must be positive".into()));
        }
        match self.mode {
            Mode::Toy => {
                let sc = self.step_config()?;
                if axis.pad() < 2.0 * sc.ell - 1e-12 {
                    return Err(CiError::Padding(format!("t_pad = {} gives padding {} < 2 ell = {}", self.t_pad, axis.pad(), 2.0 * sc.ell)));
                }
                let bv = crate::cli::generators::generator_band(&self.initial);
                // R_0 contains v (x) v, so its band is twice the velocity band
                choose_coeff_grid(grid, &sc.wp, bv, 2 * bv)?;
                Ok(None)
            }
            Mode::Paper => {
                let p = self.paper.as_ref().ok_or_else(|| CiError::Config("paper mode needs a \"paper\" block".into()))?;
                Ok(Some(validate_schedule(&p.schedule(self.theta)?)?))
            }
        }
    }
}

/// The acceptance toy configuration.
pub fn acceptance_config() -> RunConfig {
    RunConfig {
        mode: Mode::Toy,
        theta: 0.4,
        nu: 1.0,
        n: 512,
        n_t: 33,
        horizon: 1.0,
        t_pad: 0.1,
        toy: Some(ToyConfig { lambda: 50, sigma_inv: 10, r: 2, mu: 5, ell: 0.05, amp_a: 5.0, eps: 0.04 }),
        paper: None,
        initial: InitialConfig::Shear { m: 1, amplitude: 1.0 },
        output: None,
        tolerances: Tolerances::default(),
    }
}
