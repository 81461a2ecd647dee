//! Initial velocity tracks: zero, temporal-bump shear and random stream function.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{CiError, Result};
use crate::field::{Grid2, Rank, SpectralField};
use crate::quadrature::raw_bump;
use crate::track::{TimeAxis, TimeTrack};

/// Generator name and parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "generator", rename_all = "snake_case")]
pub enum InitialConfig {
    Zero,
    /// `chi(t) (amplitude sin(m x2), 0)`.
    Shear {
        #[serde(default = "one_u")]
        m: u32,
        #[serde(default = "one_f")]
        amplitude: f64,
    },
    /// `chi(t) grad_perp psi` for a random real stream function of band `band`
    /// whose coefficients decay like `|xi|^{-2}`, scaled to `||v||_{L^2} = amplitude`.
    Random {
        seed: u64,
        #[serde(default = "default_band")]
        band: usize,
        #[serde(default = "one_f")]
        amplitude: f64,
    },
}

fn one_u() -> u32 {
    1
}

fn one_f() -> f64 {
    1.0
}

fn default_band() -> usize {
    4
}

/// Temporal envelope `chi(t) = e * bump((t - T/2) / (T/4))`: smooth, equal to
/// one at `T/2` and supported in `[T/4, 3T/4]`. Returns `(chi, chi')`.
pub fn envelope(horizon: f64, t: f64) -> (f64, f64) {
    let h = horizon / 4.0;
    let s = (t - horizon / 2.0) / h;
    let b = raw_bump(s) * std::f64::consts::E;
    if b == 0.0 {
        return (0.0, 0.0);
    }
    let ds = -2.0 * s / (1.0 - s * s).powi(2);
    (b, b * ds / h)
}

/// Band needed by a generator's velocity.
pub fn generator_band(init: &InitialConfig) -> usize {
    match init {
        InitialConfig::Zero => 0,
        InitialConfig::Shear { m, .. } => *m as usize,
        InitialConfig::Random { band, .. } => *band,
    }
}

fn profile(grid: Grid2, init: &InitialConfig) -> Result<SpectralField> {
    match init {
        InitialConfig::Zero => Ok(SpectralField::zeros(grid, Rank::Vector, 0)?.assume_real()),
        InitialConfig::Shear { m, amplitude } => {
            if *m == 0 {
                return Err(CiError::InvalidInput("shear wavenumber must be positive".into()));
            }
            let m = *m as i64;
            grid.check_band(m as usize, "shear")?;
            let mut f = SpectralField::zeros(grid, Rank::Vector, m as usize)?;
            // sin(m x2) = (e^{i m x2} - e^{-i m x2}) / 2i
            f.set_coeff(0, [0, m], Complex64::new(0.0, -0.5 * amplitude));
            f.set_coeff(0, [0, -m], Complex64::new(0.0, 0.5 * amplitude));
            Ok(f.assume_real())
        }
        InitialConfig::Random { seed, band, amplitude } => {
            if *band == 0 {
                return Err(CiError::InvalidInput("random stream function needs band >= 1".into()));
            }
            grid.check_band(*band, "random stream function")?;
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let mut psi = SpectralField::zeros(grid, Rank::Scalar, *band)?;
            let b = *band as i64;
            for x in -b..=b {
                for y in -b..=b {
                    if (x, y) <= (0, 0) {
                        continue;
                    }
                    let k2 = (x * x + y * y) as f64;
                    let c = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) / k2;
                    psi.set_coeff(0, [x, y], c);
                    psi.set_coeff(0, [-x, -y], c.conj());
                }
            }
            let v = psi.assume_real().perp_grad()?;
            let norm = v.l2_from_coeffs();
            Ok(if norm > 0.0 { v.scale(amplitude / norm) } else { v })
        }
    }
}

/// Velocity track `chi(t) U(x)` with its analytic time-derivative channel.
pub fn generate(axis: TimeAxis, grid: Grid2, init: &InitialConfig) -> Result<TimeTrack> {
    let u = profile(grid, init)?;
    let mut v = Vec::with_capacity(axis.len());
    let mut dv = Vec::with_capacity(axis.len());
    for t in axis.times() {
        let (c, dc) = if matches!(init, InitialConfig::Zero) { (0.0, 0.0) } else { envelope(axis.horizon, t) };
        v.push(u.scale(c));
        dv.push(u.scale(dc));
    }
    TimeTrack::new(axis, v, Some(dv))
}

/// Closed-form `||v(t)||_{L^2}` of a generator.
pub fn closed_form_l2(init: &InitialConfig, horizon: f64, t: f64) -> Option<f64> {
    let chi = envelope(horizon, t).0;
    match init {
        InitialConfig::Zero => Some(0.0),
        InitialConfig::Shear { amplitude, .. } => Some(chi * amplitude.abs() * std::f64::consts::PI * 2f64.sqrt()),
        InitialConfig::Random { amplitude, .. } => Some(chi * amplitude.abs()),
    }
}
