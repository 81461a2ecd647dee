//! Fourier-multiplier operators: frequency projectors, the Leray projector,
//! fractional Laplacian, `|grad|^{-1}`, the anti-divergence, and trace-free
//! tensor products.

use rustfft::num_complex::Complex64;

use crate::error::{CiError, Result};
use crate::field::{Rank, SpectralField};

/// Frequency set selected by [`project`]; `|xi|` is Euclidean.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FreqBand {
    /// `lo <= |xi| <= hi`.
    Closed { lo: f64, hi: f64 },
    /// `|xi| >= lo`.
    AtLeast(f64),
    /// `xi != 0` (mean removal).
    NonZero,
}

impl FreqBand {
    pub fn closed(lo: f64, hi: f64) -> Result<Self> {
        if !(lo >= 0.0 && lo <= hi) {
            return Err(CiError::Config(format!("invalid band [{lo}, {hi}]")));
        }
        Ok(FreqBand::Closed { lo, hi })
    }

    pub fn contains(&self, xi: [i64; 2]) -> bool {
        let r = norm(xi);
        match *self {
            FreqBand::Closed { lo, hi } => lo <= r && r <= hi,
            FreqBand::AtLeast(lo) => r >= lo,
            FreqBand::NonZero => xi != [0, 0],
        }
    }
}

#[inline]
fn norm_sq(xi: [i64; 2]) -> f64 {
    (xi[0] * xi[0] + xi[1] * xi[1]) as f64
}

#[inline]
fn norm(xi: [i64; 2]) -> f64 {
    norm_sq(xi).sqrt()
}

/// Sharp Fourier projector onto `band`.
pub fn project(f: &SpectralField, band: FreqBand) -> SpectralField {
    f.multiplier(|xi| if band.contains(xi) { 1.0 } else { 0.0 })
}

/// `f - grad(Delta^{-1} div f)` for a vector field.
pub fn helmholtz(f: &SpectralField) -> Result<SpectralField> {
    f.require_rank(Rank::Vector)?;
    let mut out = f.clone();
    let real = f.is_real();
    out = out.map_modes(|xi, c, _| {
        if xi == [0, 0] {
            return f.coeff(c, xi);
        }
        let k2 = norm_sq(xi);
        let dot = f.coeff(0, xi) * xi[0] as f64 + f.coeff(1, xi) * xi[1] as f64;
        f.coeff(c, xi) - dot * (xi[c] as f64 / k2)
    });
    Ok(if real { out.assume_real() } else { out })
}

/// `(-Delta)^theta` with `theta in [0, 1]`; the mean is annihilated for `theta > 0`.
pub fn frac_laplacian(f: &SpectralField, theta: f64) -> Result<SpectralField> {
    if !(0.0..=1.0).contains(&theta) {
        return Err(CiError::Config(format!("theta must lie in [0, 1], got {theta}")));
    }
    Ok(f.multiplier(|xi| {
        if xi == [0, 0] {
            if theta == 0.0 {
                1.0
            } else {
                0.0
            }
        } else {
            norm_sq(xi).powf(theta)
        }
    }))
}

/// `|grad|^{-1} P_{!=0}`.
pub fn inv_grad(f: &SpectralField) -> SpectralField {
    f.multiplier(|xi| if xi == [0, 0] { 0.0 } else { 1.0 / norm(xi) })
}

/// `Delta^{-1} P_{!=0}`.
pub fn inv_laplacian(f: &SpectralField) -> SpectralField {
    f.multiplier(|xi| if xi == [0, 0] { 0.0 } else { -1.0 / norm_sq(xi) })
}

/// Result of [`anti_divergence`]: the tensor and the mean removed from the input.
#[derive(Clone, Debug)]
pub struct AntiDivergence {
    pub tensor: SpectralField,
    pub removed_mean: [Complex64; 2],
}

/// Symmetric trace-free `R f = grad g + (grad g)^T - (div g) Id` with
/// `Delta g = f - mean(f)`.
pub fn anti_divergence(f: &SpectralField) -> Result<AntiDivergence> {
    f.require_rank(Rank::Vector)?;
    let mean = f.mean();
    let g = inv_laplacian(f);
    let g1 = g.component(0);
    let g2 = g.component(1);
    let r11 = g1.derive(1, 0).sub(&g2.derive(0, 1))?;
    let r12 = g1.derive(0, 1).add(&g2.derive(1, 0))?;
    let mut tensor = SpectralField::from_components(Rank::SymTensor, &[r11, r12])?;
    if f.is_real() {
        tensor = tensor.assume_real();
    }
    Ok(AntiDivergence { tensor, removed_mean: [mean[0], mean[1]] })
}

/// Shorthand for the tensor part of [`anti_divergence`].
pub fn anti_div(f: &SpectralField) -> Result<SpectralField> {
    Ok(anti_divergence(f)?.tensor)
}

/// `f (x) g` trace-free display for constant vectors, as a full 2x2 matrix:
/// `[[f1 g1/2 - f2 g2/2, f1 g2], [f2 g1, f2 g2/2 - f1 g1/2]]`.
pub fn tracefree_const(f: [f64; 2], g: [f64; 2]) -> [[f64; 2]; 2] {
    let d = 0.5 * (f[0] * g[0] - f[1] * g[1]);
    [[d, f[0] * g[1]], [f[1] * g[0], -d]]
}

/// Pointwise trace-free display `f (x) g` of two vector fields (general 2x2).
pub fn tracefree_product(f: &SpectralField, g: &SpectralField) -> Result<SpectralField> {
    f.require_rank(Rank::Vector)?;
    g.require_rank(Rank::Vector)?;
    f.bilinear(g, Rank::Matrix, |a, b, o| {
        let d = 0.5 * (a[0] * b[0] - a[1] * b[1]);
        o[0] = d;
        o[1] = a[0] * b[1];
        o[2] = a[1] * b[0];
        o[3] = -d;
    })
}

/// Symmetric combination `f (x) g + g (x) f` stored as a symmetric trace-free tensor.
pub fn tracefree_sym(f: &SpectralField, g: &SpectralField) -> Result<SpectralField> {
    f.require_rank(Rank::Vector)?;
    g.require_rank(Rank::Vector)?;
    f.bilinear(g, Rank::SymTensor, |a, b, o| {
        o[0] = a[0] * b[0] - a[1] * b[1];
        o[1] = a[0] * b[1] + a[1] * b[0];
    })
}

/// `f (x) f = f f^T - |f|^2 Id / 2` as a symmetric trace-free tensor.
pub fn tracefree_square(f: &SpectralField) -> Result<SpectralField> {
    f.require_rank(Rank::Vector)?;
    f.bilinear(f, Rank::SymTensor, |a, b, o| {
        o[0] = 0.5 * (a[0] * b[0] - a[1] * b[1]);
        o[1] = a[0] * b[1];
    })
}
