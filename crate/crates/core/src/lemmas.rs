//! Measured operator estimates. Each function evaluates the quantity whose
//! boundedness an estimate asserts; the implicit constants are fitted by the
//! caller, never certified.

use rand::Rng;

use crate::calculus::{anti_div, inv_grad, project, FreqBand};
use crate::error::{CiError, Result};
use crate::field::{Grid2, Rank, SpectralField};

/// Real random scalar field of band `band` dilated by `kappa`, hence
/// `(T / kappa)^2`-periodic.
pub fn periodic_field<R: Rng>(grid: Grid2, kappa: usize, band: usize, rng: &mut R) -> Result<SpectralField> {
    if kappa == 0 {
        return Err(CiError::InvalidInput("period divisor kappa must be positive".into()));
    }
    let base = SpectralField::random(grid, Rank::Scalar, band, true, rng)?;
    let mut g = SpectralField::zeros(grid, Rank::Scalar, kappa * band)?;
    let k = kappa as i64;
    for xi in base.waves().collect::<Vec<_>>() {
        g.set_coeff(0, [k * xi[0], k * xi[1]], base.coeff(0, xi));
    }
    Ok(g.assume_real())
}

/// Constant `C` needed by the product estimate for one pair `(f, g)` with
/// `g` being `(T / kappa)^2`-periodic, in the normalized form
/// `||fg|| <= ||f|| ||g|| / (2 pi) + C kappa^{-1/2} ||f||_{C^1} ||g||`
/// of the unnormalized `L^2` used here. Zero when the first term suffices.
pub fn product_estimate_constant(f: &SpectralField, g: &SpectralField, kappa: usize) -> Result<f64> {
    let fg = f.mul(g)?;
    let lhs = fg.l2_from_coeffs();
    let main = f.l2_from_coeffs() * g.l2_from_coeffs() / (2.0 * std::f64::consts::PI);
    let scale = (kappa as f64).powf(-0.5) * f.cn_norm(1) * g.l2_from_coeffs();
    if scale == 0.0 {
        return Ok(0.0);
    }
    Ok(((lhs - main) / scale).max(0.0))
}

/// `|| |grad|^{-1} P_{!=0}(a P_{>= lambda} f) ||_{L^2} / (lambda^{-1} ||a||_{C^2} ||f||_{L^2})`.
pub fn high_low_ratio(a: &SpectralField, f: &SpectralField, lambda: f64) -> Result<f64> {
    let fh = project(f, FreqBand::AtLeast(lambda));
    let num = inv_grad(&project(&a.mul(&fh)?, FreqBand::NonZero)).l2_from_coeffs();
    let den = a.cn_norm(2) * f.l2_from_coeffs() / lambda;
    Ok(if den == 0.0 { 0.0 } else { num / den })
}

/// `||R P_{!=0} f||_{L^2} / || |grad|^{-1} P_{!=0} f ||_{L^2}` for a vector field `f`.
pub fn anti_divergence_ratio(f: &SpectralField) -> Result<f64> {
    let f0 = project(f, FreqBand::NonZero);
    let den = inv_grad(&f0).l2_from_coeffs();
    let num = anti_div(&f0)?.l2_from_coeffs();
    Ok(if den == 0.0 { 0.0 } else { num / den })
}

/// White real scalar field on the shell `lo <= |xi| <= hi`.
pub fn shell_field<R: Rng>(grid: Grid2, lo: f64, hi: f64, rng: &mut R) -> Result<SpectralField> {
    let f = SpectralField::random(grid, Rank::Scalar, hi.ceil() as usize, true, rng)?;
    Ok(project(&f, FreqBand::closed(lo, hi)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn periodic_field_has_only_dilated_modes() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let g = periodic_field(Grid2::new(64).unwrap(), 4, 3, &mut rng).unwrap();
        assert_eq!(g.energy_where(|xi| xi[0] % 4 != 0 || xi[1] % 4 != 0), 0.0);
        assert!(g.realness_defect() < 1e-15);
    }

    #[test]
    fn constant_f_needs_no_correction() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let grid = Grid2::new(32).unwrap();
        let g = periodic_field(grid, 2, 3, &mut rng).unwrap();
        let c = product_estimate_constant(&SpectralField::constant(grid, 1.0), &g, 2).unwrap();
        // ||1 g|| = ||1|| ||g|| / (2 pi) exactly
        assert!(c < 1e-12);
    }

    #[test]
    fn anti_divergence_ratio_of_single_mode() {
        use crate::Complex64;
        let grid = Grid2::new(32).unwrap();
        let f = SpectralField::mode(grid, Rank::Vector, [3, 0], &[Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]).unwrap();
        let r = anti_divergence_ratio(&f).unwrap();
        assert!(r.is_finite() && r > 0.0);
    }
}
