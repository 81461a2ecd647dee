//! Amplitudes `a_k = (A eps)^{1/2} gamma_k(R_ls / (A eps)) Phi(t)`.
//!
//! `gamma_k` of a band-limited stress is not band-limited, so each `a_k` is
//! represented by its trigonometric interpolant on an odd coarse grid of
//! `2 B_a + 1` nodes per axis. The interpolant takes the exact nodal values,
//! and `B_a` is the largest band for which every product of the step stays
//! alias-free on the working grid.

use rustfft::num_complex::Complex64;
use serde::Serialize;

use crate::blocks::{positive_directions, Direction, WaveParams};
use crate::error::{CiError, Result};
use crate::field::{Grid2, Rank, SpectralField};
use crate::geometry::{gamma, gamma_sq_grad, StressMatrix};
use crate::step::cutoff::CutoffProfile;
use crate::track::TimeTrack;

/// Band and node count of the coefficient interpolation grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct CoeffGrid {
    pub band: usize,
    pub nodes: usize,
}

/// Bands reached by the perturbation pieces for a coefficient band `b_a`:
/// `(w_p and w_c, w_t, max)`.
pub fn perturbation_bands(b_a: usize, wp: &WaveParams) -> (usize, usize, usize) {
    let be = wp.eta_band();
    let principal = b_a + wp.flow_band();
    let temporal = 2 * (b_a + be);
    (principal, temporal, principal.max(temporal))
}

/// Largest coefficient band keeping every product of the step within
/// `n/2 - 1`, given the bands of `v_l` and `R_ls`.
pub fn choose_coeff_grid(grid: Grid2, wp: &WaveParams, band_v: usize, band_r: usize) -> Result<CoeffGrid> {
    let limit = grid.max_band();
    let fits = |b_a: usize| {
        let bw = perturbation_bands(b_a, wp).2;
        2 * bw <= limit && band_v + bw <= limit && 2 * band_v <= limit && band_r <= limit
    };
    if !fits(0) {
        return Err(CiError::AliasingRisk(format!(
            "n = {} cannot resolve the step: flow band {}, velocity band {band_v}, stress band {band_r}",
            grid.n(),
            wp.flow_band()
        )));
    }
    let mut b_a = 0;
    while b_a < limit && fits(b_a + 1) {
        b_a += 1;
    }
    Ok(CoeffGrid { band: b_a, nodes: 2 * b_a + 1 })
}

/// `a_k` and `d_t a_k` on one slice, for the positive directions.
#[derive(Clone, Debug)]
pub struct SliceCoefficients {
    pub a: Vec<SpectralField>,
    pub da: Vec<SpectralField>,
    /// Nodal values of `a_k` on the coarse grid, per positive direction.
    pub nodal: Vec<Vec<f64>>,
    /// Whether every coefficient vanishes identically on this slice.
    pub vanishes: bool,
}

impl SliceCoefficients {
    pub fn get(&self, k: Direction) -> &SpectralField {
        &self.a[positive_index(k)]
    }

    pub fn get_dt(&self, k: Direction) -> &SpectralField {
        &self.da[positive_index(k)]
    }
}

/// Index of `k` (or `-k`) among [`positive_directions`].
pub fn positive_index(k: Direction) -> usize {
    let p = k.positive_rep();
    positive_directions().iter().position(|d| *d == p).expect("fixed direction set")
}

/// Amplitude `(A eps)^{1/2}` and normalization `(A eps)^{-1}`.
fn scales(amp_a: f64, eps_next: f64) -> Result<(f64, f64)> {
    let ae = amp_a * eps_next;
    if !(ae > 0.0 && ae.is_finite()) {
        return Err(CiError::Config(format!("A eps must be positive, got A = {amp_a}, eps = {eps_next}")));
    }
    Ok((ae.sqrt(), 1.0 / ae))
}

/// Coefficients on one slice from `R_ls`, its time derivative and `(Phi, Phi')`.
pub fn coefficients_slice(
    r_ls: &SpectralField,
    dr_ls: &SpectralField,
    phi: f64,
    dphi: f64,
    amp_a: f64,
    eps_next: f64,
    cg: CoeffGrid,
) -> Result<SliceCoefficients> {
    r_ls.require_rank(Rank::SymTensor)?;
    let grid = r_ls.grid();
    let dirs = positive_directions();
    let nn = cg.nodes * cg.nodes;
    if phi == 0.0 && dphi == 0.0 {
        let z = SpectralField::zeros(grid, Rank::Scalar, cg.band)?.assume_real();
        return Ok(SliceCoefficients {
            a: vec![z.clone(); dirs.len()],
            da: vec![z; dirs.len()],
            nodal: vec![vec![0.0; nn]; dirs.len()],
            vanishes: true,
        });
    }
    let (amp, inv) = scales(amp_a, eps_next)?;
    let rv = r_ls.synthesize_on(cg.nodes);
    let drv = dr_ls.synthesize_on(cg.nodes);
    let mut a = Vec::with_capacity(dirs.len());
    let mut da = Vec::with_capacity(dirs.len());
    let mut nodal = Vec::with_capacity(dirs.len());
    for k in &dirs {
        let mut av = Vec::with_capacity(nn);
        let mut dav = Vec::with_capacity(nn);
        for p in 0..nn {
            let s = StressMatrix::new(rv[0][p].re * inv, rv[1][p].re * inv);
            let ds = [drv[0][p].re * inv, drv[1][p].re * inv];
            let g = gamma(*k, s);
            let grad = gamma_sq_grad(*k, s);
            let dg = (grad[0] * ds[0] + grad[1] * ds[1]) / (2.0 * g);
            av.push(amp * g * phi);
            dav.push(amp * (dg * phi + g * dphi));
        }
        let to_field = |vals: &[f64]| -> Result<SpectralField> {
            let values = vec![vals.iter().map(|x| Complex64::new(*x, 0.0)).collect()];
            Ok(SpectralField::analyze_on(grid, Rank::Scalar, cg.nodes, values, cg.band)?.into_real())
        };
        a.push(to_field(&av)?);
        da.push(to_field(&dav)?);
        nodal.push(av);
    }
    Ok(SliceCoefficients { a, da, nodal, vanishes: false })
}

/// Coefficient tracks `a_k` with derivative channels, one per positive
/// direction; `a_{-k} = a_k`.
#[derive(Clone, Debug)]
pub struct Coefficients {
    pub grid: CoeffGrid,
    pub tracks: Vec<(Direction, TimeTrack)>,
}

impl Coefficients {
    /// Track of `a_k` for any of the eight directions.
    pub fn track(&self, k: Direction) -> &TimeTrack {
        &self.tracks[positive_index(k)].1
    }
}

/// Coefficients for every slice of `r_ls`, which must carry a derivative channel.
pub fn coefficients(r_ls: &TimeTrack, phi: &CutoffProfile, amp_a: f64, eps_next: f64, cg: CoeffGrid) -> Result<Coefficients> {
    let dr = r_ls.channel().ok_or_else(|| CiError::DerivativeChannelMissing("R_ls".into()))?;
    let dirs = positive_directions();
    let mut a: Vec<Vec<SpectralField>> = vec![Vec::new(); dirs.len()];
    let mut da: Vec<Vec<SpectralField>> = vec![Vec::new(); dirs.len()];
    for i in 0..r_ls.len() {
        let c = coefficients_slice(r_ls.slice(i), &dr[i], phi.values[i], phi.dvalues[i], amp_a, eps_next, cg)?;
        for (j, (f, df)) in c.a.into_iter().zip(c.da).enumerate() {
            a[j].push(f);
            da[j].push(df);
        }
    }
    let axis = r_ls.axis();
    let tracks = dirs
        .into_iter()
        .zip(a.into_iter().zip(da))
        .map(|(k, (s, d))| Ok((k, TimeTrack::new(axis, s, Some(d))?)))
        .collect::<Result<_>>()?;
    Ok(Coefficients { grid: cg, tracks })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blocks::directions;
    use crate::geometry::gamma_sq;

    #[test]
    fn coefficient_grid_for_acceptance_toy() {
        let wp = WaveParams::new(50, 10, 2, 5).unwrap();
        let g = Grid2::new(512).unwrap();
        let cg = choose_coeff_grid(g, &wp, 1, 2).unwrap();
        assert_eq!(cg, CoeffGrid { band: 49, nodes: 99 });
        assert!(matches!(choose_coeff_grid(Grid2::new(128).unwrap(), &wp, 1, 2), Err(CiError::AliasingRisk(_))));
    }

    #[test]
    fn zero_stress_gives_equal_coefficients() {
        let g = Grid2::new(64).unwrap();
        let z = SpectralField::zeros(g, Rank::SymTensor, 3).unwrap().assume_real();
        let cg = CoeffGrid { band: 4, nodes: 9 };
        let c = coefficients_slice(&z, &z, 1.0, 0.0, 5.0, 0.04, cg).unwrap();
        let want = (0.2f64).sqrt() * gamma_sq(directions()[0], StressMatrix::default()).sqrt();
        for k in directions() {
            let a = c.get(k);
            assert!((a.mean()[0].re - want).abs() < 1e-14);
            assert!(a.sub(&SpectralField::constant(g, want)).unwrap().max_coeff() < 1e-13);
            assert!(c.get_dt(k).max_coeff() < 1e-14);
        }
    }

    #[test]
    fn vanishing_cutoff_short_circuits() {
        let g = Grid2::new(32).unwrap();
        let z = SpectralField::zeros(g, Rank::SymTensor, 3).unwrap();
        let c = coefficients_slice(&z, &z, 0.0, 0.0, 5.0, 0.04, CoeffGrid { band: 2, nodes: 5 }).unwrap();
        assert!(c.vanishes);
        assert_eq!(c.a[0].max_coeff(), 0.0);
    }
}
