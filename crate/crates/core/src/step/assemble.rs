//! Pressure correction and the new Reynolds stress of one slice.

use serde::Serialize;

use crate::blocks::{positive_directions, WaveParams};
use crate::calculus::{anti_divergence, frac_laplacian, inv_laplacian, tracefree_product, tracefree_square, tracefree_sym};
use crate::error::Result;
use crate::field::SpectralField;
use crate::step::perturb::SlicePerturbation;

/// `p* = ((lambda Psi)^2 - sum_k g_k^2)/2 + sum_{+} h_k - (2/mu) sum_{+} Delta^{-1} div(k d_t h_k)`.
///
/// With `p_{q+1} = p_l - p*` the isotropic part of the oscillation error
/// vanishes: the first group removes `|w_p|^2/2` minus its self-interaction
/// means, the second the low-frequency `h_k` parts, and the third the gradient
/// part of `d_t w_t`.
pub fn pressure_correction(pert: &SlicePerturbation, wp: &WaveParams) -> Result<SpectralField> {
    let lambda = wp.lambda as f64;
    let psi = pert.stream.scale(lambda);
    let mut p = psi.mul(&psi)?.scale(0.5);
    let dirs = positive_directions();
    for (j, k) in dirs.iter().enumerate() {
        // g_{-k} = g_k, so the sum over all eight directions doubles
        p = p.sub(&pert.g[j].mul(&pert.g[j])?)?;
        p = p.add(&pert.h[j])?;
        let flux = pert.dh[j].times_vector(k.k())?.divergence()?;
        p = p.sub(&inv_laplacian(&flux).scale(2.0 / wp.mu as f64))?;
    }
    Ok(p.into_real())
}

/// L1 sizes of the three groups of the new stress on one slice.
#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct StressGroups {
    pub lin: f64,
    pub corr: f64,
    pub osc: f64,
    /// Size of the mean removed before the anti-divergence, relative to the source.
    pub removed_mean: f64,
}

/// New velocity, pressure and stress on one slice.
#[derive(Clone, Debug)]
pub struct AssembledSlice {
    pub v: SpectralField,
    pub dv: SpectralField,
    pub p: SpectralField,
    pub r: SpectralField,
    pub p_star: SpectralField,
    pub groups: StressGroups,
}

/// Inputs from the mollified state on one slice.
pub struct MollifiedSlice<'a> {
    pub v: &'a SpectralField,
    pub dv: &'a SpectralField,
    /// `pi_l = (p + |v|^2/2)_l`.
    pub pi: &'a SpectralField,
    pub r_ls: &'a SpectralField,
}

/// `R_{q+1} = R(S)` with
/// `S = [d_t(w_p + w_c) + nu (-Delta)^theta w + div(v_l (x) w + w (x) v_l)]
///    + div((w_c + w_t) (x) w + w_p (x) (w_c + w_t))
///    + [div(w_p (x) w_p + R_ls) + d_t w_t - grad p*]`
/// and `p_{q+1} = pi_l - p* - |v_{q+1}|^2/2`.
pub fn assemble_slice(
    m: &MollifiedSlice,
    pert: &SlicePerturbation,
    wp: &WaveParams,
    theta: f64,
    nu: f64,
    with_groups: bool,
) -> Result<AssembledSlice> {
    let w = pert.total()?;
    let dw = pert.total_dt()?;
    let p_star = pressure_correction(pert, wp)?;

    let lin = SpectralField::sum([&pert.dw_p, &pert.dw_c])?
        .add(&frac_laplacian(&w, theta)?.scale(nu))?
        .add(&tracefree_sym(m.v, &w)?.divergence()?)?;
    let slow = pert.w_c.add(&pert.w_t)?;
    let corr = tracefree_product(&slow, &w)?.add(&tracefree_product(&pert.w_p, &slow)?)?.divergence()?;
    let osc = tracefree_square(&pert.w_p)?
        .add(m.r_ls)?
        .divergence()?
        .add(&pert.dw_t)?
        .sub(&p_star.gradient()?)?;
    let source = SpectralField::sum([&lin, &corr, &osc])?.into_real();
    let ad = anti_divergence(&source)?;
    let mean = ad.removed_mean.iter().map(|c| c.norm()).fold(0.0, f64::max);

    let groups = if with_groups {
        StressGroups {
            lin: anti_divergence(&lin)?.tensor.l1_norm(),
            corr: anti_divergence(&corr)?.tensor.l1_norm(),
            osc: anti_divergence(&osc)?.tensor.l1_norm(),
            removed_mean: mean / (1.0 + source.l2_from_coeffs()),
        }
    } else {
        StressGroups { removed_mean: mean / (1.0 + source.l2_from_coeffs()), ..Default::default() }
    };

    let v = m.v.add(&w)?.into_real();
    let dv = m.dv.add(&dw)?.into_real();
    let p = m.pi.sub(&p_star)?.sub(&v.square_norm()?.scale(0.5))?.into_real();
    Ok(AssembledSlice { v, dv, p, r: ad.tensor, p_star, groups })
}
