//! Independent evaluation of the Navier–Stokes–Reynolds residual
//! `d_t v + div(v (x) v) + grad(p + |v|^2/2) + nu (-Delta)^theta v - div R`.

use serde::Serialize;

use crate::calculus::{frac_laplacian, tracefree_square};
use crate::error::Result;
use crate::field::SpectralField;
use crate::step::state::NSRState;

/// Per-slice residual sizes.
#[derive(Clone, Debug, Serialize)]
pub struct ResidualReport {
    /// `||res||_{L^2}`.
    pub absolute: Vec<f64>,
    /// `||res||_{L^2} / (1 + sum of the L^2 norms of the individual terms)`.
    pub relative: Vec<f64>,
    /// Max of `relative` over nodes in `[0, T]`.
    pub max_interior: f64,
}

/// Residual field of one slice and its normalization `1 + sum ||term||_{L^2}`.
pub fn residual_slice(
    v: &SpectralField,
    dv: &SpectralField,
    p: &SpectralField,
    r: &SpectralField,
    theta: f64,
    nu: f64,
) -> Result<(SpectralField, f64)> {
    let transport = tracefree_square(v)?.divergence()?;
    let pressure = p.add(&v.square_norm()?.scale(0.5))?.gradient()?;
    let dissipation = frac_laplacian(v, theta)?.scale(nu);
    let stress = r.divergence()?;
    let terms = [dv, &transport, &pressure, &dissipation, &stress];
    let scale = 1.0 + terms.iter().map(|t| t.l2_from_coeffs()).sum::<f64>();
    let res = SpectralField::sum([dv, &transport, &pressure, &dissipation])?.sub(&stress)?;
    Ok((res, scale))
}

/// Residual report over all slices, using the velocity's derivative channel
/// when present and sixth-order differences otherwise.
pub fn nsr_residual(state: &NSRState) -> Result<ResidualReport> {
    let dv = state.v.derivative()?;
    let axis = state.axis();
    let mut absolute = Vec::with_capacity(axis.len());
    let mut relative = Vec::with_capacity(axis.len());
    for i in 0..axis.len() {
        let (res, scale) =
            residual_slice(state.v.slice(i), &dv[i], state.p.slice(i), state.r.slice(i), state.theta, state.nu)?;
        let a = res.l2_from_coeffs();
        absolute.push(a);
        relative.push(a / scale);
    }
    let max_interior = axis.interior().map(|i| relative[i]).fold(0.0, f64::max);
    Ok(ResidualReport { absolute, relative, max_interior })
}

/// Residual fields for every slice.
pub fn nsr_residual_fields(state: &NSRState) -> Result<Vec<SpectralField>> {
    let dv = state.v.derivative()?;
    (0..state.axis().len())
        .map(|i| {
            residual_slice(state.v.slice(i), &dv[i], state.p.slice(i), state.r.slice(i), state.theta, state.nu)
                .map(|(f, _)| f)
        })
        .collect()
}
