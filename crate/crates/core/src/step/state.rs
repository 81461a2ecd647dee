//! Navier–Stokes–Reynolds states and their initialization.

use crate::calculus::{anti_div, frac_laplacian, tracefree_square};
use crate::error::{CiError, Result};
use crate::field::{Grid2, Rank, SpectralField};
use crate::track::{TimeAxis, TimeTrack};

/// `(v, p, R)` on a common time grid. `p` is the pressure of the full-tensor
/// form `d_t v + div(v (x) v) + grad p`; the trace-free form uses `p + |v|^2/2`.
#[derive(Clone, Debug)]
pub struct NSRState {
    pub v: TimeTrack,
    pub p: TimeTrack,
    pub r: TimeTrack,
    pub theta: f64,
    pub nu: f64,
    pub q: u32,
    pub meta: Vec<String>,
}

/// Relative tolerance for divergence and mean of a velocity slice.
pub const VELOCITY_TOL: f64 = 1e-10;

/// `(||div v||_{L^2}, |mean v|)` relative to `1 + ||v||_{L^2}`.
pub fn velocity_defects(v: &SpectralField) -> Result<(f64, f64)> {
    let scale = 1.0 + v.l2_from_coeffs();
    let div = v.divergence()?.l2_from_coeffs() / scale;
    let mean = v.mean().iter().map(|m| m.norm()).fold(0.0, f64::max) / scale;
    Ok((div, mean))
}

fn check_velocity(v: &TimeTrack, tol: f64) -> Result<()> {
    v.slices()[0].require_rank(Rank::Vector)?;
    for (i, s) in v.slices().iter().enumerate() {
        let (div, mean) = velocity_defects(s)?;
        if div > tol || mean > tol {
            return Err(CiError::InvalidInput(format!(
                "velocity slice {i}: relative divergence {div:.3e}, relative mean {mean:.3e} exceed {tol:e}"
            )));
        }
    }
    Ok(())
}

impl NSRState {
    pub fn new(v: TimeTrack, p: TimeTrack, r: TimeTrack, theta: f64, nu: f64, q: u32) -> Result<Self> {
        if v.axis() != p.axis() || v.axis() != r.axis() {
            return Err(CiError::InvalidInput("tracks on different time grids".into()));
        }
        if v.grid() != p.grid() || v.grid() != r.grid() {
            return Err(CiError::GridMismatch("tracks on different spatial grids".into()));
        }
        p.slices()[0].require_rank(Rank::Scalar)?;
        r.slices()[0].require_rank(Rank::SymTensor)?;
        if !(0.0..=1.0).contains(&theta) || !(nu >= 0.0) {
            return Err(CiError::Config(format!("theta = {theta}, nu = {nu} out of range")));
        }
        check_velocity(&v, VELOCITY_TOL)?;
        Ok(NSRState { v, p, r, theta, nu, q, meta: Vec::new() })
    }

    pub fn axis(&self) -> TimeAxis {
        self.v.axis()
    }

    pub fn grid(&self) -> Grid2 {
        self.v.grid()
    }

    /// Zero state on the given grids.
    pub fn zero(axis: TimeAxis, grid: Grid2, theta: f64, nu: f64) -> Result<Self> {
        NSRState::new(
            TimeTrack::zeros(axis, grid, Rank::Vector, true)?,
            TimeTrack::zeros(axis, grid, Rank::Scalar, false)?,
            TimeTrack::zeros(axis, grid, Rank::SymTensor, false)?,
            theta,
            nu,
            0,
        )
    }
}

/// Initial triple `v_0 = u`, `p_0 = -|u|^2/2`,
/// `R_0 = R(d_t u + nu (-Delta)^theta u) + u (x) u`.
pub fn init_state(u: TimeTrack, theta: f64, nu: f64) -> Result<NSRState> {
    check_velocity(&u, 1e-8)?;
    let du = u.derivative()?;
    let mut p = Vec::with_capacity(u.len());
    let mut r = Vec::with_capacity(u.len());
    for (v, dv) in u.slices().iter().zip(&du) {
        let src = dv.add(&frac_laplacian(v, theta)?.scale(nu))?;
        r.push(anti_div(&src)?.add(&tracefree_square(v)?)?);
        p.push(v.square_norm()?.scale(-0.5));
    }
    let axis = u.axis();
    let u = if u.has_channel() { u } else { TimeTrack::new(axis, u.slices().to_vec(), Some(du))? };
    let mut s = NSRState::new(u, TimeTrack::new(axis, p, None)?, TimeTrack::new(axis, r, None)?, theta, nu, 0)?;
    s.meta.push("initialized: p0 = -|v0|^2/2, R0 = R(d_t v0 + nu (-Delta)^theta v0) + v0 (x) v0".into());
    Ok(s)
}
