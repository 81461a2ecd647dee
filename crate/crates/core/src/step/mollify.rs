//! Space-time mollification of a state and the commutator stress.

use std::collections::HashMap;
use std::sync::Mutex;

use crate::calculus::{tracefree_square, tracefree_sym};
use crate::error::{CiError, Result};
use crate::field::SpectralField;
use crate::quadrature::radial_bump_hat;
use crate::step::state::NSRState;
use crate::track::{convolve_time, fd_derivative, time_mollifier, TimeTrack};

/// Fourier multiplier `hat phi(ell |xi|)` of the radial unit-mass bump at scale `ell`.
pub struct SpatialMollifier {
    ell: f64,
    cache: Mutex<HashMap<i64, f64>>,
}

impl SpatialMollifier {
    pub fn new(ell: f64) -> Self {
        SpatialMollifier { ell, cache: Mutex::new(HashMap::new()) }
    }

    /// Multiplier value at wave vector `xi`.
    pub fn symbol(&self, xi: [i64; 2]) -> f64 {
        let k2 = xi[0] * xi[0] + xi[1] * xi[1];
        let mut cache = self.cache.lock().expect("mollifier cache poisoned");
        *cache.entry(k2).or_insert_with(|| radial_bump_hat(self.ell * (k2 as f64).sqrt()))
    }

    pub fn apply(&self, f: &SpectralField) -> SpectralField {
        let real = f.is_real();
        let out = f.multiplier(|xi| self.symbol(xi));
        if real {
            out.assume_real()
        } else {
            out
        }
    }
}

/// Mollified tracks. All carry derivative channels.
#[derive(Clone, Debug)]
pub struct Mollified {
    pub v_l: TimeTrack,
    /// Mollified trace-free pressure `p + |v|^2/2`.
    pub pi_l: TimeTrack,
    pub r_l: TimeTrack,
    /// Commutator `v_l (x) v_l - moll(v (x) v)`.
    pub r_m: TimeTrack,
    /// `r_l + r_m`.
    pub r_ls: TimeTrack,
    pub ell: f64,
    pub time_weights: Vec<(isize, f64)>,
}

/// Mollify `(v, p, R)` in space by `phi_ell` and in time by the sampled `phi~_ell`.
///
/// Requires at least `2 ell` of padding on each side of `[0, T]`.
pub fn mollify(state: &NSRState, ell: f64) -> Result<Mollified> {
    let axis = state.axis();
    if axis.pad() < 2.0 * ell - 1e-12 {
        return Err(CiError::Padding(format!("padding {} is less than 2 ell = {}", axis.pad(), 2.0 * ell)));
    }
    let w = time_mollifier(ell, axis.dt);
    let sm = SpatialMollifier::new(ell);
    let moll = |slices: &[SpectralField]| -> Result<Vec<SpectralField>> {
        let spatial: Vec<SpectralField> = slices.iter().map(|s| sm.apply(s)).collect();
        convolve_time(&spatial, &w)
    };

    let v = state.v.slices();
    let dv = state.v.derivative()?;
    let v_l = moll(v)?;
    let dv_l = moll(&dv)?;

    let vv: Vec<SpectralField> = v.iter().map(tracefree_square).collect::<Result<_>>()?;
    let dvv: Vec<SpectralField> = v.iter().zip(&dv).map(|(a, b)| tracefree_sym(a, b)).collect::<Result<_>>()?;
    let vv_l = moll(&vv)?;
    let dvv_l = moll(&dvv)?;
    let mut r_m = Vec::with_capacity(v.len());
    let mut dr_m = Vec::with_capacity(v.len());
    for i in 0..v.len() {
        r_m.push(tracefree_square(&v_l[i])?.sub(&vv_l[i])?);
        dr_m.push(tracefree_sym(&v_l[i], &dv_l[i])?.sub(&dvv_l[i])?);
    }

    let r_l = moll(state.r.slices())?;
    let dr_l = moll(&fd_derivative(state.r.slices(), axis.dt)?)?;

    let pi: Vec<SpectralField> = v
        .iter()
        .zip(state.p.slices())
        .map(|(v, p)| p.add(&v.square_norm()?.scale(0.5)))
        .collect::<Result<_>>()?;
    let pi_l = moll(&pi)?;

    let r_ls: Vec<SpectralField> = r_l.iter().zip(&r_m).map(|(a, b)| a.add(b)).collect::<Result<_>>()?;
    let dr_ls: Vec<SpectralField> = dr_l.iter().zip(&dr_m).map(|(a, b)| a.add(b)).collect::<Result<_>>()?;

    Ok(Mollified {
        v_l: TimeTrack::new(axis, v_l, Some(dv_l))?,
        pi_l: TimeTrack::new(axis, pi_l, None)?,
        r_l: TimeTrack::new(axis, r_l, Some(dr_l))?,
        r_m: TimeTrack::new(axis, r_m, Some(dr_m))?,
        r_ls: TimeTrack::new(axis, r_ls, Some(dr_ls))?,
        ell,
        time_weights: w,
    })
}

/// The mollified triple `(v_l, pi_l - |v_l|^2/2, r_ls)` as a state.
pub fn mollified_state(state: &NSRState, m: &Mollified) -> Result<NSRState> {
    let p: Vec<SpectralField> = m
        .pi_l
        .slices()
        .iter()
        .zip(m.v_l.slices())
        .map(|(pi, v)| pi.sub(&v.square_norm()?.scale(0.5)))
        .collect::<Result<_>>()?;
    let r = TimeTrack::new(m.r_ls.axis(), m.r_ls.slices().to_vec(), None)?;
    let mut s = NSRState::new(m.v_l.clone(), TimeTrack::new(m.v_l.axis(), p, None)?, r, state.theta, state.nu, state.q)?;
    s.meta.push(format!("mollified at ell = {}", m.ell));
    Ok(s)
}
