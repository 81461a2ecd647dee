//! Smooth temporal cutoff equal to one on the temporal support of a stress.

use serde::Serialize;

use crate::geometry::RampProfile;
use crate::quadrature::bump_1d;
use crate::track::{support_mask, TimeAxis, TimeTrack};

/// Relative threshold deciding whether a slice belongs to the temporal support.
pub const SUPPORT_THRESHOLD: f64 = 1e-13;

/// `Phi(t) = sum_I [F((t - a_I)/h) - F((t - b_I)/h)]` with `h = ell/2`,
/// where each `I = [t0 - ell/2, t1 + ell/2]` widens a run `[t0, t1]` of
/// support nodes and `F` is the bump's distribution function.
#[derive(Clone, Debug, Serialize)]
pub struct CutoffProfile {
    pub ell: f64,
    /// Support runs `[t0, t1]` after merging runs closer than `2 ell`.
    pub runs: Vec<(f64, f64)>,
    pub support: Vec<bool>,
    pub values: Vec<f64>,
    pub dvalues: Vec<f64>,
}

impl CutoffProfile {
    /// Build from a support mask on a time axis.
    pub fn from_support(axis: &TimeAxis, support: Vec<bool>, ell: f64) -> CutoffProfile {
        let times = axis.times();
        let mut runs: Vec<(f64, f64)> = Vec::new();
        let mut i = 0;
        while i < support.len() {
            if support[i] {
                let start = i;
                while i + 1 < support.len() && support[i + 1] {
                    i += 1;
                }
                let (t0, t1) = (times[start], times[i]);
                match runs.last_mut() {
                    // gaps of at most 2 ell stay within N_ell of the support
                    Some(last) if t0 - last.1 <= 2.0 * ell => last.1 = t1,
                    _ => runs.push((t0, t1)),
                }
            }
            i += 1;
        }
        let mut p = CutoffProfile { ell, runs, support, values: Vec::new(), dvalues: Vec::new() };
        p.values = times.iter().map(|t| p.value(*t)).collect();
        p.dvalues = times.iter().map(|t| p.derivative(*t)).collect();
        p
    }

    fn h(&self) -> f64 {
        0.5 * self.ell
    }

    pub fn value(&self, t: f64) -> f64 {
        let f = RampProfile::shared();
        let h = self.h();
        self.runs
            .iter()
            .map(|(t0, t1)| f.derivative((t - t0) / h + 1.0) - f.derivative((t - t1) / h - 1.0))
            .sum()
    }

    pub fn derivative(&self, t: f64) -> f64 {
        let h = self.h();
        self.runs.iter().map(|(t0, t1)| (bump_1d((t - t0) / h + 1.0) - bump_1d((t - t1) / h - 1.0)) / h).sum()
    }

    /// Distance from `t` to the nearest support node, `inf` if none.
    pub fn distance_to_support(&self, axis: &TimeAxis, t: f64) -> f64 {
        self.support
            .iter()
            .enumerate()
            .filter(|(_, s)| **s)
            .map(|(i, _)| (axis.time(i) - t).abs())
            .fold(f64::INFINITY, f64::min)
    }
}

/// Cutoff for the temporal support of `r_ls`.
pub fn temporal_cutoff(r_ls: &TimeTrack, ell: f64) -> CutoffProfile {
    let axis = r_ls.axis();
    CutoffProfile::from_support(&axis, support_mask(&r_ls.sup_norms(), SUPPORT_THRESHOLD), ell)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_support_gives_zero() {
        let axis = TimeAxis::new(1.0, 21, 0.2).unwrap();
        let p = CutoffProfile::from_support(&axis, vec![false; axis.len()], 0.05);
        assert!(p.values.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn profile_is_one_on_support_and_confined() {
        let axis = TimeAxis::new(1.0, 101, 0.1).unwrap();
        let support: Vec<bool> = axis.times().iter().map(|t| (0.3..=0.5).contains(t)).collect();
        let p = CutoffProfile::from_support(&axis, support, 0.05);
        for (i, t) in axis.times().iter().enumerate() {
            let v = p.values[i];
            assert!((0.0..=1.0 + 1e-15).contains(&v));
            if (0.3..=0.5).contains(t) {
                assert_eq!(v, 1.0);
            }
            if v > 0.0 {
                assert!(*t >= 0.25 - 1e-12 && *t <= 0.55 + 1e-12, "t = {t}");
            }
        }
    }
}
