//! Time-sampled families of fields on a uniform, padded time grid.

use crate::error::{CiError, Result};
use crate::field::{Grid2, Rank, SpectralField};
use crate::quadrature::bump_1d;

/// Uniform time grid covering `[-pad, horizon + pad]`, with `n_t` nodes on
/// `[0, horizon]` and `n_pad` extra nodes on each side.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeAxis {
    pub horizon: f64,
    pub dt: f64,
    pub n_t: usize,
    pub n_pad: usize,
}

impl TimeAxis {
    /// Spacing `horizon / (n_t - 1)`; padding rounded up to whole steps.
    pub fn new(horizon: f64, n_t: usize, t_pad: f64) -> Result<Self> {
        if !(horizon > 0.0) || n_t < 2 || !(t_pad >= 0.0) {
            return Err(CiError::Config(format!("invalid time grid: T = {horizon}, n_t = {n_t}, t_pad = {t_pad}")));
        }
        let dt = horizon / (n_t - 1) as f64;
        let n_pad = (t_pad / dt - 1e-9).ceil().max(0.0) as usize;
        Ok(TimeAxis { horizon, dt, n_t, n_pad })
    }

    pub fn len(&self) -> usize {
        self.n_t + 2 * self.n_pad
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn time(&self, i: usize) -> f64 {
        (i as f64 - self.n_pad as f64) * self.dt
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.time(i)).collect()
    }

    /// Padding actually available on each side.
    pub fn pad(&self) -> f64 {
        self.n_pad as f64 * self.dt
    }

    /// Indices of nodes in `[0, horizon]`.
    pub fn interior(&self) -> std::ops::Range<usize> {
        self.n_pad..self.n_pad + self.n_t
    }
}

/// Slices of one rank on one grid, with an optional time-derivative channel.
#[derive(Clone, Debug)]
pub struct TimeTrack {
    axis: TimeAxis,
    slices: Vec<SpectralField>,
    dslices: Option<Vec<SpectralField>>,
}

impl TimeTrack {
    pub fn new(axis: TimeAxis, slices: Vec<SpectralField>, dslices: Option<Vec<SpectralField>>) -> Result<Self> {
        if slices.len() != axis.len() {
            return Err(CiError::InvalidInput(format!("{} slices for {} time nodes", slices.len(), axis.len())));
        }
        let (grid, rank) = (slices[0].grid(), slices[0].rank());
        let all = slices.iter().chain(dslices.iter().flatten());
        for s in all {
            if s.grid() != grid {
                return Err(CiError::GridMismatch("slices on different grids".into()));
            }
            if s.rank() != rank {
                return Err(CiError::Rank { expected: rank.name(), found: s.rank().name() });
            }
        }
        if let Some(d) = &dslices {
            if d.len() != slices.len() {
                return Err(CiError::InvalidInput("derivative channel length mismatch".into()));
            }
        }
        Ok(TimeTrack { axis, slices, dslices })
    }

    /// Zero track of the given rank.
    pub fn zeros(axis: TimeAxis, grid: Grid2, rank: Rank, with_channel: bool) -> Result<Self> {
        let z = SpectralField::zeros(grid, rank, 0)?;
        let slices = vec![z.clone(); axis.len()];
        let d = with_channel.then(|| slices.clone());
        TimeTrack::new(axis, slices, d)
    }

    pub fn axis(&self) -> TimeAxis {
        self.axis
    }

    pub fn len(&self) -> usize {
        self.slices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slices.is_empty()
    }

    pub fn grid(&self) -> Grid2 {
        self.slices[0].grid()
    }

    pub fn rank(&self) -> Rank {
        self.slices[0].rank()
    }

    pub fn slice(&self, i: usize) -> &SpectralField {
        &self.slices[i]
    }

    pub fn slices(&self) -> &[SpectralField] {
        &self.slices
    }

    pub fn dslice(&self, i: usize) -> Option<&SpectralField> {
        self.dslices.as_ref().map(|d| &d[i])
    }

    pub fn has_channel(&self) -> bool {
        self.dslices.is_some()
    }

    pub fn channel(&self) -> Option<&[SpectralField]> {
        self.dslices.as_deref()
    }

    pub fn into_parts(self) -> (TimeAxis, Vec<SpectralField>, Option<Vec<SpectralField>>) {
        (self.axis, self.slices, self.dslices)
    }

    /// Apply a linear, time-independent map to every slice and channel slice.
    pub fn map_linear<F>(&self, f: F) -> Result<TimeTrack>
    where
        F: Fn(&SpectralField) -> Result<SpectralField>,
    {
        let slices = self.slices.iter().map(&f).collect::<Result<Vec<_>>>()?;
        let d = match &self.dslices {
            Some(d) => Some(d.iter().map(&f).collect::<Result<Vec<_>>>()?),
            None => None,
        };
        TimeTrack::new(self.axis, slices, d)
    }

    /// Sixth-order finite-difference time derivative (7-point stencils,
    /// one-sided near the ends).
    pub fn fd_derivative(&self) -> Result<Vec<SpectralField>> {
        fd_derivative(&self.slices, self.axis.dt)
    }

    /// Analytic channel if present, otherwise finite differences.
    pub fn derivative(&self) -> Result<Vec<SpectralField>> {
        match &self.dslices {
            Some(d) => Ok(d.clone()),
            None => self.fd_derivative(),
        }
    }

    /// Per-slice grid sup of the pointwise magnitude.
    pub fn sup_norms(&self) -> Vec<f64> {
        self.slices.iter().map(|s| s.sup_norm()).collect()
    }

    /// Nodes whose slice sup exceeds `rel * (track max)`; empty when the track vanishes.
    pub fn support(&self, rel: f64) -> Vec<bool> {
        support_mask(&self.sup_norms(), rel)
    }
}

/// Mask of entries above `rel * max`; all false when the max is zero.
pub fn support_mask(norms: &[f64], rel: f64) -> Vec<bool> {
    let max = norms.iter().copied().fold(0.0, f64::max);
    if max == 0.0 {
        return vec![false; norms.len()];
    }
    norms.iter().map(|n| *n > rel * max).collect()
}

/// `sum_j c_j f_j` over fields of equal rank.
pub fn lincomb(terms: &[(f64, &SpectralField)]) -> Result<SpectralField> {
    let mut acc = terms[0].1.scale(terms[0].0);
    for (c, f) in &terms[1..] {
        if *c != 0.0 {
            acc = acc.axpy(rustfft::num_complex::Complex64::new(*c, 0.0), f)?;
        }
    }
    Ok(acc)
}

/// Finite-difference weights for the `order`-th derivative at `z` from nodes `x`.
pub fn fd_weights(z: f64, x: &[f64], order: usize) -> Vec<f64> {
    let n = x.len();
    let mut c = vec![vec![0.0; order + 1]; n];
    let mut c1 = 1.0;
    let mut c4 = x[0] - z;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = x[i] - z;
        for j in 0..i {
            let c3 = x[i] - x[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|row| row[order]).collect()
}

/// Sixth-order first derivative of a uniformly sampled sequence of fields.
pub fn fd_derivative(slices: &[SpectralField], dt: f64) -> Result<Vec<SpectralField>> {
    let n = slices.len();
    if n < 7 {
        return Err(CiError::InvalidInput(format!("finite differences need >= 7 time nodes, got {n}")));
    }
    (0..n)
        .map(|i| {
            let start = i.saturating_sub(3).min(n - 7);
            let nodes: Vec<f64> = (start..start + 7).map(|j| j as f64).collect();
            let w = fd_weights(i as f64, &nodes, 1);
            let terms: Vec<(f64, &SpectralField)> = w.iter().zip(&slices[start..start + 7]).map(|(w, s)| (w / dt, s)).collect();
            lincomb(&terms)
        })
        .collect()
}

/// Normalized samples of the time mollifier `bump(t / ell) / ell` at offsets
/// `j dt`; the returned `(j, w_j)` sum to one.
pub fn time_mollifier(ell: f64, dt: f64) -> Vec<(isize, f64)> {
    let reach = (ell / dt).floor() as isize;
    let mut w: Vec<(isize, f64)> = (-reach..=reach).map(|j| (j, bump_1d(j as f64 * dt / ell))).filter(|(_, v)| *v > 0.0).collect();
    let total: f64 = w.iter().map(|(_, v)| v).sum();
    if total == 0.0 {
        return vec![(0, 1.0)];
    }
    for (_, v) in w.iter_mut() {
        *v /= total;
    }
    w
}

/// Discrete convolution in time with constant extension beyond the ends.
pub fn convolve_time(slices: &[SpectralField], weights: &[(isize, f64)]) -> Result<Vec<SpectralField>> {
    let n = slices.len() as isize;
    (0..n)
        .map(|i| {
            let terms: Vec<(f64, &SpectralField)> =
                weights.iter().map(|(j, w)| (*w, &slices[(i - j).clamp(0, n - 1) as usize])).collect();
            lincomb(&terms)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rustfft::num_complex::Complex64;

    #[test]
    fn axis_layout() {
        let a = TimeAxis::new(1.0, 33, 0.1).unwrap();
        assert_eq!(a.dt, 1.0 / 32.0);
        assert_eq!(a.n_pad, 4);
        assert_eq!(a.len(), 41);
        assert_eq!(a.time(4), 0.0);
        assert_eq!(a.time(36), 1.0);
        assert_eq!(TimeAxis::new(1.0, 11, 0.2).unwrap().n_pad, 2);
    }

    #[test]
    fn fd_weights_are_sixth_order() {
        let x: Vec<f64> = (0..7).map(|j| j as f64).collect();
        let w = fd_weights(3.0, &x, 1);
        let expected = [-1.0 / 60.0, 3.0 / 20.0, -0.75, 0.0, 0.75, -3.0 / 20.0, 1.0 / 60.0];
        for (a, b) in w.iter().zip(expected) {
            assert!((a - b).abs() < 1e-13);
        }
        // one-sided stencil differentiates t^6 exactly
        let w = fd_weights(0.0, &x, 1);
        let d: f64 = w.iter().zip(&x).map(|(w, x)| w * (x - 0.0).powi(6)).sum();
        assert!(d.abs() < 1e-9);
    }

    #[test]
    fn fd_derivative_of_sine() {
        let g = Grid2::new(8).unwrap();
        let axis = TimeAxis::new(1.0, 41, 0.0).unwrap();
        let slices: Vec<SpectralField> =
            axis.times().iter().map(|t| SpectralField::constant(g, (3.0 * t).sin())).collect();
        let d = fd_derivative(&slices, axis.dt).unwrap();
        for (i, t) in axis.times().iter().enumerate() {
            assert!((d[i].coeff(0, [0, 0]).re - 3.0 * (3.0 * t).cos()).abs() < 1e-6);
        }
    }

    #[test]
    fn mollifier_preserves_constants() {
        let g = Grid2::new(8).unwrap();
        let w = time_mollifier(0.05, 1.0 / 32.0);
        assert_eq!(w.len(), 3);
        let total: f64 = w.iter().map(|(_, v)| v).sum();
        assert!((total - 1.0).abs() < 1e-15);
        let slices = vec![SpectralField::constant(g, 2.0); 9];
        let m = convolve_time(&slices, &w).unwrap();
        assert!(m.iter().all(|s| (s.coeff(0, [0, 0]) - Complex64::new(2.0, 0.0)).norm() < 1e-15));
    }

    #[test]
    fn support_of_zero_is_empty() {
        assert_eq!(support_mask(&[0.0, 0.0], 1e-13), vec![false, false]);
        assert_eq!(support_mask(&[0.0, 1.0, 1e-14], 1e-13), vec![false, true, false]);
    }
}
