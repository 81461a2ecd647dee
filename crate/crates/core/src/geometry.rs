//! Positive weights decomposing a symmetric trace-free matrix over the eight
//! directions of [`crate::blocks::directions`].
//!
//! The ramp `Gamma(s) = 1 + max(s, 0)` is smoothed by the unit-mass bump on
//! `[-1, 1]`, giving `Gamma_*(s) = 1 + s F(s) - M(s)` inside `(-1, 1)`, where
//! `F` and `M` are the bump's distribution function and first moment. Outside
//! `[-1, 1]` the smoothed ramp coincides with the ramp itself.

use std::sync::OnceLock;

use crate::blocks::Direction;
use crate::quadrature::{bump_1d, integrate};

/// Symmetric trace-free matrix `[[r11, r12], [r12, -r11]]`.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct StressMatrix {
    pub r11: f64,
    pub r12: f64,
}

impl StressMatrix {
    pub fn new(r11: f64, r12: f64) -> Self {
        StressMatrix { r11, r12 }
    }

    pub fn to_array(self) -> [[f64; 2]; 2] {
        [[self.r11, self.r12], [self.r12, -self.r11]]
    }

    pub fn max_abs(self) -> f64 {
        self.r11.abs().max(self.r12.abs())
    }

    pub fn scale(self, a: f64) -> Self {
        StressMatrix { r11: a * self.r11, r12: a * self.r12 }
    }
}

const C11: f64 = 25.0 / 14.0;
const C12: f64 = 25.0 / 48.0;

/// Tabulated smoothed ramp `Gamma_*` with derivative `Gamma_*' = F`.
#[derive(Debug)]
pub struct RampProfile {
    h: f64,
    gamma: Vec<f64>,
    cdf: Vec<f64>,
    density: Vec<f64>,
}

impl RampProfile {
    /// Default table with 4097 nodes on `[-1, 1]`.
    pub fn shared() -> &'static RampProfile {
        static PROFILE: OnceLock<RampProfile> = OnceLock::new();
        PROFILE.get_or_init(|| RampProfile::build(4097))
    }

    /// Build a table with `nodes` (odd, >= 3) equispaced nodes on `[-1, 1]`.
    pub fn build(nodes: usize) -> RampProfile {
        assert!(nodes >= 3 && nodes % 2 == 1, "node count must be odd and >= 3");
        let h = 2.0 / (nodes - 1) as f64;
        let s = |j: usize| -1.0 + j as f64 * h;
        let mut f = vec![0.0; nodes];
        let mut m = vec![0.0; nodes];
        for j in 1..nodes {
            let (a, b) = (s(j - 1), s(j));
            f[j] = f[j - 1] + integrate(bump_1d, a, b, 1);
            m[j] = m[j - 1] + integrate(|u| u * bump_1d(u), a, b, 1);
        }
        // Enforce F(-s) = 1 - F(s) and M(-s) = M(s) on the symmetric grid,
        // which makes Gamma_*(s) - Gamma_*(-s) = s hold to round-off.
        let mut fs = vec![0.0; nodes];
        let mut ms = vec![0.0; nodes];
        for j in 0..nodes {
            let k = nodes - 1 - j;
            fs[j] = 0.5 * (f[j] + 1.0 - f[k]);
            ms[j] = 0.5 * (m[j] + m[k]);
        }
        let gamma = (0..nodes).map(|j| 1.0 + s(j) * fs[j] - ms[j]).collect();
        let density = (0..nodes).map(|j| bump_1d(s(j))).collect();
        RampProfile { h, gamma, cdf: fs, density }
    }

    fn locate(&self, s: f64) -> (usize, f64) {
        let x = (s + 1.0) / self.h;
        let j = (x.floor() as usize).min(self.gamma.len() - 2);
        (j, x - j as f64)
    }

    fn hermite(y0: f64, y1: f64, d0: f64, d1: f64, h: f64, t: f64) -> f64 {
        let t2 = t * t;
        let t3 = t2 * t;
        (2.0 * t3 - 3.0 * t2 + 1.0) * y0
            + (t3 - 2.0 * t2 + t) * h * d0
            + (-2.0 * t3 + 3.0 * t2) * y1
            + (t3 - t2) * h * d1
    }

    /// `Gamma_*(s)`.
    pub fn value(&self, s: f64) -> f64 {
        if s >= 1.0 {
            return 1.0 + s;
        }
        if s <= -1.0 {
            return 1.0;
        }
        let (j, t) = self.locate(s);
        Self::hermite(self.gamma[j], self.gamma[j + 1], self.cdf[j], self.cdf[j + 1], self.h, t)
    }

    /// `Gamma_*'(s)`.
    pub fn derivative(&self, s: f64) -> f64 {
        if s >= 1.0 {
            return 1.0;
        }
        if s <= -1.0 {
            return 0.0;
        }
        let (j, t) = self.locate(s);
        Self::hermite(self.cdf[j], self.cdf[j + 1], self.density[j], self.density[j + 1], self.h, t)
    }
}

/// Signs `(s11, s12)` such that `gamma_k^2 = C11 Gamma_*(s11 R11) + C12 Gamma_*(s12 R12)`.
fn signs(k: Direction) -> (f64, f64) {
    // +-k share a weight; classify by the representative in the positive class.
    let five = k.positive_rep().five_k();
    match five {
        [3, 4] => (-1.0, 1.0),
        [3, -4] => (-1.0, -1.0),
        [4, 3] => (1.0, 1.0),
        [4, -3] => (1.0, -1.0),
        _ => unreachable!("direction outside the fixed set"),
    }
}

/// `gamma_k(R)^2`.
pub fn gamma_sq(k: Direction, r: StressMatrix) -> f64 {
    let prof = RampProfile::shared();
    let (a, b) = signs(k);
    C11 * prof.value(a * r.r11) + C12 * prof.value(b * r.r12)
}

/// Positive weight `gamma_k(R)`.
pub fn gamma(k: Direction, r: StressMatrix) -> f64 {
    gamma_sq(k, r).sqrt()
}

/// Gradient of `gamma_k(R)^2` with respect to `(R11, R12)`.
pub fn gamma_sq_grad(k: Direction, r: StressMatrix) -> [f64; 2] {
    let prof = RampProfile::shared();
    let (a, b) = signs(k);
    [C11 * a * prof.derivative(a * r.r11), C12 * b * prof.derivative(b * r.r12)]
}

/// Squared weights `gamma_k(R)^2` for every direction, in the order of
/// [`crate::blocks::directions`].
pub fn decompose(r: StressMatrix) -> Vec<(Direction, f64)> {
    crate::blocks::directions().into_iter().map(|k| (k, gamma_sq(k, r))).collect()
}

/// `sum_k gamma_k^2 (k (x) k)` as a stress matrix.
pub fn recompose(weights: &[(Direction, f64)]) -> StressMatrix {
    let mut out = StressMatrix::default();
    for (k, w) in weights {
        let m = k.tracefree_self();
        out.r11 += w * m[0][0];
        out.r12 += w * m[0][1];
    }
    out
}
