//! Directions, stationary single-mode flows, Dirichlet kernels, the directed
//! intermittent kernel `eta_k`, and the intermittent flow `w_k = eta_k b_k`.

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{CiError, Result};
use crate::field::{Grid2, Rank, SpectralField};

/// Unit vector `k` with `5k` integral, drawn from the eight fixed directions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Direction {
    five: [i64; 2],
}

const POSITIVE: [[i64; 2]; 4] = [[3, 4], [3, -4], [4, 3], [4, -3]];

impl Direction {
    /// Direction with `5k = five`; must be one of the eight fixed vectors.
    pub fn from_five(five: [i64; 2]) -> Result<Self> {
        let ok = POSITIVE.iter().any(|p| *p == five || [-p[0], -p[1]] == five);
        if !ok {
            return Err(CiError::InvalidInput(format!("{five:?}/5 is not in the direction set")));
        }
        Ok(Direction { five })
    }

    /// `5k` as integers.
    pub fn five_k(self) -> [i64; 2] {
        self.five
    }

    /// `5 k_perp = 5 (-k2, k1)`.
    pub fn five_perp(self) -> [i64; 2] {
        [-self.five[1], self.five[0]]
    }

    pub fn k(self) -> [f64; 2] {
        [self.five[0] as f64 / 5.0, self.five[1] as f64 / 5.0]
    }

    pub fn perp(self) -> [f64; 2] {
        let p = self.five_perp();
        [p[0] as f64 / 5.0, p[1] as f64 / 5.0]
    }

    /// Member of the positive class.
    pub fn is_positive(self) -> bool {
        POSITIVE.contains(&self.five)
    }

    pub fn neg(self) -> Direction {
        Direction { five: [-self.five[0], -self.five[1]] }
    }

    /// `k` if positive, else `-k`.
    pub fn positive_rep(self) -> Direction {
        if self.is_positive() {
            self
        } else {
            self.neg()
        }
    }

    /// Position in [`directions`].
    pub fn index(self) -> usize {
        let base = POSITIVE.iter().position(|p| *p == self.positive_rep().five).expect("valid direction");
        if self.is_positive() {
            base
        } else {
            base + 4
        }
    }

    /// `k (x) k` as a full matrix.
    pub fn tracefree_self(self) -> [[f64; 2]; 2] {
        crate::calculus::tracefree_const(self.k(), self.k())
    }

    /// `lambda k`, which must be an integer vector.
    pub fn scaled(self, lambda: u64) -> Result<[i64; 2]> {
        scaled_lattice(self.five, lambda)
    }
}

fn scaled_lattice(five: [i64; 2], lambda: u64) -> Result<[i64; 2]> {
    let l = lambda as i64;
    let x = [l * five[0], l * five[1]];
    if x[0] % 5 != 0 || x[1] % 5 != 0 {
        return Err(CiError::NonIntegerFrequency(format!("{lambda} * {five:?}/5 is not integral")));
    }
    Ok([x[0] / 5, x[1] / 5])
}

/// The eight directions: the positive class `(3,4)/5, (3,-4)/5, (4,3)/5,
/// (4,-3)/5` followed by their antipodes in the same order.
pub fn directions() -> Vec<Direction> {
    let pos: Vec<Direction> = POSITIVE.iter().map(|f| Direction { five: *f }).collect();
    let neg: Vec<Direction> = pos.iter().map(|d| d.neg()).collect();
    pos.into_iter().chain(neg).collect()
}

/// Positive-class directions only.
pub fn positive_directions() -> Vec<Direction> {
    directions().into_iter().take(4).collect()
}

/// Oscillation parameters `(lambda, sigma, r, mu)` with `sigma = 1 / sigma_inv`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WaveParams {
    pub lambda: u64,
    pub sigma_inv: u64,
    pub r: u64,
    pub mu: u64,
}

impl WaveParams {
    /// Validate divisibility: `lambda in 5N`, `sigma_inv | lambda`, `lambda sigma in 5N`.
    pub fn new(lambda: u64, sigma_inv: u64, r: u64, mu: u64) -> Result<Self> {
        if lambda == 0 || sigma_inv == 0 || r == 0 || mu == 0 {
            return Err(CiError::Config("wave parameters must be positive".into()));
        }
        if lambda % 5 != 0 {
            return Err(CiError::Divisibility(format!("lambda = {lambda} is not a multiple of 5")));
        }
        if lambda % sigma_inv != 0 {
            return Err(CiError::Divisibility(format!("1/sigma = {sigma_inv} does not divide lambda = {lambda}")));
        }
        if (lambda / sigma_inv) % 5 != 0 {
            return Err(CiError::Divisibility(format!(
                "lambda sigma = {lambda}/{sigma_inv} is not a multiple of 5"
            )));
        }
        Ok(WaveParams { lambda, sigma_inv, r, mu })
    }

    /// `lambda sigma`.
    pub fn lambda_sigma(&self) -> u64 {
        self.lambda / self.sigma_inv
    }

    pub fn sigma(&self) -> f64 {
        1.0 / self.sigma_inv as f64
    }

    /// Scale-separation warnings for `1 <= r <= mu <= 1/sigma <= lambda`.
    pub fn warnings(&self) -> Vec<String> {
        let chain = [("1", 1), ("r", self.r), ("mu", self.mu), ("1/sigma", self.sigma_inv), ("lambda", self.lambda)];
        let mut out = Vec::new();
        for w in chain.windows(2) {
            let (ln, lv) = w[0];
            let (hn, hv) = w[1];
            if lv > hv {
                out.push(format!("ordering violated: {ln} = {lv} exceeds {hn} = {hv}"));
            } else if 2 * lv > hv {
                out.push(format!("weak separation: {hn}/{ln} = {} < 2", hv as f64 / lv as f64));
            }
        }
        out
    }

    /// Largest `|xi|_inf` among modes of `eta_k`, over all directions.
    pub fn eta_band(&self) -> usize {
        let ls = self.lambda_sigma() as i64;
        let r = self.r as i64;
        // |a 5k + b 5k_perp|_inf is maximized at a corner of the square
        let mut best = 0;
        for f in POSITIVE {
            let p = [-f[1], f[0]];
            for (a, b) in [(r, r), (r, -r)] {
                let x = (a * f[0] + b * p[0]).abs().max((a * f[1] + b * p[1]).abs());
                best = best.max(x);
            }
        }
        (ls * best / 5) as usize
    }

    /// Band of `w_k`.
    pub fn flow_band(&self) -> usize {
        self.eta_band() + (self.lambda as usize) * 4 / 5
    }
}

/// `psi_k = exp(i lambda k.x) / lambda`.
pub fn wave_psi(grid: Grid2, k: Direction, lambda: u64) -> Result<SpectralField> {
    let xi = k.scaled(lambda)?;
    SpectralField::mode(grid, Rank::Scalar, xi, &[Complex64::new(1.0 / lambda as f64, 0.0)])
}

/// `b_k = i k_perp exp(i lambda k.x)`.
pub fn wave_b(grid: Grid2, k: Direction, lambda: u64) -> Result<SpectralField> {
    let xi = k.scaled(lambda)?;
    let p = k.perp();
    SpectralField::mode(grid, Rank::Vector, xi, &[Complex64::new(0.0, p[0]), Complex64::new(0.0, p[1])])
}

/// Dirichlet kernel `D_r = (2r+1)^{-1} sum_{|xi|_inf <= r} exp(i xi.x)`.
pub fn dirichlet_kernel(grid: Grid2, r: usize) -> Result<SpectralField> {
    let mut d = SpectralField::zeros(grid, Rank::Scalar, r)?;
    let c = Complex64::new(1.0 / (2 * r + 1) as f64, 0.0);
    let waves: Vec<[i64; 2]> = d.waves().collect();
    for xi in waves {
        d.set_coeff(0, xi, c);
    }
    Ok(d.assume_real())
}

/// `eta_k` and its time derivative at time `t`.
#[derive(Clone, Debug)]
pub struct Eta {
    pub value: SpectralField,
    pub dt: SpectralField,
}

/// Directed, rescaled, drifting Dirichlet kernel
/// `eta_k(t, x) = D_r(lambda sigma (k.x + mu t), lambda sigma k_perp.x)` for `k`
/// in the positive class, and `eta_{-k} = eta_k`.
pub fn eta(grid: Grid2, k: Direction, wp: &WaveParams, t: f64) -> Result<Eta> {
    let k = k.positive_rep();
    let ls = wp.lambda_sigma();
    let band = wp.eta_band();
    grid.check_band(band, "eta kernel")?;
    let r = wp.r as i64;
    let fk = k.five_k();
    let fp = k.five_perp();
    let mut value = SpectralField::zeros(grid, Rank::Scalar, band)?;
    let mut dt = SpectralField::zeros(grid, Rank::Scalar, band)?;
    let amp = 1.0 / (2 * r + 1) as f64;
    let omega = (ls * wp.mu) as f64;
    for a in -r..=r {
        let phase = Complex64::from_polar(amp, a as f64 * omega * t);
        let rate = Complex64::new(0.0, a as f64 * omega);
        for b in -r..=r {
            let five = [a * fk[0] + b * fp[0], a * fk[1] + b * fp[1]];
            let xi = scaled_lattice(five, ls)?;
            value.set_coeff(0, xi, phase);
            dt.set_coeff(0, xi, phase * rate);
        }
    }
    Ok(Eta { value: value.assume_real(), dt: dt.assume_real() })
}

/// `w_k = eta_k b_k` and its time derivative.
#[derive(Clone, Debug)]
pub struct Flow {
    pub value: SpectralField,
    pub dt: SpectralField,
}

/// Multiply a scalar by `b_k`: a shift by `lambda k` times the constant `i k_perp`.
pub fn times_wave_b(s: &SpectralField, k: Direction, lambda: u64) -> Result<SpectralField> {
    let shifted = s.shift(k.scaled(lambda)?)?;
    let p = k.perp();
    let c1 = shifted.scale_complex(Complex64::new(0.0, p[0]));
    let c2 = shifted.scale_complex(Complex64::new(0.0, p[1]));
    SpectralField::from_components(Rank::Vector, &[c1, c2])
}

/// Multiply a scalar by `psi_k`.
pub fn times_wave_psi(s: &SpectralField, k: Direction, lambda: u64) -> Result<SpectralField> {
    Ok(s.shift(k.scaled(lambda)?)?.scale(1.0 / lambda as f64))
}

/// Intermittent flow `w_k` at time `t`.
pub fn intermittent_flow(grid: Grid2, k: Direction, wp: &WaveParams, t: f64) -> Result<Flow> {
    grid.check_band(wp.flow_band(), "intermittent flow")?;
    let e = eta(grid, k, wp, t)?;
    Ok(Flow { value: times_wave_b(&e.value, k, wp.lambda)?, dt: times_wave_b(&e.dt, k, wp.lambda)? })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::{project, FreqBand};

    fn toy() -> WaveParams {
        WaveParams::new(50, 10, 2, 5).unwrap()
    }

    #[test]
    fn direction_set() {
        let d = directions();
        assert_eq!(d.len(), 8);
        assert!(d.contains(&Direction::from_five([3, 4]).unwrap()));
        assert!(d.iter().filter(|k| !k.is_positive()).any(|k| k.five_k() == [-3, -4]));
        for k in &d {
            let f = k.five_k();
            assert_eq!(f[0] * f[0] + f[1] * f[1], 25);
            assert_eq!(d[k.index()], *k);
        }
        let mut min = i64::MAX;
        for a in &d {
            for b in &d {
                if *b != a.neg() {
                    let s = [a.five_k()[0] + b.five_k()[0], a.five_k()[1] + b.five_k()[1]];
                    min = min.min(s[0] * s[0] + s[1] * s[1]);
                }
            }
        }
        // |k + k'|^2 = min / 25 = 2 / 25
        assert_eq!(min, 2);
    }

    #[test]
    fn wave_params_divisibility() {
        assert_eq!(toy().lambda_sigma(), 5);
        assert!(matches!(WaveParams::new(10, 4, 1, 1), Err(CiError::Divisibility(_))));
        let w = WaveParams::new(25, 5, 4, 3).unwrap();
        assert!(w.warnings().iter().any(|s| s.contains("ordering")));
        assert_eq!(toy().eta_band(), 14);
        assert_eq!(toy().flow_band(), 54);
    }

    #[test]
    fn stationary_flow_identities() {
        let g = Grid2::new(32).unwrap();
        let k = Direction::from_five([3, 4]).unwrap();
        let b = wave_b(g, k, 5).unwrap();
        let psi = wave_psi(g, k, 5).unwrap();
        assert_eq!(b.coeff(0, [3, 4]), Complex64::new(0.0, -0.8));
        assert_eq!(b.coeff(1, [3, 4]), Complex64::new(0.0, 0.6));
        assert!(psi.perp_grad().unwrap().sub(&b).unwrap().max_coeff() < 1e-15);
        assert!(b.divergence().unwrap().max_coeff() < 1e-14);
        assert!((b.sup_norm() - 1.0).abs() < 1e-14);
        assert!((psi.sup_norm() - 0.2).abs() < 1e-14);
        let bn = wave_b(g, k.neg(), 5).unwrap();
        assert_eq!(bn.coeff(0, [-3, -4]), b.coeff(0, [3, 4]).conj());
        assert!(matches!(wave_b(g, k, 3), Err(CiError::NonIntegerFrequency(_))));
    }

    #[test]
    fn dirichlet_kernel_values() {
        let g = Grid2::new(32).unwrap();
        let d = dirichlet_kernel(g, 1).unwrap();
        assert!((d.synthesize_real()[0][0] - 3.0).abs() < 1e-13);
        assert!(matches!(dirichlet_kernel(Grid2::new(8).unwrap(), 4), Err(CiError::AliasingRisk(_))));
    }

    #[test]
    fn eta_transport_and_mean() {
        let g = Grid2::new(64).unwrap();
        let wp = toy();
        for k in directions() {
            let e = eta(g, k, &wp, 0.37).unwrap();
            let ts = e.value.l2_from_coeffs().powi(2) / (4.0 * std::f64::consts::PI.powi(2));
            assert!((ts - 1.0).abs() < 1e-12);
            let kp = k.positive_rep().k();
            let adv = e.value.derive(1, 0).scale(kp[0]).add(&e.value.derive(0, 1).scale(kp[1])).unwrap();
            let err = e.dt.scale(1.0 / wp.mu as f64).sub(&adv).unwrap().max_coeff();
            assert!(err < 1e-12);
            let nz = project(&e.value, FreqBand::NonZero);
            let hi = project(&e.value, FreqBand::AtLeast(wp.lambda_sigma() as f64 / 2.0));
            assert_eq!(nz.sub(&hi).unwrap().max_coeff(), 0.0);
        }
    }

    #[test]
    fn flow_support_in_shell() {
        let g = Grid2::new(128).unwrap();
        let wp = toy();
        let k = Direction::from_five([4, -3]).unwrap();
        let w = intermittent_flow(g, k, &wp, 0.1).unwrap().value;
        let lam = wp.lambda as f64;
        let outside = w.energy_where(|xi| !FreqBand::Closed { lo: lam / 2.0, hi: 2.0 * lam }.contains(xi));
        assert_eq!(outside, 0.0);
    }
}
