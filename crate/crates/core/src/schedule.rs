//! Exact parameter schedule over a common base `A`, and desk-scale toy parameters.
//!
//! Every frequency and amplitude of the iteration is a power of `A` with a
//! rational exponent, so each inequality reduces to a comparison of exact
//! rational exponents and `A^{B^q}` is never materialized.

use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Pow, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::blocks::WaveParams;
use crate::error::{CiError, Result};

/// `theta_* = 2 theta - 1` for `theta > 1/2`, else `0`.
pub fn theta_star(theta: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&theta) {
        return Err(CiError::Config(format!("theta must lie in [0, 1), got {theta}")));
    }
    Ok(if theta > 0.5 { 2.0 * theta - 1.0 } else { 0.0 })
}

fn theta_star_exact(theta: f64) -> Result<BigRational> {
    theta_star(theta)?;
    let t = BigRational::from_float(theta).ok_or_else(|| CiError::Config("theta is not finite".into()))?;
    let half = BigRational::new(BigInt::from(1), BigInt::from(2));
    Ok(if t > half { t * BigInt::from(2) - BigInt::from(1) } else { BigRational::zero() })
}

/// Positive real `A^e` with exact rational exponent.
#[derive(Clone, Debug, PartialEq)]
pub struct Power {
    pub base: BigUint,
    pub exponent: BigRational,
}

impl fmt::Display for Power {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}^({})", self.base, self.exponent)
    }
}

/// The iteration's parameter schedule at stage `q`.
#[derive(Clone, Debug)]
pub struct PaperSchedule {
    pub theta: f64,
    pub alpha: BigRational,
    pub b: u64,
    pub beta: BigRational,
    pub a: BigUint,
    pub q: u32,
    /// `ell = lambda_q^{ell_exponent}`; the construction uses `-20`.
    pub ell_exponent: BigRational,
}

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

impl PaperSchedule {
    pub fn new(theta: f64, alpha: BigRational, b: u64, beta: BigRational, a: BigUint, q: u32) -> Self {
        PaperSchedule { theta, alpha, b, beta, a, q, ell_exponent: rat(-20, 1) }
    }

    fn b_pow(&self, k: u32) -> BigRational {
        BigRational::from_integer(BigInt::from(self.b).pow(k))
    }

    fn power(&self, exponent: BigRational) -> Power {
        Power { base: self.a.clone(), exponent }
    }

    /// `lambda_q = A^{B^q}`.
    pub fn lambda(&self, q: u32) -> Power {
        self.power(self.b_pow(q))
    }

    /// `eps_q = lambda_q^{-2 beta}`.
    pub fn epsilon(&self, q: u32) -> Power {
        self.power(-self.b_pow(q) * &self.beta * BigInt::from(2))
    }

    /// `ell = lambda_q^{ell_exponent}`.
    pub fn ell(&self) -> Power {
        self.power(self.b_pow(self.q) * &self.ell_exponent)
    }

    /// `r = lambda_{q+1}^{1 - 6 alpha}`.
    pub fn r(&self) -> Power {
        self.power(self.b_pow(self.q + 1) * (rat(1, 1) - &self.alpha * BigInt::from(6)))
    }

    /// `mu = lambda_{q+1}^{1 - 4 alpha}`.
    pub fn mu(&self) -> Power {
        self.power(self.b_pow(self.q + 1) * (rat(1, 1) - &self.alpha * BigInt::from(4)))
    }

    /// `sigma = lambda_{q+1}^{-(1 - 2 alpha)}`.
    pub fn sigma(&self) -> Power {
        self.power(-self.b_pow(self.q + 1) * (rat(1, 1) - &self.alpha * BigInt::from(2)))
    }

    /// Integrability exponent `p = (2 - 12 alpha) / (2 - 13 alpha)`.
    pub fn p(&self) -> BigRational {
        (rat(2, 1) - &self.alpha * BigInt::from(12)) / (rat(2, 1) - &self.alpha * BigInt::from(13))
    }
}

/// Outcome of one constraint.
#[derive(Clone, Debug, Serialize)]
pub struct ConstraintMargin {
    pub label: String,
    pub holds: bool,
    pub detail: String,
}

/// Every constraint of a schedule, evaluated exactly.
#[derive(Clone, Debug, Serialize)]
pub struct ScheduleReport {
    pub constraints: Vec<ConstraintMargin>,
}

impl ScheduleReport {
    pub fn all_hold(&self) -> bool {
        self.constraints.iter().all(|c| c.holds)
    }

    pub fn first_violation(&self) -> Option<&ConstraintMargin> {
        self.constraints.iter().find(|c| !c.holds)
    }
}

pub const LABEL_ALPHA: &str = "alpha <= (1 - theta_*)/8";
pub const LABEL_B: &str = "B > 320/alpha";
pub const LABEL_BETA: &str = "0 < beta < 1/(100 B^2)";
pub const LABEL_A: &str = "A in 5N and A^alpha in 5N";
pub const LABEL_EPS: &str = "2 beta B^2 <= 1/50";
pub const LABEL_ELL: &str = "ell lambda_q^8 <= eps_{q+1}";
pub const LABEL_P: &str = "p = (2 - 12 alpha)/(2 - 13 alpha) in (1, 2) with (1 - 6 alpha)(2 - 2/p) = alpha";

/// `A^alpha` when it is an integer.
fn integer_power(a: &BigUint, alpha: &BigRational) -> Option<BigUint> {
    if !alpha.is_positive() {
        return None;
    }
    let num = alpha.numer().to_biguint()?;
    let den = alpha.denom().to_u32()?;
    let root = a.nth_root(den);
    if Pow::pow(&root, den) != *a {
        return None;
    }
    let n = num.to_u32()?;
    Some(Pow::pow(&root, n))
}

fn check(label: &str, holds: bool, detail: String) -> ConstraintMargin {
    ConstraintMargin { label: label.to_string(), holds, detail }
}

/// Evaluate all constraints without failing.
pub fn evaluate_schedule(s: &PaperSchedule) -> Result<ScheduleReport> {
    let ts = theta_star_exact(s.theta)?;
    let mut out = Vec::new();

    let bound = (rat(1, 1) - &ts) / BigInt::from(8);
    out.push(check(LABEL_ALPHA, s.alpha.is_positive() && s.alpha <= bound, format!("alpha = {}, bound = {}", s.alpha, bound)));

    let b = BigRational::from_integer(BigInt::from(s.b));
    let b_ok = s.alpha.is_positive() && b > rat(320, 1) / &s.alpha;
    out.push(check(LABEL_B, b_ok, format!("B = {}, 320/alpha = {}", s.b, if s.alpha.is_zero() { "inf".into() } else { (rat(320, 1) / &s.alpha).to_string() })));

    let b2 = &b * &b;
    let beta_bound = rat(1, 1) / (&b2 * BigInt::from(100));
    out.push(check(LABEL_BETA, s.beta.is_positive() && s.beta < beta_bound, format!("beta = {}, bound = {}", s.beta, beta_bound)));

    let five = BigUint::from(5u32);
    let a_ok = !s.a.is_zero() && s.a.is_multiple_of(&five);
    let pow = integer_power(&s.a, &s.alpha);
    let pow_ok = pow.as_ref().is_some_and(|p| !p.is_zero() && p.is_multiple_of(&five));
    out.push(check(
        LABEL_A,
        a_ok && pow_ok,
        format!("A = {}, A^alpha = {}", s.a, pow.map_or("not an integer".to_string(), |p| p.to_string())),
    ));

    let growth = &s.beta * &b2 * BigInt::from(2);
    out.push(check(LABEL_EPS, growth <= rat(1, 50), format!("2 beta B^2 = {growth}")));

    // log_A(ell lambda_q^8) = (ell_exponent + 8) B^q,  log_A(eps_{q+1}) = -2 beta B^{q+1}
    let lhs = s.ell().exponent + s.b_pow(s.q) * BigInt::from(8);
    let rhs = s.epsilon(s.q + 1).exponent;
    out.push(check(LABEL_ELL, s.a > BigUint::one() && lhs <= rhs, format!("exponents {lhs} <= {rhs}")));

    let denom = rat(2, 1) - &s.alpha * BigInt::from(13);
    let p_ok = if denom.is_zero() {
        false
    } else {
        let p = s.p();
        let ident = (rat(1, 1) - &s.alpha * BigInt::from(6)) * (rat(2, 1) - rat(2, 1) / &p);
        p > rat(1, 1) && p < rat(2, 1) && ident == s.alpha
    };
    out.push(check(LABEL_P, p_ok, if denom.is_zero() { "p undefined".into() } else { format!("p = {}", s.p()) }));

    Ok(ScheduleReport { constraints: out })
}

/// Evaluate all constraints; fail with the first violated label.
pub fn validate_schedule(s: &PaperSchedule) -> Result<ScheduleReport> {
    let report = evaluate_schedule(s)?;
    if let Some(v) = report.first_violation() {
        return Err(CiError::ConstraintViolation { label: v.label.clone(), detail: v.detail.clone() });
    }
    Ok(report)
}

/// The reference schedule `theta = 0, alpha = 1/8, B = 2561, beta = 10^{-9}, A = 5^8`.
pub fn witness_schedule() -> PaperSchedule {
    PaperSchedule::new(0.0, rat(1, 8), 2561, rat(1, 1_000_000_000), BigUint::from(5u32).pow(8u32), 0)
}

/// Single-constraint mutations of [`witness_schedule`], each paired with the
/// label it must be rejected with.
pub fn witness_mutations() -> Vec<(String, PaperSchedule, &'static str)> {
    let w = witness_schedule();
    let mut b = w.clone();
    b.b = 100;
    b.beta = rat(1, 10_000_000);
    let mut beta = w.clone();
    beta.beta = rat(1, 100 * 2561 * 2561);
    let mut a = w.clone();
    a.a = BigUint::from(5u32).pow(8u32) + 5u32;
    let mut alpha = w.clone();
    alpha.theta = 0.9;
    let mut ell = w;
    ell.ell_exponent = rat(-7, 1);
    vec![
        ("B = 100".to_string(), b, LABEL_B),
        ("beta = 1/(100 B^2)".to_string(), beta, LABEL_BETA),
        ("A = 5^8 + 5".to_string(), a, LABEL_A),
        ("theta = 0.9 with alpha = 1/8".to_string(), alpha, LABEL_ALPHA),
        ("ell = lambda_q^{-7}".to_string(), ell, LABEL_ELL),
    ]
}

/// Desk-scale parameters.
#[derive(Clone, Debug, Serialize)]
pub struct ToyParams {
    pub wp: WaveParams,
    pub ell: f64,
    pub theta: f64,
    pub nu: f64,
    pub warnings: Vec<String>,
}

/// Validate toy parameters: divisibility is an error, weak ordering a warning.
pub fn toy_params(lambda: u64, sigma_inv: u64, r: u64, mu: u64, ell: f64, theta: f64, nu: f64) -> Result<ToyParams> {
    let wp = WaveParams::new(lambda, sigma_inv, r, mu)?;
    if !(ell > 0.0 && ell < 1.0) {
        return Err(CiError::Config(format!("ell must lie in (0, 1), got {ell}")));
    }
    if !(0.0..=1.0).contains(&theta) {
        return Err(CiError::Config(format!("theta must lie in [0, 1], got {theta}")));
    }
    if !(nu > 0.0) {
        return Err(CiError::Config(format!("nu must be positive, got {nu}")));
    }
    let warnings = wp.warnings();
    Ok(ToyParams { wp, ell, theta, nu, warnings })
}
