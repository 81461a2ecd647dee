//! Invariants of the operator calculus, the geometric decomposition and the
//! field dumps, over randomly drawn inputs.

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use ci2d_core::blocks::{directions, Direction};
use ci2d_core::calculus::{anti_div, frac_laplacian, helmholtz, inv_grad, project, tracefree_square, FreqBand};
use ci2d_core::cli::config::parse_rational;
use ci2d_core::geometry::{decompose, gamma, gamma_sq, StressMatrix};
use ci2d_core::io::{read_field, write_field};
use ci2d_core::lemmas::anti_divergence_ratio;
use ci2d_core::track::{fd_derivative, time_mollifier, TimeAxis};
use ci2d_core::{Complex64, Grid2, Rank, SpectralField};

fn field(seed: u64, rank: Rank, band: usize) -> SpectralField {
    SpectralField::random(Grid2::new(64).unwrap(), rank, band, true, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        a
    } else {
        a / b
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn geometric_decomposition_is_exact_and_positive(r11 in -100.0f64..100.0, r12 in -100.0f64..100.0) {
        let r = StressMatrix::new(r11, r12);
        let w = decompose(r);
        prop_assert_eq!(w.len(), 8);
        let (mut s11, mut s12) = (0.0, 0.0);
        for (k, g2) in &w {
            prop_assert!(*g2 > 0.0);
            let [a, b] = k.five_k();
            let (k1, k2) = (a as f64 / 5.0, b as f64 / 5.0);
            s11 += g2 * 0.5 * (k1 * k1 - k2 * k2);
            s12 += g2 * k1 * k2;
        }
        prop_assert!((s11 - r11).abs() < 1e-10 && (s12 - r12).abs() < 1e-10);
    }

    #[test]
    fn weights_agree_on_antipodes(r11 in -100.0f64..100.0, r12 in -100.0f64..100.0) {
        let r = StressMatrix::new(r11, r12);
        for k in directions() {
            prop_assert_eq!(gamma(k, r), gamma(k.neg(), r));
            prop_assert!((gamma(k, r).powi(2) - gamma_sq(k, r)).abs() <= 1e-12 * gamma_sq(k, r));
        }
    }

    #[test]
    fn projectors_are_idempotent_and_orthogonal(seed in any::<u64>(), cut in 1.0f64..12.0) {
        let f = field(seed, Rank::Scalar, 12);
        let lo = project(&f, FreqBand::closed(0.0, cut).unwrap());
        let hi = project(&f, FreqBand::AtLeast(cut + 1e-9));
        let again = project(&lo, FreqBand::closed(0.0, cut).unwrap());
        prop_assert_eq!(again.coeffs(0), lo.coeffs(0));
        prop_assert_eq!(project(&lo, FreqBand::AtLeast(cut + 1e-9)).max_coeff(), 0.0);
        prop_assert!(lo.add(&hi).unwrap().sub(&f).unwrap().max_coeff() == 0.0);
    }

    #[test]
    fn helmholtz_output_is_solenoidal(seed in any::<u64>(), band in 1usize..20) {
        let f = field(seed, Rank::Vector, band);
        let p = helmholtz(&f).unwrap();
        prop_assert!(p.divergence().unwrap().l2_from_coeffs() <= 1e-12 * f.l2_from_coeffs());
        prop_assert!(helmholtz(&p).unwrap().sub(&p).unwrap().max_coeff() <= 1e-12 * f.max_coeff());
    }

    #[test]
    fn anti_divergence_inverts_divergence(seed in any::<u64>(), band in 1usize..30) {
        let f = field(seed, Rank::Vector, band);
        let r = anti_div(&f).unwrap();
        let want = project(&f, FreqBand::NonZero);
        prop_assert!(rel(r.divergence().unwrap().sub(&want).unwrap().l2_from_coeffs(), want.l2_from_coeffs()) <= 1e-10);
        prop_assert!(r.mean().iter().all(|c| c.norm() == 0.0));
        prop_assert!(r.realness_defect() <= 1e-14 * r.max_coeff().max(1e-300));
    }

    #[test]
    fn anti_divergence_is_order_minus_one(seed in any::<u64>(), band in 1usize..30) {
        // ||R f|| <= C || |grad|^{-1} f || with the same constant for every field
        let ratio = anti_divergence_ratio(&field(seed, Rank::Vector, band)).unwrap();
        prop_assert!(ratio <= 2.0, "ratio {}", ratio);
    }

    #[test]
    fn fractional_laplacian_composes(seed in any::<u64>(), a in 0.0f64..0.5, b in 0.0f64..0.5) {
        let f = project(&field(seed, Rank::Scalar, 10), FreqBand::NonZero);
        let two = frac_laplacian(&frac_laplacian(&f, a).unwrap(), b).unwrap();
        let one = frac_laplacian(&f, a + b).unwrap();
        prop_assert!(two.sub(&one).unwrap().max_coeff() <= 1e-10 * one.max_coeff());
        let back = frac_laplacian(&inv_grad(&inv_grad(&f)), 1.0).unwrap();
        prop_assert!(back.sub(&f).unwrap().max_coeff() <= 1e-12 * f.max_coeff());
    }

    #[test]
    fn tracefree_square_is_symmetric_tracefree_display(seed in any::<u64>()) {
        let f = field(seed, Rank::Vector, 6);
        let sq = tracefree_square(&f).unwrap().synthesize_real();
        let v = f.synthesize_real();
        for j in (0..v[0].len()).step_by(37) {
            let (a, b) = (v[0][j], v[1][j]);
            prop_assert!((sq[0][j] - 0.5 * (a * a - b * b)).abs() < 1e-10);
            prop_assert!((sq[1][j] - a * b).abs() < 1e-10);
        }
    }

    #[test]
    fn field_dumps_round_trip(seed in any::<u64>(), band in 0usize..20, t in -5.0f64..5.0) {
        for rank in [Rank::Scalar, Rank::Vector, Rank::SymTensor] {
            let f = field(seed, rank, band);
            let mut buf = Vec::new();
            write_field(&mut buf, &f, t, "u").unwrap();
            let (back, header) = read_field(&mut buf.as_slice()).unwrap();
            prop_assert_eq!(header.time, t);
            prop_assert_eq!(back.rank(), rank);
            // dumps hold nodal values, so the coefficients come back to rounding
            prop_assert!(back.sub(&f).unwrap().max_coeff() <= 1e-13 * f.max_coeff().max(1.0));
        }
    }

    #[test]
    fn rationals_round_trip(n in -100_000i64..100_000, d in 1i64..100_000) {
        let q = parse_rational(&format!("{n}/{d}")).unwrap();
        prop_assert_eq!(q * num_rational::BigRational::from_integer(d.into()), num_rational::BigRational::from_integer(n.into()));
    }

    #[test]
    fn time_mollifier_has_unit_mass(ell in 0.01f64..0.3, steps in 8usize..64) {
        let dt = 1.0 / steps as f64;
        let w = time_mollifier(ell, dt);
        let mass: f64 = w.iter().map(|(_, x)| x).sum();
        prop_assert!((mass - 1.0).abs() < 1e-12);
        prop_assert!(w.iter().all(|(_, x)| *x >= 0.0));
    }
}

#[test]
fn fd_derivative_is_exact_on_sextics() {
    let axis = TimeAxis::new(1.0, 17, 0.25).unwrap();
    let g = Grid2::new(8).unwrap();
    let coef = [0.3, -1.0, 2.0, 0.5, -0.25, 1.5, -0.7];
    let poly = |t: f64| coef.iter().rev().fold(0.0, |acc, c| acc * t + c);
    let dpoly = |t: f64| coef.iter().enumerate().skip(1).rev().fold(0.0, |acc, (j, c)| acc * t + j as f64 * c);
    let slices: Vec<_> = axis.times().into_iter().map(|t| SpectralField::mode(g, Rank::Scalar, [1, 0], &[Complex64::new(poly(t), 0.0)]).unwrap()).collect();
    let d = fd_derivative(&slices, axis.dt).unwrap();
    for (i, t) in axis.times().into_iter().enumerate() {
        assert!((d[i].coeff(0, [1, 0]).re - dpoly(t)).abs() < 1e-9 * (1.0 + dpoly(t).abs()), "t = {t}");
    }
}

#[test]
fn perpendicular_products_flip_sign() {
    for k in directions() {
        let p = Direction::from_five(k.five_perp()).unwrap();
        let (a, b) = (k.tracefree_self(), p.tracefree_self());
        assert!((a[0][0] + b[0][0]).abs() < 1e-15 && (a[0][1] + b[0][1]).abs() < 1e-15);
    }
}
