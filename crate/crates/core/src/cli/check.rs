//! Invariant suites run by `ci2d check`.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::blocks::{dirichlet_kernel, directions, eta, intermittent_flow, positive_directions, WaveParams};
use crate::calculus::{anti_divergence, frac_laplacian, helmholtz, project, tracefree_product, FreqBand};
use crate::cli::config::{Mode, RunConfig};
use crate::cli::generators::generate;
use crate::error::Result;
use crate::field::{Grid2, Rank, SpectralField};
use crate::geometry::{decompose, gamma, recompose, RampProfile, StressMatrix};
use crate::io::{read_field, write_field};
use crate::schedule::{validate_schedule, witness_mutations, witness_schedule};
use crate::step::coefficients::{choose_coeff_grid, coefficients_slice};
use crate::step::cutoff::CutoffProfile;
use crate::step::diagnostics::oscillation_identity;
use crate::step::perturb::perturbations_slice;
use crate::step::residual::nsr_residual;
use crate::step::state::{init_state, velocity_defects, NSRState};
use crate::track::{fd_derivative, time_mollifier, TimeAxis, TimeTrack};

/// Outcome of one property.
#[derive(Clone, Debug, Serialize)]
pub struct PropertyResult {
    pub name: String,
    pub passed: bool,
    /// Measured quantity compared against `tolerance`.
    pub value: f64,
    pub tolerance: f64,
    pub detail: String,
}

/// Machine-readable report of `ci2d check`.
#[derive(Clone, Debug, Serialize)]
pub struct CheckReport {
    pub mode: Mode,
    pub passed: usize,
    pub failed: usize,
    pub properties: Vec<PropertyResult>,
}

impl CheckReport {
    pub fn all_passed(&self) -> bool {
        self.failed == 0
    }
}

struct Suite {
    out: Vec<PropertyResult>,
}

impl Suite {
    /// Record `value <= tolerance` (NaN fails).
    fn at_most(&mut self, name: &str, value: f64, tolerance: f64, detail: impl Into<String>) {
        self.out.push(PropertyResult {
            name: name.to_string(),
            passed: value <= tolerance,
            value,
            tolerance,
            detail: detail.into(),
        });
    }

    fn holds(&mut self, name: &str, ok: bool, detail: impl Into<String>) {
        self.out.push(PropertyResult {
            name: name.to_string(),
            passed: ok,
            value: if ok { 0.0 } else { 1.0 },
            tolerance: 0.0,
            detail: detail.into(),
        });
    }

    /// Run a fallible property; errors count as failures.
    fn run<F: FnOnce(&mut Suite) -> Result<()>>(&mut self, name: &str, f: F) {
        if let Err(e) = f(self) {
            self.holds(name, false, format!("error: {e}"));
        }
    }
}

fn rel(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        a
    } else {
        a / b
    }
}

fn mean_zero_vector(grid: Grid2, band: usize, rng: &mut ChaCha8Rng) -> Result<SpectralField> {
    Ok(project(&SpectralField::random(grid, Rank::Vector, band, true, rng)?, FreqBand::NonZero))
}

fn geometry_suite(s: &mut Suite, rng: &mut ChaCha8Rng) {
    let mut err = 0.0f64;
    let mut min_w = f64::INFINITY;
    let mut anti = 0.0f64;
    for _ in 0..2000 {
        let r = StressMatrix::new(rng.gen_range(-100.0..100.0), rng.gen_range(-100.0..100.0));
        let w = decompose(r);
        let back = recompose(&w);
        err = err.max((back.r11 - r.r11).abs()).max((back.r12 - r.r12).abs());
        for (k, g2) in &w {
            min_w = min_w.min(*g2);
            anti = anti.max((gamma(*k, r) - gamma(k.neg(), r)).abs());
        }
    }
    s.at_most("geometric_lemma_decomposition", err, 1e-10, "max |sum_k gamma_k^2 k (x) k - R| over 2000 stresses in [-100, 100]");
    s.holds("geometric_lemma_positive_weights", min_w > 0.0, format!("min gamma_k^2 = {min_w:e}"));
    s.at_most("geometric_lemma_antipodal", anti, 0.0, "gamma_k = gamma_{-k}");
    let prof = RampProfile::shared();
    let h = 1e-5;
    let mut d = 0.0f64;
    for i in 0..50 {
        let x = -3.0 + 6.0 * i as f64 / 49.0;
        let fd = (prof.value(x + h) - prof.value(x - h)) / (2.0 * h);
        d = d.max((fd - prof.derivative(x)).abs());
    }
    s.at_most("ramp_profile_derivative", d, 1e-6, "Gamma_*' against central differences on [-3, 3]");
}

fn kernel_suite(s: &mut Suite) {
    s.run("dirichlet_l2_norm", |s| {
        let g = Grid2::new(64)?;
        let mut err = 0.0f64;
        for r in [2, 5, 10, 25] {
            err = err.max((dirichlet_kernel(g, r)?.l2_from_coeffs() - 2.0 * PI).abs());
        }
        s.at_most("dirichlet_l2_norm", err, 1e-8, "| ||D_r||_{L^2} - 2 pi | for r in {2, 5, 10, 25}");
        Ok(())
    });
    s.run("dirichlet_l4_scaling", |s| {
        let g = Grid2::new(128)?;
        let mut ratios = Vec::new();
        for r in [2usize, 4, 8, 16] {
            ratios.push(dirichlet_kernel(g, r)?.lp_norm(4.0)? / (r as f64).sqrt());
        }
        let worst = ratios.windows(2).map(|w| (w[1] / w[0]).max(w[0] / w[1])).fold(1.0, f64::max);
        s.at_most("dirichlet_l4_scaling", worst, 2.0, format!("||D_r||_{{L^4}} / r^(1/2) = {ratios:?}"));
        Ok(())
    });
}

/// Whether products `w_k (x) w_k'` with `k + k' != 0` stay in `[lambda/5, 4 lambda]`:
/// `eta_k` lives in `|xi| <= sqrt(2) lambda sigma r` and `min |k + k'| = sqrt(2)/5`.
pub fn product_localization_separated(wp: &WaveParams) -> bool {
    let lam = wp.lambda as f64;
    let spread = 2.0 * std::f64::consts::SQRT_2 * (wp.lambda_sigma() * wp.r) as f64;
    lam * std::f64::consts::SQRT_2 / 5.0 - spread >= lam / 5.0 && 2.0 * lam + spread <= 4.0 * lam
}

/// Smallest reference parameters with the separation above (`lambda sigma = 5`, `r = 1`).
pub fn reference_separated_params() -> Result<WaveParams> {
    WaveParams::new(200, 40, 1, 5)
}

fn wave_suite(s: &mut Suite, g: Grid2, wp: &WaveParams) {
    let t = 0.3;
    s.run("eta_unit_mean_square", |s| {
        let mut err = 0.0f64;
        for k in directions() {
            let e = eta(g, k, wp, t)?.value;
            err = err.max((e.mul(&e)?.mean()[0].re - 1.0).abs());
        }
        s.at_most("eta_unit_mean_square", err, 1e-10, "| mean(eta_k^2) - 1 | over all eight directions");
        Ok(())
    });
    s.run("eta_transport", |s| {
        let mut err = 0.0f64;
        for k in directions() {
            let e = eta(g, k, wp, t)?;
            let kv = k.positive_rep().k();
            let adv = e.value.derive(1, 0).scale(kv[0]).add(&e.value.derive(0, 1).scale(kv[1]))?;
            err = err.max(rel(e.dt.sub(&adv.scale(wp.mu as f64))?.max_coeff(), e.dt.max_coeff()));
        }
        s.at_most("eta_transport", err, 1e-12, "d_t eta_k = mu (k . grad) eta_k, coefficientwise");
        Ok(())
    });
    s.run("eta_high_pass", |s| {
        let mut err = 0.0f64;
        for k in positive_directions() {
            let e = eta(g, k, wp, t)?.value;
            let lo = project(&e, FreqBand::NonZero);
            let hi = project(&e, FreqBand::AtLeast(wp.lambda_sigma() as f64 / 2.0));
            err = err.max(lo.sub(&hi)?.max_coeff());
        }
        s.at_most("eta_high_pass", err, 0.0, "P_{!=0} eta_k = P_{>= lambda sigma / 2} eta_k");
        Ok(())
    });
    s.run("flow_frequency_localization", |s| {
        let lam = wp.lambda as f64;
        let band = FreqBand::closed(lam / 2.0, 2.0 * lam)?;
        let mut worst = 0.0f64;
        for k in directions() {
            let w = intermittent_flow(g, k, wp, t)?.value;
            let total = w.energy_where(|_| true);
            worst = worst.max(rel(w.energy_where(|xi| !band.contains(xi)), total));
        }
        s.at_most("flow_frequency_localization", worst, 1e-12, "energy of w_k outside [lambda/2, 2 lambda]");
        Ok(())
    });
    s.run("flow_product_localization", |s| {
        // the inclusion needs the eta spectra to be narrow against lambda
        let (g, wp, note) = if product_localization_separated(wp) {
            (g, *wp, "at the configured wave parameters".to_string())
        } else {
            let r = reference_separated_params()?;
            (Grid2::new(1024)?, r, format!("configured lambda sigma r is not small against lambda; at lambda = {}, 1/sigma = {}, r = {}", r.lambda, r.sigma_inv, r.r))
        };
        let lam = wp.lambda as f64;
        let band = FreqBand::closed(lam / 5.0, 4.0 * lam)?;
        let flows: Vec<_> = directions().into_iter().map(|k| intermittent_flow(g, k, &wp, t).map(|f| (k, f.value))).collect::<Result<_>>()?;
        let mut worst = 0.0f64;
        for (k, wk) in flows.iter().filter(|(k, _)| k.is_positive()) {
            for (k2, wk2) in &flows {
                if *k2 == k.neg() {
                    continue;
                }
                let p = tracefree_product(wk, wk2)?;
                worst = worst.max(rel(p.energy_where(|xi| !band.contains(xi)), p.energy_where(|_| true)));
            }
        }
        s.at_most("flow_product_localization", worst, 1e-12, format!("energy of w_k (x) w_k' (k + k' != 0) outside [lambda/5, 4 lambda], {note}"));
        Ok(())
    });
    s.run("self_interaction_mean", |s| {
        let mut err = 0.0f64;
        for k in directions() {
            let m = crate::step::diagnostics::self_interaction_mean(g, k, wp, t)?;
            let kk = k.tracefree_self();
            err = err.max((m[0] + kk[0][0]).abs()).max((m[1] + kk[0][1]).abs());
        }
        s.at_most("self_interaction_mean", err, 1e-12, "mean(w_k (x) w_{-k}) = -k (x) k");
        Ok(())
    });
}

fn calculus_suite(s: &mut Suite, rng: &mut ChaCha8Rng) {
    s.run("anti_divergence_inverts_divergence", |s| {
        let g = Grid2::new(64)?;
        let (mut err, mut mean) = (0.0f64, 0.0f64);
        for _ in 0..20 {
            let f = mean_zero_vector(g, 12, rng)?;
            let r = anti_divergence(&f)?.tensor;
            err = err.max(rel(r.divergence()?.sub(&f)?.l2_from_coeffs(), f.l2_from_coeffs()));
            mean = mean.max(r.mean().iter().map(|c| c.norm()).fold(0.0, f64::max));
        }
        s.at_most("anti_divergence_inverts_divergence", err, 1e-10, "div(R f) = f on 20 random mean-zero fields");
        s.at_most("anti_divergence_mean_zero", mean, 1e-12, "mean(R f) = 0");
        Ok(())
    });
    s.run("helmholtz_projection", |s| {
        let g = Grid2::new(64)?;
        let f = SpectralField::random(g, Rank::Vector, 10, true, rng)?;
        let p = helmholtz(&f)?;
        let div = rel(p.divergence()?.l2_from_coeffs(), f.l2_from_coeffs());
        let idem = rel(helmholtz(&p)?.sub(&p)?.l2_from_coeffs(), p.l2_from_coeffs());
        s.at_most("helmholtz_projection", div.max(idem), 1e-12, "div P_H f = 0 and P_H P_H = P_H");
        Ok(())
    });
    s.run("fractional_laplacian_mode", |s| {
        let g = Grid2::new(32)?;
        let one = rustfft::num_complex::Complex64::new(1.0, 0.0);
        let f = SpectralField::mode(g, Rank::Scalar, [3, 4], &[one])?;
        let theta = 0.4;
        let got = frac_laplacian(&f, theta)?.coeff(0, [3, 4]).re;
        s.at_most("fractional_laplacian_mode", (got - 25f64.powf(theta)).abs(), 1e-12, "(-Delta)^theta exp(i xi.x) = |xi|^(2 theta) exp(i xi.x)");
        Ok(())
    });
    s.run("tracefree_product_display", |s| {
        let g = Grid2::new(32)?;
        let f = SpectralField::random(g, Rank::Vector, 4, true, rng)?;
        let h = SpectralField::random(g, Rank::Vector, 4, true, rng)?;
        let p = tracefree_product(&f, &h)?.synthesize_real();
        let fv = f.synthesize_real();
        let hv = h.synthesize_real();
        let mut err = 0.0f64;
        for i in 0..g.num_nodes() {
            let (f1, f2, h1, h2) = (fv[0][i], fv[1][i], hv[0][i], hv[1][i]);
            let d = 0.5 * (f1 * h1 + f2 * h2);
            let want = [f1 * h1 - d, f1 * h2, f2 * h1, f2 * h2 - d];
            for c in 0..4 {
                err = err.max((p[c][i] - want[c]).abs());
            }
        }
        s.at_most("tracefree_product_display", err, 1e-12, "f (x) g = f g^T - (f . g) Id / 2 at the nodes");
        Ok(())
    });
    s.run("synthesis_round_trip", |s| {
        let g = Grid2::new(32)?;
        let f = SpectralField::random(g, Rank::SymTensor, 15, false, rng)?;
        let back = SpectralField::analyze(g, Rank::SymTensor, f.synthesize())?;
        s.at_most("synthesis_round_trip", back.sub(&f)?.max_coeff(), 1e-13, "analyze(synthesize(f)) = f");
        Ok(())
    });
    s.run("product_alias_free", |s| {
        let g = Grid2::new(64)?;
        let a = SpectralField::random(g, Rank::Scalar, 15, true, rng)?;
        let b = SpectralField::random(g, Rank::Scalar, 15, true, rng)?;
        let p = a.mul(&b)?.synthesize_real();
        let (av, bv) = (a.synthesize_real(), b.synthesize_real());
        let err = (0..g.num_nodes()).map(|i| (p[0][i] - av[0][i] * bv[0][i]).abs()).fold(0.0, f64::max);
        s.at_most("product_alias_free", err, 1e-11, "spectral product equals the nodal product");
        Ok(())
    });
}

fn time_suite(s: &mut Suite, axis: TimeAxis, ell: f64) {
    let w = time_mollifier(ell, axis.dt);
    let mass: f64 = w.iter().map(|(_, v)| v).sum();
    s.at_most("time_mollifier_unit_mass", (mass - 1.0).abs(), 1e-14, format!("{} taps", w.len()));
    s.run("fd_derivative_sixth_order", |s| {
        let g = Grid2::new(8)?;
        let a = TimeAxis::new(1.0, 33, 0.0)?;
        let slices: Vec<SpectralField> = a.times().iter().map(|t| SpectralField::constant(g, t.sin())).collect();
        let d = fd_derivative(&slices, a.dt)?;
        let err = a.times().iter().zip(&d).map(|(t, f)| (f.mean()[0].re - t.cos()).abs()).fold(0.0, f64::max);
        s.at_most("fd_derivative_sixth_order", err, 1e-7, "sixth-order differences of sin(t), dt = 1/32");
        Ok(())
    });
    s.run("cutoff_profile", |s| {
        let a = TimeAxis::new(1.0, 101, 0.1)?;
        let support: Vec<bool> = a.times().iter().map(|t| (0.3..=0.5).contains(t)).collect();
        let p = CutoffProfile::from_support(&a, support, 0.05);
        let mut ok = true;
        for (t, v) in a.times().iter().zip(&p.values) {
            ok &= (0.0..=1.0).contains(v);
            ok &= !(0.3..=0.5).contains(t) || *v == 1.0;
            ok &= *v == 0.0 || (*t >= 0.25 - 1e-12 && *t <= 0.55 + 1e-12);
        }
        s.holds("cutoff_profile", ok, "0 <= Phi <= 1, Phi = 1 on [0.3, 0.5], supp Phi in [0.25, 0.55]");
        Ok(())
    });
}

fn schedule_suite(s: &mut Suite) {
    s.holds("schedule_witness_accepted", validate_schedule(&witness_schedule()).is_ok(), "theta = 0, alpha = 1/8, B = 2561, beta = 1e-9, A = 5^8");
    let mut bad = Vec::new();
    for (name, sched, label) in witness_mutations() {
        match validate_schedule(&sched) {
            Err(crate::error::CiError::ConstraintViolation { label: got, .. }) if got == label => {}
            other => bad.push(format!("{name}: {other:?}")),
        }
    }
    s.holds("schedule_mutations_rejected", bad.is_empty(), if bad.is_empty() { "all five mutations rejected with their labels".to_string() } else { bad.join("; ") });
}

fn state_suite(s: &mut Suite, cfg: &RunConfig, rng: &mut ChaCha8Rng) {
    s.run("initial_state_residual", |s| {
        let axis = cfg.axis()?;
        let grid = cfg.grid()?;
        let u = generate(axis, grid, &cfg.initial)?;
        let div = u.slices().iter().map(|v| velocity_defects(v).map(|d| d.0)).collect::<Result<Vec<_>>>()?;
        s.at_most("initial_velocity_solenoidal", div.into_iter().fold(0.0, f64::max), 1e-10, "relative ||div v_0||");
        let st = init_state(u, cfg.theta, cfg.nu)?;
        let r = nsr_residual(&st)?;
        s.at_most("initial_state_residual", r.max_interior, cfg.tolerances.init_residual, "NSR residual of (v_0, p_0, R_0)");
        Ok(())
    });
    s.run("residual_negative_control", |s| {
        let g = Grid2::new(32)?;
        let a = TimeAxis::new(1.0, 9, 0.0)?;
        let v: Vec<_> = (0..a.len()).map(|_| helmholtz(&mean_zero_vector(g, 4, rng)?)).collect::<Result<_>>()?;
        let p: Vec<_> = (0..a.len()).map(|_| SpectralField::random(g, Rank::Scalar, 4, true, rng)).collect::<Result<_>>()?;
        let r: Vec<_> = (0..a.len()).map(|_| SpectralField::random(g, Rank::SymTensor, 4, true, rng)).collect::<Result<_>>()?;
        let st = NSRState::new(TimeTrack::new(a, v, None)?, TimeTrack::new(a, p, None)?, TimeTrack::new(a, r, None)?, 0.4, 1.0, 0)?;
        let res = nsr_residual(&st)?.max_interior;
        s.holds("residual_negative_control", res >= 0.1, format!("relative residual of a random state = {res:.3}"));
        Ok(())
    });
    s.run("field_dump_round_trip", |s| {
        let g = Grid2::new(16)?;
        let f = SpectralField::random(g, Rank::SymTensor, 5, true, rng)?;
        let mut buf = Vec::new();
        write_field(&mut buf, &f, 0.5, "stress")?;
        let (back, _) = read_field(&mut buf.as_slice())?;
        s.at_most("field_dump_round_trip", back.sub(&f)?.max_coeff(), 1e-13, "CI2D v1 write/read");
        Ok(())
    });
}

/// Perturbation identities on one slice driven by a random stress with `Phi = 1`.
fn slice_suite(s: &mut Suite, g: Grid2, wp: &WaveParams, band_v: usize, tol: f64, osc_tol: f64, rng: &mut ChaCha8Rng) {
    s.run("stream_function_identity", |s| {
        let cg = choose_coeff_grid(g, wp, band_v, 2 * band_v.max(2))?;
        let r = SpectralField::random(g, Rank::SymTensor, 2, true, rng)?.scale(0.05);
        let dr = SpectralField::random(g, Rank::SymTensor, 2, true, rng)?.scale(0.05);
        let coef = coefficients_slice(&r, &dr, 1.0, 0.0, 5.0, 0.04, cg)?;
        let t = 0.37;
        let pert = perturbations_slice(&coef, wp, t)?;
        let w = pert.total()?;
        let principal = pert.w_p.add(&pert.w_c)?;
        let stream = principal.sub(&pert.stream.perp_grad()?)?.l2_from_coeffs();
        s.at_most("stream_function_identity", rel(stream, pert.w_p.l2_from_coeffs()), tol, "||w_p + w_c - grad_perp Psi|| / ||w_p||");
        let div = principal.divergence()?.l2_from_coeffs().max(pert.w_t.divergence()?.l2_from_coeffs());
        s.at_most("perturbation_solenoidal", rel(div, w.l2_from_coeffs()), tol, "div(w_p + w_c) = div w_t = 0");
        s.at_most("perturbation_real", pert.realness_defect, 1e-12, "conjugate symmetry before projection");
        let osc = oscillation_identity(&coef, &r, wp, t, cg.nodes)?;
        s.at_most("oscillation_identity", osc, osc_tol, format!("sum_k a_k^2 mean(w_k (x) w_-k) + R at {}^2 coefficient nodes", cg.nodes));
        Ok(())
    });
}

/// Run all suites for a configuration. Configuration errors are returned
/// before any suite runs.
pub fn run_checks(cfg: &RunConfig) -> Result<CheckReport> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut s = Suite { out: Vec::new() };
    let (wave_grid, wp, ell) = match cfg.mode {
        Mode::Toy => (cfg.grid()?, cfg.wave_params()?, cfg.toy()?.ell),
        Mode::Paper => (Grid2::new(256)?, WaveParams::new(50, 10, 2, 5)?, 0.05),
    };
    geometry_suite(&mut s, &mut rng);
    kernel_suite(&mut s);
    wave_suite(&mut s, wave_grid, &wp);
    calculus_suite(&mut s, &mut rng);
    time_suite(&mut s, cfg.axis()?, ell);
    schedule_suite(&mut s);
    state_suite(&mut s, cfg, &mut rng);
    let band_v = match cfg.mode {
        Mode::Toy => crate::cli::generators::generator_band(&cfg.initial),
        Mode::Paper => 1,
    };
    slice_suite(&mut s, wave_grid, &wp, band_v, cfg.tolerances.identity, cfg.tolerances.oscillation, &mut rng);
    let failed = s.out.iter().filter(|p| !p.passed).count();
    Ok(CheckReport { mode: cfg.mode, passed: s.out.len() - failed, failed, properties: s.out })
}
