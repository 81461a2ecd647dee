//! Acceptance criteria 1-11. Each criterion prints one PASS/FAIL line; the
//! test fails if any criterion fails.

use std::f64::consts::PI;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ci2d_core::blocks::{dirichlet_kernel, directions, eta, intermittent_flow, positive_directions, Direction, WaveParams};
use ci2d_core::calculus::{anti_divergence, helmholtz, project, tracefree_product, FreqBand};
use ci2d_core::cli::check::reference_separated_params;
use ci2d_core::cli::{acceptance_config, initial_state};
use ci2d_core::geometry::{gamma_sq, StressMatrix};
use ci2d_core::lemmas::{high_low_ratio, periodic_field, product_estimate_constant, shell_field};
use ci2d_core::schedule::{validate_schedule, witness_mutations, witness_schedule};
use ci2d_core::step::residual::nsr_residual;
use ci2d_core::cli::generators::generate;
use ci2d_core::step::{init_state, step, NSRState};
use ci2d_core::track::{TimeAxis, TimeTrack};
use ci2d_core::{CiError, Grid2, Rank, SpectralField};

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome { passed, detail: detail.into() }
}

/// `k (x) k` trace-free display for a unit direction given as `5k`.
fn kk_oracle(k: Direction) -> (f64, f64) {
    let [a, b] = k.five_k();
    let (k1, k2) = (a as f64 / 5.0, b as f64 / 5.0);
    (0.5 * (k1 * k1 - k2 * k2), k1 * k2)
}

fn criterion_1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let start = Instant::now();
    let mut err = 0.0f64;
    for _ in 0..10_000 {
        let r = StressMatrix::new(rng.gen_range(-100.0..100.0), rng.gen_range(-100.0..100.0));
        let (mut s11, mut s12) = (0.0, 0.0);
        for k in directions() {
            let g2 = gamma_sq(k, r);
            let (a, b) = kk_oracle(k);
            s11 += g2 * a;
            s12 += g2 * b;
        }
        err = err.max((s11 - r.r11).abs()).max((s12 - r.r12).abs());
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(err <= 1e-10 && secs < 5.0, format!("max error {err:.2e} over 1e4 stresses in {secs:.2} s"))
}

fn criterion_2() -> Outcome {
    let g = Grid2::new(256).unwrap();
    let mut err = 0.0f64;
    for r in [2, 5, 10, 25] {
        err = err.max((dirichlet_kernel(g, r).unwrap().l2_from_coeffs() - 2.0 * PI).abs());
    }
    let ratios: Vec<f64> = [2usize, 4, 8, 16, 32]
        .iter()
        .map(|&r| dirichlet_kernel(g, r).unwrap().lp_norm(4.0).unwrap() / (r as f64).sqrt())
        .collect();
    let worst = ratios.windows(2).map(|w| (w[1] / w[0]).max(w[0] / w[1])).fold(1.0, f64::max);
    outcome(err <= 1e-8 && worst < 2.0, format!("| ||D_r||_2 - 2 pi | = {err:.1e}; L4/r^(1/2) = {ratios:.3?}"))
}

fn toy_params() -> WaveParams {
    WaveParams::new(50, 10, 2, 5).unwrap()
}

fn criterion_3() -> Outcome {
    let g = Grid2::new(256).unwrap();
    let wp = toy_params();
    let mut ms = 0.0f64;
    let mut transport = 0.0f64;
    for k in directions() {
        for t in [0.0, 0.31, 0.77] {
            let e = eta(g, k, &wp, t).unwrap();
            // mean of eta^2 by grid quadrature
            let vals = e.value.synthesize_real();
            let mean_sq = vals[0].iter().map(|x| x * x).sum::<f64>() / g.num_nodes() as f64;
            ms = ms.max((mean_sq - 1.0).abs());
            // oracle: each mode xi of eta_k oscillates like e^{i omega t} with mu (k . xi) = omega
            let kv = k.positive_rep().k();
            for xi in e.value.waves().collect::<Vec<_>>() {
                let c = e.value.coeff(0, xi);
                let want = c * ci2d_core::Complex64::new(0.0, wp.mu as f64 * (kv[0] * xi[0] as f64 + kv[1] * xi[1] as f64));
                transport = transport.max((e.dt.coeff(0, xi) - want).norm());
            }
        }
    }
    outcome(ms <= 1e-10 && transport <= 1e-12, format!("| mean eta^2 - 1 | = {ms:.1e}; transport defect {transport:.1e}"))
}

fn energy_outside(f: &SpectralField, band: FreqBand) -> f64 {
    let total = f.energy_where(|_| true);
    if total == 0.0 {
        0.0
    } else {
        f.energy_where(|xi| !band.contains(xi)) / total
    }
}

fn criterion_4() -> Outcome {
    let t = 0.43;
    // single flows and the eta high-pass at the toy parameters
    let g = Grid2::new(256).unwrap();
    let wp = toy_params();
    let lam = wp.lambda as f64;
    let mut single = 0.0f64;
    for k in directions() {
        let w = intermittent_flow(g, k, &wp, t).unwrap().value;
        single = single.max(energy_outside(&w, FreqBand::closed(lam / 2.0, 2.0 * lam).unwrap()));
    }
    let mut high_pass = 0.0f64;
    for k in positive_directions() {
        let e = eta(g, k, &wp, t).unwrap().value;
        let a = project(&e, FreqBand::NonZero);
        let b = project(&e, FreqBand::AtLeast(wp.lambda_sigma() as f64 / 2.0));
        high_pass = high_pass.max(a.sub(&b).unwrap().max_coeff());
    }
    // products at the toy parameters (reported) and at scale-separated ones (asserted)
    let products = |g: Grid2, wp: &WaveParams| -> f64 {
        let lam = wp.lambda as f64;
        let band = FreqBand::closed(lam / 5.0, 4.0 * lam).unwrap();
        let flows: Vec<_> = directions().into_iter().map(|k| (k, intermittent_flow(g, k, wp, t).unwrap().value)).collect();
        let mut worst = 0.0f64;
        for (k, wk) in flows.iter().filter(|(k, _)| k.is_positive()) {
            for (k2, wk2) in &flows {
                if *k2 != k.neg() {
                    worst = worst.max(energy_outside(&tracefree_product(wk, wk2).unwrap(), band));
                }
            }
        }
        worst
    };
    let toy_products = products(g, &wp);
    let sep = reference_separated_params().unwrap();
    let sep_products = products(Grid2::new(1024).unwrap(), &sep);
    outcome(
        single <= 1e-12 && sep_products <= 1e-12 && high_pass == 0.0,
        format!(
            "w_k outside [l/2, 2l]: {single:.1e}; products outside [l/5, 4l]: {sep_products:.1e} at lambda = {}, 1/sigma = {}, r = {} \
             ({toy_products:.3} at the toy parameters, whose eta spectra are too wide); P_(!=0) eta - P_(>= l s / 2) eta = {high_pass:.1e}",
            sep.lambda, sep.sigma_inv, sep.r
        ),
    )
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let g = Grid2::new(128).unwrap();
    let (mut inv, mut sym, mut mean) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..100 {
        let band = rng.gen_range(1..=40);
        let f = project(&SpectralField::random(g, Rank::Vector, band, true, &mut rng).unwrap(), FreqBand::NonZero);
        let r = anti_divergence(&f).unwrap().tensor;
        // oracle: divergence of the symmetric matrix [[R11, R12], [R12, -R11]]
        let r11 = r.component(0);
        let r12 = r.component(1);
        let d1 = r11.derive(1, 0).add(&r12.derive(0, 1)).unwrap();
        let d2 = r12.derive(1, 0).sub(&r11.derive(0, 1)).unwrap();
        let div = SpectralField::from_components(Rank::Vector, &[d1, d2]).unwrap();
        inv = inv.max(div.sub(&f).unwrap().l2_from_coeffs() / f.l2_from_coeffs());
        // symmetry and trace: synthesize the full matrix from its stored entries
        let m = r.to_matrix().unwrap().synthesize_real();
        let scale = r.sup_norm().max(1e-300);
        for j in 0..g.num_nodes() {
            sym = sym.max((m[1][j] - m[2][j]).abs() / scale).max((m[0][j] + m[3][j]).abs() / scale);
        }
        mean = mean.max(r.mean().iter().map(|c| c.norm()).fold(0.0, f64::max) / r.max_coeff());
    }
    outcome(
        inv <= 1e-10 && sym <= 1e-12 && mean <= 1e-12,
        format!("div R f - f: {inv:.1e}; asymmetry / trace: {sym:.1e}; mean: {mean:.1e} over 100 fields"),
    )
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let g = Grid2::new(256).unwrap();
    let mut c_fit = 0.0f64;
    for trial in 0..200 {
        let kappa = [4usize, 8, 16, 32][trial % 4];
        let f = SpectralField::random(g, Rank::Scalar, rng.gen_range(1..=4), true, &mut rng).unwrap();
        let gk = periodic_field(g, kappa, rng.gen_range(1..=3), &mut rng).unwrap();
        c_fit = c_fit.max(product_estimate_constant(&f, &gk, kappa).unwrap());
    }
    let a = SpectralField::random(Grid2::new(16).unwrap(), Rank::Scalar, 2, true, &mut ChaCha8Rng::seed_from_u64(61)).unwrap();
    let mut ratios = Vec::new();
    for lam in [16usize, 32, 64, 128] {
        let g = Grid2::new(8 * lam).unwrap();
        let a = regrid(&a, g);
        let mut r = 0.0;
        for seed in 0..4 {
            let f = shell_field(g, lam as f64, 2.0 * lam as f64, &mut ChaCha8Rng::seed_from_u64(600 + seed)).unwrap();
            r += high_low_ratio(&a, &f, lam as f64).unwrap() / 4.0;
        }
        ratios.push(r);
    }
    let monotone = ratios.windows(2).all(|w| w[1] <= 2.0 * w[0]);
    outcome(c_fit <= 10.0 && monotone, format!("fitted product-estimate C = {c_fit:.3}; high-low ratios {ratios:.3?}"))
}

/// Same coefficients on another grid.
fn regrid(f: &SpectralField, g: Grid2) -> SpectralField {
    let mut out = SpectralField::zeros(g, f.rank(), f.band()).unwrap();
    for c in 0..f.rank().components() {
        for xi in f.waves().collect::<Vec<_>>() {
            out.set_coeff(c, xi, f.coeff(c, xi));
        }
    }
    out.assume_real()
}

/// Support of a track on `[0, T]` nodes, relative to its maximum.
fn support(track: &TimeTrack) -> Vec<(f64, bool)> {
    let axis = track.axis();
    let norms = track.sup_norms();
    let max = norms.iter().cloned().fold(0.0, f64::max);
    axis.interior().map(|i| (axis.time(i), norms[i] > 1e-13 * max)).collect()
}

fn within(inner: &[(f64, bool)], outer: &[(f64, bool)], radius: f64) -> bool {
    inner
        .iter()
        .filter(|(_, s)| *s)
        .all(|(t, _)| outer.iter().any(|(u, s)| *s && (t - u).abs() <= radius + 1e-12))
}

fn criteria_7_to_9() -> [Outcome; 3] {
    let cfg = acceptance_config();
    let s0 = initial_state(&cfg).unwrap();
    let start = Instant::now();
    let out = step(&s0, &cfg.step_config().unwrap()).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let d = &out.diagnostics;
    let value = |q: &str| d.value(q).unwrap();

    let stream = value("stream_identity");
    let div = value("div_principal").max(value("div_temporal"));
    let c7 = outcome(stream <= 1e-10 && div <= 1e-10, format!("stream identity {stream:.1e}; divergence {div:.1e} (relative, max over slices)"));

    let osc = value("oscillation_identity");
    let slices = value("oscillation_identity_slices");
    let c8 = outcome(osc <= 1e-8 && slices > 0.0, format!("relative cancellation defect {osc:.1e} on {slices} slices with Phi = 1"));

    let res = nsr_residual(&out.state).unwrap().max_interior;
    let ell = cfg.toy.as_ref().unwrap().ell;
    let r_old = support(&s0.r);
    let r_new = support(&out.state.r);
    let w: Vec<(f64, bool)> = {
        let axis = out.state.axis();
        axis.interior()
            .map(|i| {
                let dv = out.state.v.slice(i).sub(out.mollified.v_l.slice(i)).unwrap();
                (axis.time(i), dv.max_coeff() > 1e-13)
            })
            .collect()
    };
    let growth = within(&r_new, &r_old, 2.0 * ell);
    let pert = within(&w, &r_old, 2.0 * ell);
    let ok = res <= 1e-4 && secs <= 300.0 && growth && pert && d.supports.all();
    let c9 = outcome(
        ok,
        format!(
            "residual {res:.1e}; {secs:.1} s; supp R_(q+1) in N_(2 ell)(supp R_q): {growth}; supp w in N_(2 ell)(supp R_q): {pert}; step support checks: {:?}",
            d.supports
        ),
    );
    let dv = value("v_next_minus_v_l_linf_l2");
    let pred = d.row("v_next_minus_v_l_linf_l2").and_then(|r| r.predicted_scaling).unwrap();
    println!(
        "note: ||v_(q+1) - v_l||_(L^inf L^2) = {dv:.3} against A^(1/2) eps^(1/2) = {pred:.3} (ratio {:.1}); reported, not a criterion",
        dv / pred
    );
    [c7, c8, c9]
}

fn criterion_10() -> Outcome {
    let accepted = validate_schedule(&witness_schedule()).is_ok();
    let mut bad = Vec::new();
    for (name, sched, label) in witness_mutations() {
        match validate_schedule(&sched) {
            Err(CiError::ConstraintViolation { label: got, .. }) if got == label => {}
            other => bad.push(format!("{name}: {other:?}")),
        }
    }
    outcome(accepted && bad.is_empty(), if bad.is_empty() { format!("witness accepted: {accepted}; 5 mutations rejected with their labels") } else { bad.join("; ") })
}

fn criterion_11() -> Outcome {
    let cfg = acceptance_config();
    let axis = TimeAxis::new(1.0, 17, 0.1).unwrap();
    let u = generate(axis, Grid2::new(64).unwrap(), &cfg.initial).unwrap();
    let s = init_state(u, cfg.theta, cfg.nu).unwrap();
    let clean = nsr_residual(&s).unwrap().max_interior;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let noisy: Vec<SpectralField> = s
        .v
        .slices()
        .iter()
        .map(|v| {
            let n = helmholtz(&project(&SpectralField::random(v.grid(), Rank::Vector, 4, true, &mut rng).unwrap(), FreqBand::NonZero)).unwrap();
            v.add(&n.scale(0.3 * (1.0 + v.l2_from_coeffs()) / n.l2_from_coeffs())).unwrap()
        })
        .collect();
    let bad = NSRState::new(TimeTrack::new(axis, noisy, None).unwrap(), s.p.clone(), s.r.clone(), s.theta, s.nu, s.q).unwrap();
    let res = nsr_residual(&bad).unwrap().max_interior;
    outcome(res >= 0.1, format!("perturbed residual {res:.3} (unperturbed {clean:.1e})"))
}

#[test]
fn acceptance() {
    let mut results: Vec<(usize, Outcome)> = vec![(1, criterion_1()), (2, criterion_2()), (3, criterion_3()), (4, criterion_4()), (5, criterion_5()), (6, criterion_6())];
    let [c7, c8, c9] = criteria_7_to_9();
    results.extend([(7, c7), (8, c8), (9, c9), (10, criterion_10()), (11, criterion_11())]);
    let mut failed = Vec::new();
    for (i, o) in &results {
        println!("criterion {i:>2}: {} - {}", if o.passed { "PASS" } else { "FAIL" }, o.detail);
        if !o.passed {
            failed.push(*i);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
