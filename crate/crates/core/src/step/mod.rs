//! One iteration of the convex-integration scheme:
//! mollify, cut off in time, build amplitudes and perturbations, and assemble
//! the new pressure and Reynolds stress.

pub mod assemble;
pub mod coefficients;
pub mod cutoff;
pub mod diagnostics;
pub mod mollify;
pub mod perturb;
pub mod residual;
pub mod state;

use rayon::prelude::*;
use serde::Serialize;

use crate::blocks::WaveParams;
use crate::error::{CiError, Result};
use crate::field::SpectralField;
use crate::step::assemble::{assemble_slice, MollifiedSlice};
use crate::step::coefficients::{choose_coeff_grid, coefficients_slice, CoeffGrid};
use crate::step::cutoff::{temporal_cutoff, CutoffProfile, SUPPORT_THRESHOLD};
use crate::step::diagnostics::{contained_in_neighborhood, slice_diagnostics, SliceDiagnostics, StepDiagnostics, SupportChecks};
use crate::step::mollify::{mollify, Mollified};
use crate::step::perturb::perturbations_slice;
use crate::step::residual::{nsr_residual, residual_slice};
use crate::track::{support_mask, TimeTrack};

pub use state::{init_state, NSRState};

/// Parameters of one step.
#[derive(Clone, Debug, Serialize)]
pub struct StepConfig {
    pub wp: WaveParams,
    pub ell: f64,
    /// The constant `A` of the amplitude `(A eps_{q+1})^{1/2}`.
    pub amp_a: f64,
    /// `eps_{q+1}`.
    pub eps_next: f64,
    /// Compute per-group stress norms and the full diagnostics table.
    pub diagnostics: bool,
    /// Keep the perturbation tracks in the output.
    pub keep_perturbations: bool,
}

/// Perturbation tracks with derivative channels.
#[derive(Clone, Debug)]
pub struct PerturbationTracks {
    pub w_p: TimeTrack,
    pub w_c: TimeTrack,
    pub w_t: TimeTrack,
}

/// Result of [`step`].
#[derive(Clone, Debug)]
pub struct StepOutput {
    pub state: NSRState,
    pub mollified: Mollified,
    pub cutoff: CutoffProfile,
    pub coeff_grid: CoeffGrid,
    pub perturbations: Option<PerturbationTracks>,
    pub diagnostics: StepDiagnostics,
}

struct SliceResult {
    v: SpectralField,
    dv: SpectralField,
    p: SpectralField,
    r: SpectralField,
    w: Option<[SpectralField; 6]>,
    diag: SliceDiagnostics,
}

/// `(v_q, p_q, R_q) -> (v_{q+1}, p_{q+1}, R_{q+1})`.
pub fn step(state: &NSRState, cfg: &StepConfig) -> Result<StepOutput> {
    let axis = state.axis();
    let grid = state.grid();
    let wp = &cfg.wp;
    let m = mollify(state, cfg.ell)?;
    let cutoff = temporal_cutoff(&m.r_ls, cfg.ell);
    let band_v = m.v_l.slices().iter().map(|s| s.band()).max().unwrap_or(0);
    let band_r = m.r_ls.slices().iter().map(|s| s.band()).max().unwrap_or(0);
    let cg = choose_coeff_grid(grid, wp, band_v, band_r)?;
    let dv_l = m.v_l.channel().ok_or_else(|| CiError::DerivativeChannelMissing("v_l".into()))?;
    let dr_ls = m.r_ls.channel().ok_or_else(|| CiError::DerivativeChannelMissing("R_ls".into()))?;

    let run = |i: usize| -> Result<SliceResult> {
        let t = axis.time(i);
        let coef = coefficients_slice(
            m.r_ls.slice(i),
            &dr_ls[i],
            cutoff.values[i],
            cutoff.dvalues[i],
            cfg.amp_a,
            cfg.eps_next,
            cg,
        )?;
        let pert = perturbations_slice(&coef, wp, t)?;
        let ms = MollifiedSlice { v: m.v_l.slice(i), dv: &dv_l[i], pi: m.pi_l.slice(i), r_ls: m.r_ls.slice(i) };
        let asm = assemble_slice(&ms, &pert, wp, state.theta, state.nu, cfg.diagnostics)?;
        let diag = slice_diagnostics(
            t,
            cutoff.values[i],
            &coef,
            &pert,
            m.r_ls.slice(i),
            &asm.v,
            &asm.r,
            asm.groups,
            wp,
            cg.nodes,
        )?;
        let w = cfg.keep_perturbations.then(|| {
            [
                pert.w_p.clone(),
                pert.w_c.clone(),
                pert.w_t.clone(),
                pert.dw_p.clone(),
                pert.dw_c.clone(),
                pert.dw_t.clone(),
            ]
        });
        Ok(SliceResult { v: asm.v, dv: asm.dv, p: asm.p, r: asm.r, w, diag })
    };
    let results: Vec<SliceResult> = (0..axis.len()).into_par_iter().map(run).collect::<Result<_>>()?;

    let mut v = Vec::with_capacity(results.len());
    let mut dv = Vec::with_capacity(results.len());
    let mut p = Vec::with_capacity(results.len());
    let mut r = Vec::with_capacity(results.len());
    let mut ws: [Vec<SpectralField>; 6] = Default::default();
    let mut slices = Vec::with_capacity(results.len());
    for res in results {
        v.push(res.v);
        dv.push(res.dv);
        p.push(res.p);
        r.push(res.r);
        if let Some(w) = res.w {
            for (acc, f) in ws.iter_mut().zip(w) {
                acc.push(f);
            }
        }
        slices.push(res.diag);
    }
    let perturbations = if cfg.keep_perturbations {
        let [wp_, wc, wt, dwp, dwc, dwt] = ws;
        Some(PerturbationTracks {
            w_p: TimeTrack::new(axis, wp_, Some(dwp))?,
            w_c: TimeTrack::new(axis, wc, Some(dwc))?,
            w_t: TimeTrack::new(axis, wt, Some(dwt))?,
        })
    } else {
        None
    };

    let mut next = NSRState::new(
        TimeTrack::new(axis, v, Some(dv))?,
        TimeTrack::new(axis, p, None)?,
        TimeTrack::new(axis, r, None)?,
        state.theta,
        state.nu,
        state.q + 1,
    )?;
    next.meta = state.meta.clone();
    next.meta.push(format!(
        "step q = {} -> {}: lambda = {}, 1/sigma = {}, r = {}, mu = {}, ell = {}, A = {}, eps = {}",
        state.q,
        state.q + 1,
        wp.lambda,
        wp.sigma_inv,
        wp.r,
        wp.mu,
        cfg.ell,
        cfg.amp_a,
        cfg.eps_next
    ));

    let diagnostics = step_diagnostics(state, &next, &m, &cutoff, cfg, slices)?;
    Ok(StepOutput { state: next, mollified: m, cutoff, coeff_grid: cg, perturbations, diagnostics })
}

fn max_of(xs: impl Iterator<Item = f64>) -> f64 {
    xs.fold(0.0, f64::max)
}

fn step_diagnostics(
    old: &NSRState,
    new: &NSRState,
    m: &Mollified,
    cutoff: &CutoffProfile,
    cfg: &StepConfig,
    slices: Vec<SliceDiagnostics>,
) -> Result<StepDiagnostics> {
    let axis = old.axis();
    let wp = &cfg.wp;
    let ell = cfg.ell;
    let mut d = StepDiagnostics { warnings: wp.warnings(), ..Default::default() };

    let r_ls_support = support_mask(&m.r_ls.sup_norms(), SUPPORT_THRESHOLD);
    let w_support: Vec<bool> = slices.iter().map(|s| s.w_p_l2 + s.w_c_l2 + s.w_t_l2 > 0.0).collect();
    let phi_support: Vec<bool> = cutoff.values.iter().map(|v| *v > 0.0).collect();
    let old_r = old.r.support(SUPPORT_THRESHOLD);
    let new_r = new.r.support(SUPPORT_THRESHOLD);
    d.supports = SupportChecks {
        perturbation_in_cutoff: w_support.iter().zip(&phi_support).all(|(w, p)| !*w || *p),
        cutoff_one_on_support: r_ls_support.iter().zip(&cutoff.values).all(|(s, v)| !*s || *v == 1.0),
        cutoff_in_neighborhood: contained_in_neighborhood(&axis, &phi_support, &r_ls_support, ell),
        stress_growth: contained_in_neighborhood(&axis, &new_r, &old_r, 2.0 * ell),
    };

    let residual = nsr_residual(new)?;
    d.push("residual_new", "d_t v + div(v (x) v) + grad p + nu (-Delta)^theta v - div R = 0", residual.max_interior, None);

    if cfg.diagnostics {
        let dv_l = m.v_l.channel().expect("mollified velocity has a channel");
        let mut moll_res = 0.0f64;
        for i in axis.interior() {
            let v = m.v_l.slice(i);
            let p = m.pi_l.slice(i).sub(&v.square_norm()?.scale(0.5))?;
            let (res, scale) = residual_slice(v, &dv_l[i], &p, m.r_ls.slice(i), old.theta, old.nu)?;
            moll_res = moll_res.max(res.l2_from_coeffs() / scale);
        }
        d.push("residual_mollified", "d_t v_l + div(v_l (x) v_l) + grad p_l + nu (-Delta)^theta v_l = div R_ls", moll_res, None);
        let old_res = nsr_residual(old)?;
        d.push("residual_old", "d_t v_q + div(v_q (x) v_q) + grad p_q + nu (-Delta)^theta v_q = div R_q", old_res.max_interior, None);

        let mut dv_sup = 0.0f64;
        let mut c1 = 0.0f64;
        for i in 0..axis.len() {
            dv_sup = dv_sup.max(m.v_l.slice(i).sub(old.v.slice(i))?.sup_norm());
            c1 = c1.max(old.v.slice(i).cn_norm(1));
        }
        d.push("v_l_minus_v_linf", "||v_l - v_q||_{L^inf} <~ ell ||v_q||_{C^1}", dv_sup, Some(ell * c1));
    }

    let amp = (cfg.amp_a * cfg.eps_next).sqrt();
    let ls = wp.lambda_sigma() as f64;
    let (sigma, mu, r) = (wp.sigma(), wp.mu as f64, wp.r as f64);
    let dw_l2 = max_of(
        new.v.slices().iter().zip(m.v_l.slices()).map(|(a, b)| a.sub(b).map(|x| x.l2_from_coeffs()).unwrap_or(f64::NAN)),
    );
    d.push("v_next_minus_v_l_linf_l2", "||v_{q+1} - v_l||_{L^inf L^2} <~ A^{1/2} eps_{q+1}^{1/2}", dw_l2, Some(amp));
    let wp_l2 = max_of(slices.iter().map(|s| s.w_p_l2));
    d.push(
        "w_p_linf_l2",
        "||w_p||_{L^inf L^2} <~ A^{1/2} eps^{1/2} + ell^{-2} (lambda sigma)^{-1/2}",
        wp_l2,
        Some(amp + ell.powi(-2) * ls.powf(-0.5)),
    );
    let wct = max_of(slices.iter().map(|s| s.w_c_l2 + s.w_t_l2));
    d.push("w_c_plus_w_t_linf_l2", "||w_c||_{L^2} + ||w_t||_{L^2} <~ ell^{-4} (sigma + 1/mu) r", wct, Some(ell.powi(-4) * (sigma + 1.0 / mu) * r));
    let dwp = max_of(slices.iter().map(|s| s.dw_p_l2));
    d.push("d_t_w_p_linf_l2", "||d_t w_p||_{L^2} <~ lambda sigma mu r^2", dwp, Some(ls * mu * r * r));

    d.push("stream_identity", "w_p + w_c = grad_perp(sum_k a_k eta_k psi_k)", max_of(slices.iter().map(|s| s.stream_identity)), None);
    d.push("div_principal", "div(w_p + w_c) = 0", max_of(slices.iter().map(|s| s.div_principal)), None);
    d.push("div_temporal", "div w_t = 0", max_of(slices.iter().map(|s| s.div_temporal)), None);
    d.push("realness_defect", "w_p, w_c, w_t real-valued", max_of(slices.iter().map(|s| s.realness_defect)), None);
    let osc: Vec<f64> = slices.iter().filter_map(|s| s.oscillation_identity).collect();
    d.push(
        "oscillation_identity",
        "sum_k a_k^2 mean(w_k (x) w_{-k}) = -R_ls where Phi = 1",
        max_of(osc.iter().copied()),
        None,
    );
    d.push("oscillation_identity_slices", "slices with Phi = 1", osc.len() as f64, None);
    d.push("mean_v_next", "mean(v_{q+1}) = 0", max_of(slices.iter().map(|s| s.mean_v)), None);
    d.push("removed_mean", "mean of the stress source before R", max_of(slices.iter().map(|s| s.groups.removed_mean)), None);

    let r_l1 = max_of(slices.iter().map(|s| s.r_new_l1));
    let band = [sigma * mu, sigma * r, r / mu, 1.0 / ls];
    let names = ["sigma mu", "sigma r", "r / mu", "(lambda sigma)^{-1}"];
    d.push("R_next_linf_l1", "||R_{q+1}||_{L^inf L^1}", r_l1, Some(ell.powi(-8) * band.iter().sum::<f64>()));
    for (name, term) in names.iter().zip(band) {
        d.push(
            &format!("R_next_bound_term[{name}]"),
            &format!("ell^{{-8}} ({name}) r^{{2-2/p}} at p = 1"),
            ell.powi(-8) * term,
            None,
        );
    }
    if cfg.diagnostics {
        d.push("R_lin_linf_l1", "R(d_t w_p + d_t w_c + nu (-Delta)^theta w) + v_l (x) w + w (x) v_l", max_of(slices.iter().map(|s| s.groups.lin)), None);
        d.push("R_corr_linf_l1", "(w_c + w_t) (x) w + w_p (x) (w_c + w_t)", max_of(slices.iter().map(|s| s.groups.corr)), None);
        d.push("R_osc_linf_l1", "w_p (x) w_p + R_ls + R d_t w_t - p* Id", max_of(slices.iter().map(|s| s.groups.osc)), None);
    }
    d.push("support_perturbation_in_cutoff", "supp_t w_{q+1} in supp Phi", f64::from(u8::from(d.supports.perturbation_in_cutoff)), None);
    d.push("support_cutoff_one", "Phi = 1 on supp_t R_ls", f64::from(u8::from(d.supports.cutoff_one_on_support)), None);
    d.push("support_cutoff_neighborhood", "supp Phi in N_ell(supp_t R_ls)", f64::from(u8::from(d.supports.cutoff_in_neighborhood)), None);
    d.push("support_stress_growth", "supp_t R_{q+1} in N_{2 ell}(supp_t R_q)", f64::from(u8::from(d.supports.stress_growth)), None);
    d.slices = slices;
    Ok(d)
}
