//! Per-slice checks and the step diagnostics table.

use std::fmt::Write as _;

use serde::Serialize;

use crate::blocks::{directions, eta, times_wave_b, WaveParams};
use crate::calculus::tracefree_product;
use crate::error::Result;
use crate::field::SpectralField;
use crate::step::assemble::StressGroups;
use crate::step::coefficients::{positive_index, SliceCoefficients};
use crate::step::perturb::SlicePerturbation;
use crate::track::TimeAxis;

/// One row of the diagnostics table.
#[derive(Clone, Debug, Serialize)]
pub struct DiagnosticRow {
    pub quantity: String,
    /// The display the value is measured against, as a formula.
    pub paper_ref: String,
    pub value: f64,
    /// Predicted size, when the construction predicts one.
    pub predicted_scaling: Option<f64>,
    /// `value / predicted_scaling`, or the tolerance ratio for identities.
    pub margin: Option<f64>,
}

/// Measurements on one time slice.
#[derive(Clone, Debug, Default, Serialize)]
pub struct SliceDiagnostics {
    pub t: f64,
    pub phi: f64,
    pub active: bool,
    /// `||w_p + w_c - grad_perp Psi||_{L^2} / ||w_p||_{L^2}`.
    pub stream_identity: f64,
    /// `||div(w_p + w_c)||_{L^2} / ||w||_{L^2}`.
    pub div_principal: f64,
    /// `||div w_t||_{L^2} / ||w||_{L^2}`.
    pub div_temporal: f64,
    pub realness_defect: f64,
    /// `max |sum_k a_k^2 mean(w_k (x) w_{-k}) + R_ls| / max |R_ls|` at the
    /// coefficient nodes, on slices with `Phi = 1`.
    pub oscillation_identity: Option<f64>,
    pub w_p_l2: f64,
    pub w_c_l2: f64,
    pub w_t_l2: f64,
    pub dw_p_l2: f64,
    pub mean_v: f64,
    pub groups: StressGroups,
    pub r_new_l1: f64,
}

fn ratio(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        if a == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        a / b
    }
}

/// `mean(w_k (x) w_{-k})` as `(R11, R12)` of its symmetric part.
pub fn self_interaction_mean(grid: crate::field::Grid2, k: crate::blocks::Direction, wp: &WaveParams, t: f64) -> Result<[f64; 2]> {
    let e = eta(grid, k, wp, t)?.value;
    let wk = times_wave_b(&e, k, wp.lambda)?;
    let wmk = times_wave_b(&e, k.neg(), wp.lambda)?;
    let m = tracefree_product(&wk, &wmk)?.mean();
    Ok([0.5 * (m[0].re - m[3].re), 0.5 * (m[1].re + m[2].re)])
}

/// Residual of `sum_k a_k^2 mean(w_k (x) w_{-k}) = -R_ls` at the coefficient
/// nodes, relative to `max |R_ls|`.
pub fn oscillation_identity(
    coef: &SliceCoefficients,
    r_ls: &SpectralField,
    wp: &WaveParams,
    t: f64,
    nodes: usize,
) -> Result<f64> {
    let grid = r_ls.grid();
    let means: Vec<[f64; 2]> =
        directions().into_iter().map(|k| self_interaction_mean(grid, k, wp, t)).collect::<Result<_>>()?;
    let rv = r_ls.synthesize_on(nodes);
    let mut err = 0.0f64;
    let mut scale = 0.0f64;
    for p in 0..nodes * nodes {
        let mut s = [rv[0][p].re, rv[1][p].re];
        scale = scale.max(s[0].abs()).max(s[1].abs());
        for (k, m) in directions().into_iter().zip(&means) {
            let a = coef.nodal[positive_index(k)][p];
            s[0] += a * a * m[0];
            s[1] += a * a * m[1];
        }
        err = err.max(s[0].abs()).max(s[1].abs());
    }
    Ok(ratio(err, scale))
}

/// Checks on one slice after assembly.
#[allow(clippy::too_many_arguments)]
pub fn slice_diagnostics(
    t: f64,
    phi: f64,
    coef: &SliceCoefficients,
    pert: &SlicePerturbation,
    r_ls: &SpectralField,
    v_new: &SpectralField,
    r_new: &SpectralField,
    groups: StressGroups,
    wp: &WaveParams,
    nodes: usize,
) -> Result<SliceDiagnostics> {
    let w = pert.total()?;
    let wl2 = w.l2_from_coeffs();
    let wpl2 = pert.w_p.l2_from_coeffs();
    let principal = pert.w_p.add(&pert.w_c)?;
    let stream = principal.sub(&pert.stream.perp_grad()?)?.l2_from_coeffs();
    let osc = if phi == 1.0 && !coef.vanishes { Some(oscillation_identity(coef, r_ls, wp, t, nodes)?) } else { None };
    Ok(SliceDiagnostics {
        t,
        phi,
        active: !coef.vanishes,
        stream_identity: ratio(stream, wpl2),
        div_principal: ratio(principal.divergence()?.l2_from_coeffs(), wl2),
        div_temporal: ratio(pert.w_t.divergence()?.l2_from_coeffs(), wl2),
        realness_defect: pert.realness_defect,
        oscillation_identity: osc,
        w_p_l2: wpl2,
        w_c_l2: pert.w_c.l2_from_coeffs(),
        w_t_l2: pert.w_t.l2_from_coeffs(),
        dw_p_l2: pert.dw_p.l2_from_coeffs(),
        mean_v: v_new.mean().iter().map(|c| c.norm()).fold(0.0, f64::max),
        groups,
        r_new_l1: r_new.l1_norm(),
    })
}

/// Support containment checks of one step.
#[derive(Clone, Debug, Default, Serialize)]
pub struct SupportChecks {
    /// `supp_t w ⊆ supp Phi`.
    pub perturbation_in_cutoff: bool,
    /// `Phi = 1` on `supp_t R_ls`.
    pub cutoff_one_on_support: bool,
    /// `supp Phi ⊆ N_ell(supp_t R_ls)`.
    pub cutoff_in_neighborhood: bool,
    /// `supp_t R_{q+1} ⊆ N_{2 ell}(supp_t R_q)`.
    pub stress_growth: bool,
}

impl SupportChecks {
    pub fn all(&self) -> bool {
        self.perturbation_in_cutoff && self.cutoff_one_on_support && self.cutoff_in_neighborhood && self.stress_growth
    }
}

/// Whether every node of `inner` lies within `radius` of a node of `outer`.
pub fn contained_in_neighborhood(axis: &TimeAxis, inner: &[bool], outer: &[bool], radius: f64) -> bool {
    let times = axis.times();
    inner.iter().enumerate().filter(|(_, s)| **s).all(|(i, _)| {
        outer.iter().enumerate().any(|(j, o)| *o && (times[i] - times[j]).abs() <= radius + 1e-12)
    })
}

/// All step diagnostics.
#[derive(Clone, Debug, Default, Serialize)]
pub struct StepDiagnostics {
    pub rows: Vec<DiagnosticRow>,
    pub slices: Vec<SliceDiagnostics>,
    pub supports: SupportChecks,
    pub warnings: Vec<String>,
}

impl StepDiagnostics {
    pub fn push(&mut self, quantity: &str, paper_ref: &str, value: f64, predicted: Option<f64>) {
        let margin = predicted.map(|p| ratio(value, p));
        self.rows.push(DiagnosticRow {
            quantity: quantity.to_string(),
            paper_ref: paper_ref.to_string(),
            value,
            predicted_scaling: predicted,
            margin,
        });
    }

    pub fn value(&self, quantity: &str) -> Option<f64> {
        self.rows.iter().find(|r| r.quantity == quantity).map(|r| r.value)
    }

    pub fn row(&self, quantity: &str) -> Option<&DiagnosticRow> {
        self.rows.iter().find(|r| r.quantity == quantity)
    }

    /// CSV with columns `quantity,paper_ref,value,predicted_scaling,margin`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("quantity,paper_ref,value,predicted_scaling,margin\n");
        let opt = |x: Option<f64>| x.map(|v| format!("{v:e}")).unwrap_or_default();
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},\"{}\",{:e},{},{}",
                r.quantity,
                r.paper_ref.replace('"', "\"\""),
                r.value,
                opt(r.predicted_scaling),
                opt(r.margin)
            );
        }
        out
    }
}
