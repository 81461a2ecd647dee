//! Principal, corrector and temporal perturbations of one slice.

use crate::blocks::{eta, positive_directions, times_wave_b, times_wave_psi, WaveParams};
use crate::calculus::{helmholtz, project, FreqBand};
use crate::error::Result;
use crate::field::{Grid2, Rank, SpectralField};
use crate::step::coefficients::{perturbation_bands, SliceCoefficients};

/// Perturbations on one slice, with time-derivative channels and the
/// auxiliary fields reused by the pressure correction and diagnostics.
#[derive(Clone, Debug)]
pub struct SlicePerturbation {
    pub w_p: SpectralField,
    pub w_c: SpectralField,
    pub w_t: SpectralField,
    pub dw_p: SpectralField,
    pub dw_c: SpectralField,
    pub dw_t: SpectralField,
    /// Stream function `Psi = sum_k a_k eta_k psi_k`, so `w_p + w_c = grad_perp Psi`.
    pub stream: SpectralField,
    /// `g_k = a_k eta_k` per positive direction (`g_{-k} = g_k`).
    pub g: Vec<SpectralField>,
    pub dg: Vec<SpectralField>,
    /// `h_k = a_k^2 P_{!=0}(eta_k^2)` and its time derivative, per positive direction.
    pub h: Vec<SpectralField>,
    pub dh: Vec<SpectralField>,
    /// `mean(eta_k^2)` per positive direction.
    pub eta_sq_mean: Vec<f64>,
    /// Largest realness defect among the summed pieces before projection.
    pub realness_defect: f64,
}

impl SlicePerturbation {
    pub fn total(&self) -> Result<SpectralField> {
        SpectralField::sum([&self.w_p, &self.w_c, &self.w_t])
    }

    pub fn total_dt(&self) -> Result<SpectralField> {
        SpectralField::sum([&self.dw_p, &self.dw_c, &self.dw_t])
    }

    /// All-zero perturbation at the bands a nonzero one would have.
    pub fn zero(grid: Grid2, wp: &WaveParams, band_a: usize) -> Result<Self> {
        let (bw, bt, _) = perturbation_bands(band_a, wp);
        let v = SpectralField::zeros(grid, Rank::Vector, bw)?.assume_real();
        let t = SpectralField::zeros(grid, Rank::Vector, bt)?.assume_real();
        let s = SpectralField::zeros(grid, Rank::Scalar, bw)?.assume_real();
        let n = positive_directions().len();
        let gz = SpectralField::zeros(grid, Rank::Scalar, band_a + wp.eta_band())?.assume_real();
        let hz = SpectralField::zeros(grid, Rank::Scalar, 2 * (band_a + wp.eta_band()))?.assume_real();
        Ok(SlicePerturbation {
            w_p: v.clone(),
            w_c: v.clone(),
            w_t: t.clone(),
            dw_p: v.clone(),
            dw_c: v,
            dw_t: t,
            stream: s,
            g: vec![gz.clone(); n],
            dg: vec![gz; n],
            h: vec![hz.clone(); n],
            dh: vec![hz; n],
            eta_sq_mean: vec![0.0; n],
            realness_defect: 0.0,
        })
    }
}

fn accumulate(acc: &mut Option<SpectralField>, f: SpectralField) -> Result<()> {
    *acc = Some(match acc.take() {
        Some(a) => a.add(&f)?,
        None => f,
    });
    Ok(())
}

fn finish(acc: Option<SpectralField>, defect: &mut f64) -> SpectralField {
    let f = acc.expect("at least one direction");
    *defect = defect.max(f.realness_defect());
    f.into_real()
}

/// `w_p = sum_k a_k eta_k b_k`, `w_c = sum_k grad_perp(a_k eta_k) psi_k` and
/// `w_t = (1/mu)(sum_{+} - sum_{-}) P_H P_{!=0}(a_k^2 P_{!=0}(eta_k^2) k)`
/// at time `t`.
pub fn perturbations_slice(coef: &SliceCoefficients, wp: &WaveParams, t: f64) -> Result<SlicePerturbation> {
    let grid = coef.a[0].grid();
    let band_a = coef.a[0].band();
    if coef.vanishes {
        return SlicePerturbation::zero(grid, wp, band_a);
    }
    let lambda = wp.lambda;
    let inv_l = 1.0 / lambda as f64;
    let inv_mu = 1.0 / wp.mu as f64;
    let (mut wp_acc, mut wc_acc, mut wt_acc) = (None, None, None);
    let (mut dwp_acc, mut dwc_acc, mut dwt_acc) = (None, None, None);
    let mut stream_acc = None;
    let (mut gs, mut dgs, mut hs, mut dhs, mut means) = (Vec::new(), Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for (j, k) in positive_directions().into_iter().enumerate() {
        let e = eta(grid, k, wp, t)?;
        let a = &coef.a[j];
        let da = &coef.da[j];
        let g = a.mul(&e.value)?;
        let dg = da.mul(&e.value)?.add(&a.mul(&e.dt)?)?;
        for s in [k, k.neg()] {
            let kl = s.scaled(lambda)?;
            accumulate(&mut wp_acc, times_wave_b(&g, s, lambda)?)?;
            accumulate(&mut dwp_acc, times_wave_b(&dg, s, lambda)?)?;
            accumulate(&mut wc_acc, g.perp_grad()?.shift(kl)?.scale(inv_l))?;
            accumulate(&mut dwc_acc, dg.perp_grad()?.shift(kl)?.scale(inv_l))?;
            accumulate(&mut stream_acc, times_wave_psi(&g, s, lambda)?)?;
        }
        let e2 = e.value.mul(&e.value)?;
        let mean = e2.mean()[0].re;
        let e2 = project(&e2, FreqBand::NonZero);
        let de2 = project(&e.value.mul(&e.dt)?.scale(2.0), FreqBand::NonZero);
        let a2 = a.mul(a)?;
        let h = a2.mul(&e2)?;
        let dh = a.mul(da)?.scale(2.0).mul(&e2)?.add(&a2.mul(&de2)?)?;
        // the k and -k terms of the signed sum coincide
        let kv = k.k();
        let temporal = |f: &SpectralField| -> Result<SpectralField> {
            Ok(helmholtz(&project(&f.times_vector(kv)?, FreqBand::NonZero))?.scale(2.0 * inv_mu))
        };
        accumulate(&mut wt_acc, temporal(&h)?)?;
        accumulate(&mut dwt_acc, temporal(&dh)?)?;
        gs.push(g);
        dgs.push(dg);
        hs.push(h);
        dhs.push(dh);
        means.push(mean);
    }
    let mut defect = 0.0;
    Ok(SlicePerturbation {
        w_p: finish(wp_acc, &mut defect),
        w_c: finish(wc_acc, &mut defect),
        w_t: finish(wt_acc, &mut defect),
        dw_p: finish(dwp_acc, &mut defect),
        dw_c: finish(dwc_acc, &mut defect),
        dw_t: finish(dwt_acc, &mut defect),
        stream: finish(stream_acc, &mut defect),
        g: gs,
        dg: dgs,
        h: hs,
        dh: dhs,
        eta_sq_mean: means,
        realness_defect: defect,
    })
}
