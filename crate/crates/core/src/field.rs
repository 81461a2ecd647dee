//! Band-limited trigonometric polynomials on the torus `[0, 2pi)^2`.
//!
//! A [`SpectralField`] stores the Fourier coefficients `c(xi)` of
//! `f(x) = sum_xi c(xi) exp(i xi.x)` for every wave vector with
//! `|xi|_inf <= band`, where `band < n / 2` for the owning [`Grid2`]. Physical
//! values are produced on demand by an inverse FFT. Products are formed in
//! physical space on the smallest power-of-two grid that represents the
//! product exactly, and fail with [`CiError::AliasingRisk`] when the owning
//! grid cannot hold the result.

use std::f64::consts::PI;

use rand::Rng;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{CiError, Result};
use crate::fft;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Uniform `n x n` grid on the torus.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Grid2 {
    n: usize,
}

impl Grid2 {
    pub fn new(n: usize) -> Result<Self> {
        if n < 4 || !n.is_power_of_two() {
            return Err(CiError::Config(format!("grid size {n} must be a power of two >= 4")));
        }
        Ok(Grid2 { n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_nodes(&self) -> usize {
        self.n * self.n
    }

    /// Largest representable `|xi|_inf`.
    pub fn max_band(&self) -> usize {
        self.n / 2 - 1
    }

    /// Node coordinate `2 pi j / n` along one axis.
    pub fn node(&self, j: usize) -> f64 {
        2.0 * PI * j as f64 / self.n as f64
    }

    pub fn cell_area(&self) -> f64 {
        let h = 2.0 * PI / self.n as f64;
        h * h
    }

    pub fn check_band(&self, band: usize, what: &str) -> Result<()> {
        if band > self.max_band() {
            return Err(CiError::AliasingRisk(format!(
                "{what}: band {band} needs n > {}, grid has n = {}",
                2 * band + 1,
                self.n
            )));
        }
        Ok(())
    }
}

/// Tensor rank of a field.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Rank {
    Scalar,
    Vector,
    /// Symmetric trace-free 2x2 tensor stored as `(r11, r12)`.
    SymTensor,
    /// General 2x2 matrix stored row-major `(m11, m12, m21, m22)`.
    Matrix,
}

impl Rank {
    pub fn components(self) -> usize {
        match self {
            Rank::Scalar => 1,
            Rank::Vector | Rank::SymTensor => 2,
            Rank::Matrix => 4,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Rank::Scalar => "scalar",
            Rank::Vector => "vector",
            Rank::SymTensor => "symtensor",
            Rank::Matrix => "matrix",
        }
    }

    /// Weight of each stored component in the pointwise Frobenius norm.
    fn norm_weights(self) -> &'static [f64] {
        match self {
            Rank::Scalar => &[1.0],
            Rank::Vector => &[1.0, 1.0],
            Rank::SymTensor => &[2.0, 2.0],
            Rank::Matrix => &[1.0, 1.0, 1.0, 1.0],
        }
    }
}

/// Trigonometric polynomial with scalar, vector or tensor values.
#[derive(Clone, Debug)]
pub struct SpectralField {
    grid: Grid2,
    rank: Rank,
    band: usize,
    comps: Vec<Vec<Complex64>>,
    real: bool,
}

fn side(band: usize) -> usize {
    2 * band + 1
}

fn smallest_fft_size(band: usize) -> usize {
    (2 * band + 1).next_power_of_two().max(4)
}

impl SpectralField {
    pub fn zeros(grid: Grid2, rank: Rank, band: usize) -> Result<Self> {
        grid.check_band(band, "field allocation")?;
        let len = side(band) * side(band);
        Ok(SpectralField { grid, rank, band, comps: vec![vec![ZERO; len]; rank.components()], real: true })
    }

    /// Field with a single Fourier mode `amp * exp(i xi.x)` per component.
    pub fn mode(grid: Grid2, rank: Rank, xi: [i64; 2], amps: &[Complex64]) -> Result<Self> {
        let band = xi[0].unsigned_abs().max(xi[1].unsigned_abs()) as usize;
        let mut f = Self::zeros(grid, rank, band)?;
        for (c, a) in amps.iter().enumerate() {
            f.set_coeff(c, xi, *a);
        }
        f.real = xi == [0, 0] && amps.iter().all(|a| a.im == 0.0);
        Ok(f)
    }

    /// Scalar field equal to a real constant.
    pub fn constant(grid: Grid2, value: f64) -> Self {
        let mut f = Self::zeros(grid, Rank::Scalar, 0).expect("band 0 always fits");
        f.comps[0][0] = Complex64::new(value, 0.0);
        f
    }

    /// Random field with coefficients uniform in the unit square for
    /// `|xi|_inf <= band`; conjugate-symmetrized when `real`.
    pub fn random<R: Rng>(grid: Grid2, rank: Rank, band: usize, real: bool, rng: &mut R) -> Result<Self> {
        let mut f = Self::zeros(grid, rank, band)?;
        for comp in f.comps.iter_mut() {
            for c in comp.iter_mut() {
                *c = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            }
        }
        f.real = false;
        Ok(if real { f.into_real() } else { f })
    }

    pub fn grid(&self) -> Grid2 {
        self.grid
    }

    pub fn rank(&self) -> Rank {
        self.rank
    }

    pub fn band(&self) -> usize {
        self.band
    }

    pub fn is_real(&self) -> bool {
        self.real
    }

    /// Declare the field real-valued without symmetrizing. Use only when
    /// conjugate symmetry holds by construction.
    pub fn assume_real(mut self) -> Self {
        self.real = true;
        self
    }

    pub fn coeffs(&self, comp: usize) -> &[Complex64] {
        &self.comps[comp]
    }

    #[inline]
    fn index(&self, xi: [i64; 2]) -> Option<usize> {
        let b = self.band as i64;
        if xi[0].abs() > b || xi[1].abs() > b {
            return None;
        }
        Some(((xi[0] + b) as usize) * side(self.band) + (xi[1] + b) as usize)
    }

    #[inline]
    fn wave(&self, idx: usize) -> [i64; 2] {
        let s = side(self.band);
        let b = self.band as i64;
        [(idx / s) as i64 - b, (idx % s) as i64 - b]
    }

    pub fn coeff(&self, comp: usize, xi: [i64; 2]) -> Complex64 {
        self.index(xi).map_or(ZERO, |i| self.comps[comp][i])
    }

    /// Panics when `xi` lies outside the stored band.
    pub fn set_coeff(&mut self, comp: usize, xi: [i64; 2], value: Complex64) {
        let i = self.index(xi).unwrap_or_else(|| panic!("wave vector {xi:?} outside band {}", self.band));
        self.comps[comp][i] = value;
        self.real = false;
    }

    /// All stored wave vectors, in storage order.
    pub fn waves(&self) -> impl Iterator<Item = [i64; 2]> + '_ {
        (0..side(self.band) * side(self.band)).map(move |i| self.wave(i))
    }

    /// Extract one stored component as a scalar field.
    pub fn component(&self, comp: usize) -> SpectralField {
        SpectralField {
            grid: self.grid,
            rank: Rank::Scalar,
            band: self.band,
            comps: vec![self.comps[comp].clone()],
            real: self.real,
        }
    }

    /// Assemble a field of `rank` from scalar components.
    pub fn from_components(rank: Rank, parts: &[SpectralField]) -> Result<Self> {
        if parts.len() != rank.components() {
            return Err(CiError::InvalidInput(format!(
                "{} needs {} components, got {}",
                rank.name(),
                rank.components(),
                parts.len()
            )));
        }
        let grid = parts[0].grid;
        let band = parts.iter().map(|p| p.band).max().unwrap_or(0);
        let mut comps = Vec::with_capacity(parts.len());
        for p in parts {
            p.require_rank(Rank::Scalar)?;
            if p.grid != grid {
                return Err(CiError::GridMismatch("components on different grids".into()));
            }
            comps.push(p.resized(band).comps.swap_remove(0));
        }
        Ok(SpectralField { grid, rank, band, comps, real: parts.iter().all(|p| p.real) })
    }

    pub fn require_rank(&self, rank: Rank) -> Result<()> {
        if self.rank != rank {
            return Err(CiError::Rank { expected: rank.name(), found: self.rank.name() });
        }
        Ok(())
    }

    /// Copy onto a different band; growing zero-pads, shrinking drops modes.
    fn resized(&self, band: usize) -> SpectralField {
        if band == self.band {
            return self.clone();
        }
        let mut out = SpectralField {
            grid: self.grid,
            rank: self.rank,
            band,
            comps: vec![vec![ZERO; side(band) * side(band)]; self.rank.components()],
            real: self.real,
        };
        let b = band.min(self.band) as i64;
        for c in 0..self.comps.len() {
            for x in -b..=b {
                for y in -b..=b {
                    let src = self.index([x, y]).expect("inside band");
                    let dst = out.index([x, y]).expect("inside band");
                    out.comps[c][dst] = self.comps[c][src];
                }
            }
        }
        out
    }

    /// Zero-pad to a larger band.
    pub fn widened(&self, band: usize) -> Result<SpectralField> {
        if band < self.band {
            return Err(CiError::InvalidInput(format!("cannot widen band {} to {band}", self.band)));
        }
        self.grid.check_band(band, "widen")?;
        Ok(self.resized(band))
    }

    /// Shrink the band to the smallest one containing every nonzero coefficient.
    pub fn trimmed(&self) -> SpectralField {
        let mut needed = 0usize;
        for comp in &self.comps {
            for (i, c) in comp.iter().enumerate() {
                if *c != ZERO {
                    let xi = self.wave(i);
                    needed = needed.max(xi[0].unsigned_abs().max(xi[1].unsigned_abs()) as usize);
                }
            }
        }
        self.resized(needed)
    }

    /// Apply a per-mode map `(xi, comp, c) -> c'` keeping rank and band.
    pub fn map_modes<F>(&self, f: F) -> SpectralField
    where
        F: Fn([i64; 2], usize, Complex64) -> Complex64,
    {
        let mut out = self.clone();
        for (c, comp) in out.comps.iter_mut().enumerate() {
            for (i, v) in comp.iter_mut().enumerate() {
                let s = side(self.band);
                let b = self.band as i64;
                let xi = [(i / s) as i64 - b, (i % s) as i64 - b];
                *v = f(xi, c, *v);
            }
        }
        out
    }

    /// Apply a real even Fourier multiplier `m(xi)` to every component.
    /// Even real multipliers preserve realness.
    pub fn multiplier<F: Fn([i64; 2]) -> f64>(&self, m: F) -> SpectralField {
        self.map_modes(|xi, _, c| c * m(xi))
    }

    fn check_compatible(&self, other: &SpectralField) -> Result<()> {
        if self.grid != other.grid {
            return Err(CiError::GridMismatch(format!("n = {} vs n = {}", self.grid.n, other.grid.n)));
        }
        if self.rank != other.rank {
            return Err(CiError::Rank { expected: self.rank.name(), found: other.rank.name() });
        }
        Ok(())
    }

    /// `self + alpha * other`.
    pub fn axpy(&self, alpha: Complex64, other: &SpectralField) -> Result<SpectralField> {
        self.check_compatible(other)?;
        let band = self.band.max(other.band);
        let mut out = self.resized(band);
        let o = other.resized(band);
        for (a, b) in out.comps.iter_mut().zip(&o.comps) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += alpha * y;
            }
        }
        out.real = self.real && other.real && alpha.im == 0.0;
        Ok(out)
    }

    pub fn add(&self, other: &SpectralField) -> Result<SpectralField> {
        self.axpy(Complex64::new(1.0, 0.0), other)
    }

    pub fn sub(&self, other: &SpectralField) -> Result<SpectralField> {
        self.axpy(Complex64::new(-1.0, 0.0), other)
    }

    pub fn scale(&self, alpha: f64) -> SpectralField {
        let mut out = self.clone();
        for comp in out.comps.iter_mut() {
            for c in comp.iter_mut() {
                *c *= alpha;
            }
        }
        out
    }

    pub fn scale_complex(&self, alpha: Complex64) -> SpectralField {
        let mut out = self.clone();
        for comp in out.comps.iter_mut() {
            for c in comp.iter_mut() {
                *c *= alpha;
            }
        }
        out.real = self.real && alpha.im == 0.0;
        out
    }

    /// Sum of fields of identical rank.
    pub fn sum<'a, I: IntoIterator<Item = &'a SpectralField>>(fields: I) -> Result<SpectralField> {
        let mut iter = fields.into_iter();
        let first = iter.next().ok_or_else(|| CiError::InvalidInput("empty sum".into()))?.clone();
        iter.try_fold(first, |acc, f| acc.add(f))
    }

    /// Multiply by `exp(i xi0.x)`: a pure shift in coefficient space.
    pub fn shift(&self, xi0: [i64; 2]) -> Result<SpectralField> {
        let extra = xi0[0].unsigned_abs().max(xi0[1].unsigned_abs()) as usize;
        let band = self.band + extra;
        self.grid.check_band(band, "mode shift")?;
        let mut out = SpectralField {
            grid: self.grid,
            rank: self.rank,
            band,
            comps: vec![vec![ZERO; side(band) * side(band)]; self.rank.components()],
            real: xi0 == [0, 0] && self.real,
        };
        for c in 0..self.comps.len() {
            for (i, v) in self.comps[c].iter().enumerate() {
                let xi = self.wave(i);
                let dst = out.index([xi[0] + xi0[0], xi[1] + xi0[1]]).expect("inside shifted band");
                out.comps[c][dst] = *v;
            }
        }
        Ok(out)
    }

    /// Relative size of the anti-conjugate-symmetric part of the coefficients.
    pub fn realness_defect(&self) -> f64 {
        let mut scale = 0.0f64;
        let mut defect = 0.0f64;
        for comp in &self.comps {
            for (i, c) in comp.iter().enumerate() {
                let xi = self.wave(i);
                let mirror = comp[self.index([-xi[0], -xi[1]]).expect("band is symmetric")];
                defect = defect.max((c - mirror.conj()).norm());
                scale = scale.max(c.norm());
            }
        }
        if scale == 0.0 {
            0.0
        } else {
            defect / scale
        }
    }

    /// Project onto conjugate-symmetric coefficients and mark as real.
    pub fn into_real(mut self) -> SpectralField {
        for c in 0..self.comps.len() {
            let orig = self.comps[c].clone();
            for (i, v) in self.comps[c].iter_mut().enumerate() {
                let s = side(self.band);
                let b = self.band as i64;
                let xi = [(i / s) as i64 - b, (i % s) as i64 - b];
                let j = ((-xi[0] + b) as usize) * s + (-xi[1] + b) as usize;
                *v = 0.5 * (orig[i] + orig[j].conj());
            }
        }
        self.real = true;
        self
    }

    /// Coefficient at `xi = 0` for each component.
    pub fn mean(&self) -> Vec<Complex64> {
        (0..self.comps.len()).map(|c| self.coeff(c, [0, 0])).collect()
    }

    /// Values at the nodes of an `m x m` grid, one buffer per component.
    ///
    /// For `m <= 2 band` the coefficients are folded modulo `m`, which still
    /// gives the exact nodal values.
    pub fn synthesize_on(&self, m: usize) -> Vec<Vec<Complex64>> {
        self.comps
            .iter()
            .map(|comp| {
                let mut buf = vec![ZERO; m * m];
                for (i, c) in comp.iter().enumerate() {
                    if *c == ZERO {
                        continue;
                    }
                    let xi = self.wave(i);
                    buf[fft::wrap(xi[0], m) * m + fft::wrap(xi[1], m)] += c;
                }
                fft::inverse(&mut buf, m);
                buf
            })
            .collect()
    }

    /// Values at the owning grid's nodes.
    pub fn synthesize(&self) -> Vec<Vec<Complex64>> {
        self.synthesize_on(self.grid.n)
    }

    /// Real parts of the nodal values.
    pub fn synthesize_real(&self) -> Vec<Vec<f64>> {
        self.synthesize().into_iter().map(|c| c.into_iter().map(|z| z.re).collect()).collect()
    }

    /// Fourier coefficients from values on an `m x m` grid, kept up to `band`.
    /// Requires `band < m / 2` for even `m` and `band <= (m - 1) / 2` for odd `m`.
    pub fn analyze_on(grid: Grid2, rank: Rank, m: usize, values: Vec<Vec<Complex64>>, band: usize) -> Result<Self> {
        if values.len() != rank.components() {
            return Err(CiError::InvalidInput("component count does not match rank".into()));
        }
        if 2 * band + 1 > m {
            return Err(CiError::AliasingRisk(format!("band {band} not resolved by {m} samples")));
        }
        let mut out = Self::zeros(grid, rank, band)?;
        let norm = 1.0 / (m * m) as f64;
        let b = band as i64;
        for (c, mut buf) in values.into_iter().enumerate() {
            if buf.len() != m * m {
                return Err(CiError::InvalidInput(format!("expected {} samples, got {}", m * m, buf.len())));
            }
            fft::forward(&mut buf, m);
            for x in -b..=b {
                for y in -b..=b {
                    let dst = out.index([x, y]).expect("inside band");
                    out.comps[c][dst] = buf[fft::wrap(x, m) * m + fft::wrap(y, m)] * norm;
                }
            }
        }
        out.real = false;
        Ok(out)
    }

    /// Fourier coefficients from values on the grid's own nodes. The Nyquist
    /// row and column are discarded.
    pub fn analyze(grid: Grid2, rank: Rank, values: Vec<Vec<Complex64>>) -> Result<Self> {
        Self::analyze_on(grid, rank, grid.n, values, grid.max_band())
    }

    /// Like [`analyze`](Self::analyze) for real samples; the result is marked real.
    pub fn analyze_real(grid: Grid2, rank: Rank, values: &[Vec<f64>]) -> Result<Self> {
        let cvals = values.iter().map(|v| v.iter().map(|x| Complex64::new(*x, 0.0)).collect()).collect();
        Ok(Self::analyze(grid, rank, cvals)?.into_real())
    }

    /// Spectral derivative `d1^a d2^b`.
    pub fn derive(&self, a: u32, b: u32) -> SpectralField {
        let i = Complex64::new(0.0, 1.0);
        let mut out = self.map_modes(|xi, _, c| c * (i * xi[0] as f64).powu(a) * (i * xi[1] as f64).powu(b));
        out.real = self.real;
        out
    }

    /// Gradient of a scalar field.
    pub fn gradient(&self) -> Result<SpectralField> {
        self.require_rank(Rank::Scalar)?;
        SpectralField::from_components(Rank::Vector, &[self.derive(1, 0), self.derive(0, 1)])
    }

    /// `(-d2 f, d1 f)` of a scalar field.
    pub fn perp_grad(&self) -> Result<SpectralField> {
        self.require_rank(Rank::Scalar)?;
        SpectralField::from_components(Rank::Vector, &[self.derive(0, 1).scale(-1.0), self.derive(1, 0)])
    }

    /// Row-wise divergence of a vector, symmetric trace-free or matrix field.
    pub fn divergence(&self) -> Result<SpectralField> {
        let c = |k: usize| self.component(k);
        match self.rank {
            Rank::Scalar => Err(CiError::Rank { expected: "vector or tensor", found: "scalar" }),
            Rank::Vector => c(0).derive(1, 0).add(&c(1).derive(0, 1)),
            Rank::SymTensor => {
                let first = c(0).derive(1, 0).add(&c(1).derive(0, 1))?;
                let second = c(1).derive(1, 0).sub(&c(0).derive(0, 1))?;
                SpectralField::from_components(Rank::Vector, &[first, second])
            }
            Rank::Matrix => {
                let first = c(0).derive(1, 0).add(&c(1).derive(0, 1))?;
                let second = c(2).derive(1, 0).add(&c(3).derive(0, 1))?;
                SpectralField::from_components(Rank::Vector, &[first, second])
            }
        }
    }

    /// Full 2x2 matrix view of a symmetric trace-free field.
    pub fn to_matrix(&self) -> Result<SpectralField> {
        self.require_rank(Rank::SymTensor)?;
        let r11 = self.component(0);
        let r12 = self.component(1);
        SpectralField::from_components(Rank::Matrix, &[r11.clone(), r12.clone(), r12, r11.scale(-1.0)])
    }

    /// Bilinear pointwise product. `kernel(a, b, out)` receives the component
    /// values of both operands at one node and must be bilinear in them.
    pub fn bilinear<F>(&self, other: &SpectralField, out_rank: Rank, kernel: F) -> Result<SpectralField>
    where
        F: Fn(&[Complex64], &[Complex64], &mut [Complex64]),
    {
        if self.grid != other.grid {
            return Err(CiError::GridMismatch("product operands on different grids".into()));
        }
        let band = self.band + other.band;
        self.grid.check_band(band, "pointwise product")?;
        let m = smallest_fft_size(band);
        let av = self.synthesize_on(m);
        let bv = if std::ptr::eq(self, other) { av.clone() } else { other.synthesize_on(m) };
        let nout = out_rank.components();
        let mut outv = vec![vec![ZERO; m * m]; nout];
        let mut a = vec![ZERO; av.len()];
        let mut b = vec![ZERO; bv.len()];
        let mut o = vec![ZERO; nout];
        for p in 0..m * m {
            for (k, comp) in av.iter().enumerate() {
                a[k] = comp[p];
            }
            for (k, comp) in bv.iter().enumerate() {
                b[k] = comp[p];
            }
            kernel(&a, &b, &mut o);
            for (k, comp) in outv.iter_mut().enumerate() {
                comp[p] = o[k];
            }
        }
        let mut out = SpectralField::analyze_on(self.grid, out_rank, m, outv, band)?;
        out.real = self.real && other.real;
        Ok(out)
    }

    /// Product of a scalar field with a field of any rank.
    pub fn mul(&self, other: &SpectralField) -> Result<SpectralField> {
        self.require_rank(Rank::Scalar)?;
        other.bilinear(self, other.rank, |b, a, out| {
            for (o, v) in out.iter_mut().zip(b) {
                *o = a[0] * v;
            }
        })
    }

    /// Pointwise dot product of two vector fields (no conjugation).
    pub fn dot(&self, other: &SpectralField) -> Result<SpectralField> {
        self.require_rank(Rank::Vector)?;
        other.require_rank(Rank::Vector)?;
        self.bilinear(other, Rank::Scalar, |a, b, out| out[0] = a[0] * b[0] + a[1] * b[1])
    }

    /// Pointwise `|f|^2 = f . f` for a real vector field.
    pub fn square_norm(&self) -> Result<SpectralField> {
        self.dot(self)
    }

    /// Pointwise multiplication of a scalar field by a constant vector.
    pub fn times_vector(&self, v: [f64; 2]) -> Result<SpectralField> {
        self.require_rank(Rank::Scalar)?;
        SpectralField::from_components(Rank::Vector, &[self.scale(v[0]), self.scale(v[1])])
    }

    /// `L^p` norm by grid quadrature for `1 < p < inf`; `p = inf` gives the grid sup.
    pub fn lp_norm(&self, p: f64) -> Result<f64> {
        if p.is_nan() || p <= 1.0 {
            return Err(CiError::Config(format!("L^p exponent must exceed 1, got {p}")));
        }
        Ok(lp_of_magnitude(&self.magnitude(), p, self.grid))
    }

    /// `L^1` norm by grid quadrature. Kept separate from [`lp_norm`](Self::lp_norm),
    /// which is restricted to `p > 1`.
    pub fn l1_norm(&self) -> f64 {
        let mag = self.magnitude();
        mag.iter().sum::<f64>() * self.grid.cell_area()
    }

    /// `L^2` norm from the coefficients (Parseval).
    pub fn l2_from_coeffs(&self) -> f64 {
        let w = self.rank.norm_weights();
        let s: f64 = self.comps.iter().zip(w).map(|(c, w)| w * c.iter().map(|z| z.norm_sqr()).sum::<f64>()).sum();
        2.0 * PI * s.sqrt()
    }

    /// Grid sup of the pointwise Frobenius norm.
    pub fn sup_norm(&self) -> f64 {
        self.magnitude().into_iter().fold(0.0, f64::max)
    }

    /// `max_{j <= order} sup_x |grad^j f(x)|` with the Frobenius norm over all
    /// ordered derivative indices, evaluated at the grid nodes.
    pub fn cn_norm(&self, order: u32) -> f64 {
        let w = self.rank.norm_weights();
        let mut best = 0.0f64;
        for j in 0..=order {
            let mut acc = vec![0.0f64; self.grid.num_nodes()];
            for a in 0..=j {
                let mult = binomial(j, a) as f64;
                let d = self.derive(a, j - a);
                for (comp, wc) in d.synthesize().iter().zip(w) {
                    for (s, v) in acc.iter_mut().zip(comp) {
                        *s += mult * wc * v.norm_sqr();
                    }
                }
            }
            best = best.max(acc.into_iter().fold(0.0, f64::max).sqrt());
        }
        best
    }

    /// Pointwise Frobenius magnitude at the grid nodes.
    pub fn magnitude(&self) -> Vec<f64> {
        let w = self.rank.norm_weights();
        let mut acc = vec![0.0f64; self.grid.num_nodes()];
        for (comp, wc) in self.synthesize().iter().zip(w) {
            for (s, v) in acc.iter_mut().zip(comp) {
                *s += wc * v.norm_sqr();
            }
        }
        acc.into_iter().map(f64::sqrt).collect()
    }

    /// Largest coefficient modulus over all components.
    pub fn max_coeff(&self) -> f64 {
        self.comps.iter().flatten().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Coefficient energy `sum |c|^2` (weighted like the Frobenius norm)
    /// restricted to modes accepted by `keep`.
    pub fn energy_where<F: Fn([i64; 2]) -> bool>(&self, keep: F) -> f64 {
        let w = self.rank.norm_weights();
        let mut e = 0.0;
        for (comp, wc) in self.comps.iter().zip(w) {
            for (i, c) in comp.iter().enumerate() {
                if keep(self.wave(i)) {
                    e += wc * c.norm_sqr();
                }
            }
        }
        e
    }
}

fn lp_of_magnitude(mag: &[f64], p: f64, grid: Grid2) -> f64 {
    if p.is_infinite() {
        return mag.iter().copied().fold(0.0, f64::max);
    }
    let s: f64 = mag.iter().map(|m| m.powf(p)).sum();
    (s * grid.cell_area()).powf(1.0 / p)
}

fn binomial(n: u32, k: u32) -> u64 {
    (0..k).fold(1u64, |acc, i| acc * (n - i) as u64 / (i + 1) as u64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cos_x1(grid: Grid2) -> SpectralField {
        let mut f = SpectralField::zeros(grid, Rank::Scalar, 1).unwrap();
        f.set_coeff(0, [1, 0], Complex64::new(0.5, 0.0));
        f.set_coeff(0, [-1, 0], Complex64::new(0.5, 0.0));
        f.assume_real()
    }

    #[test]
    fn grid_validation() {
        let g = Grid2::new(8).unwrap();
        assert_eq!(g.num_nodes(), 64);
        assert!((g.node(1) - 2.0 * PI / 8.0).abs() < 1e-15);
        assert!(matches!(Grid2::new(6), Err(CiError::Config(_))));
        assert!(Grid2::new(2).is_err());
        assert_eq!(Grid2::new(512).unwrap().num_nodes(), 262_144);
    }

    #[test]
    fn single_mode_synthesizes_cosine() {
        let g = Grid2::new(16).unwrap();
        let v = cos_x1(g).synthesize();
        for j1 in 0..16 {
            for j2 in 0..16 {
                let z = v[0][j1 * 16 + j2];
                assert!((z.re - g.node(j1).cos()).abs() < 1e-14);
                assert!(z.im.abs() < 1e-14);
            }
        }
    }

    #[test]
    fn parseval_on_cosine() {
        let g = Grid2::new(32).unwrap();
        let f = cos_x1(g);
        // int cos^2 over the torus is 2 pi^2
        let expected = (2.0 * PI * PI).sqrt();
        assert!((f.lp_norm(2.0).unwrap() - expected).abs() < 1e-12);
        assert!((f.l2_from_coeffs() - 2.0 * PI * 0.5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn round_trip_random_field() {
        let g = Grid2::new(32).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let f = SpectralField::random(g, Rank::Vector, 15, false, &mut rng).unwrap();
        let back = SpectralField::analyze(g, Rank::Vector, f.synthesize()).unwrap();
        let err = back.sub(&f).unwrap().max_coeff();
        assert!(err < 1e-12 * f.max_coeff(), "{err}");
    }

    #[test]
    fn derivative_rules() {
        let g = Grid2::new(16).unwrap();
        let f = SpectralField::mode(g, Rank::Scalar, [3, 0], &[Complex64::new(1.0, 0.0)]).unwrap();
        assert_eq!(f.derive(1, 0).coeff(0, [3, 0]), Complex64::new(0.0, 3.0));
        let c = SpectralField::constant(g, 2.5);
        assert_eq!(c.derive(1, 0).max_coeff(), 0.0);
        let mut cos2 = SpectralField::zeros(g, Rank::Scalar, 1).unwrap();
        cos2.set_coeff(0, [0, 1], Complex64::new(0.5, 0.0));
        cos2.set_coeff(0, [0, -1], Complex64::new(0.5, 0.0));
        let d = cos2.derive(0, 2).add(&cos2).unwrap();
        assert!(d.max_coeff() < 1e-15);
    }

    #[test]
    fn perp_grad_of_sine() {
        let g = Grid2::new(16).unwrap();
        let mut s = SpectralField::zeros(g, Rank::Scalar, 1).unwrap();
        s.set_coeff(0, [1, 0], Complex64::new(0.0, -0.5));
        s.set_coeff(0, [-1, 0], Complex64::new(0.0, 0.5));
        let v = s.perp_grad().unwrap().synthesize_real();
        for j in 0..256 {
            let x1 = g.node(j / 16);
            assert!(v[0][j].abs() < 1e-14);
            assert!((v[1][j] - x1.cos()).abs() < 1e-14);
        }
        assert!(matches!(v_rank_err(&g), Err(CiError::Rank { .. })));
    }

    fn v_rank_err(g: &Grid2) -> Result<SpectralField> {
        SpectralField::zeros(*g, Rank::Vector, 1)?.perp_grad()
    }

    #[test]
    fn divergence_examples() {
        let g = Grid2::new(16).unwrap();
        let sin = |axis: usize| {
            let mut s = SpectralField::zeros(g, Rank::Scalar, 1).unwrap();
            let (p, m) = if axis == 0 { ([1, 0], [-1, 0]) } else { ([0, 1], [0, -1]) };
            s.set_coeff(0, p, Complex64::new(0.0, -0.5));
            s.set_coeff(0, m, Complex64::new(0.0, 0.5));
            s
        };
        let zero = SpectralField::zeros(g, Rank::Scalar, 1).unwrap();
        let v = SpectralField::from_components(Rank::Vector, &[sin(1), zero.clone()]).unwrap();
        assert!(v.divergence().unwrap().max_coeff() < 1e-15);
        let v = SpectralField::from_components(Rank::Vector, &[sin(0), zero.clone()]).unwrap();
        let d = v.divergence().unwrap();
        assert!((d.coeff(0, [1, 0]) - Complex64::new(0.5, 0.0)).norm() < 1e-15);
        // R11 = cos x1, R12 = 0: div = (-sin x1, 0)
        let r = SpectralField::from_components(Rank::SymTensor, &[cos_x1(g), zero]).unwrap();
        let d = r.divergence().unwrap();
        let vals = d.synthesize_real();
        for j in 0..256 {
            assert!((vals[0][j] + g.node(j / 16).sin()).abs() < 1e-14);
            assert!(vals[1][j].abs() < 1e-14);
        }
        assert!(d.mean().iter().all(|m| m.norm() < 1e-15));
        assert!(SpectralField::constant(g, 1.0).divergence().is_err());
    }

    #[test]
    fn norms_of_simple_fields() {
        let g = Grid2::new(64).unwrap();
        let one = SpectralField::constant(g, 1.0);
        assert!((one.lp_norm(2.0).unwrap() - 2.0 * PI).abs() < 1e-12);
        assert!(one.lp_norm(1.0).is_err());
        assert!((cos_x1(g).cn_norm(1) - 1.0).abs() < 1e-3);
        assert!((cos_x1(g).lp_norm(f64::INFINITY).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn product_band_guard() {
        let g = Grid2::new(16).unwrap();
        let f = SpectralField::zeros(g, Rank::Scalar, 4).unwrap();
        let h = SpectralField::zeros(g, Rank::Scalar, 3).unwrap();
        assert!(f.mul(&h).is_ok());
        let big = SpectralField::zeros(g, Rank::Scalar, 5).unwrap();
        assert!(matches!(f.mul(&big), Err(CiError::AliasingRisk(_))));
    }

    #[test]
    fn product_is_exact_below_nyquist() {
        let g = Grid2::new(32).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = SpectralField::random(g, Rank::Scalar, 6, true, &mut rng).unwrap();
        let b = SpectralField::random(g, Rank::Scalar, 7, true, &mut rng).unwrap();
        let prod = a.mul(&b).unwrap();
        // direct convolution at a few modes
        for xi in [[0i64, 0i64], [5, -3], [13, 13], [-12, 1]] {
            let mut direct = Complex64::new(0.0, 0.0);
            for eta in a.waves() {
                direct += a.coeff(0, eta) * b.coeff(0, [xi[0] - eta[0], xi[1] - eta[1]]);
            }
            assert!((prod.coeff(0, xi) - direct).norm() < 1e-13);
        }
    }

    #[test]
    fn folded_synthesis_matches_nodes() {
        let g = Grid2::new(32).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let f = SpectralField::random(g, Rank::Scalar, 10, true, &mut rng).unwrap();
        let fine = f.synthesize_on(32);
        let coarse = f.synthesize_on(8);
        for j1 in 0..8 {
            for j2 in 0..8 {
                let z = fine[0][(4 * j1) * 32 + 4 * j2] - coarse[0][j1 * 8 + j2];
                assert!(z.norm() < 1e-12);
            }
        }
    }

    #[test]
    fn symtensor_reconstruction_is_tracefree() {
        let g = Grid2::new(16).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let r = SpectralField::random(g, Rank::SymTensor, 3, true, &mut rng).unwrap();
        let m = r.to_matrix().unwrap();
        assert_eq!(m.component(1).coeffs(0), m.component(2).coeffs(0));
        let tr = m.component(0).add(&m.component(3)).unwrap();
        assert_eq!(tr.max_coeff(), 0.0);
    }
}
