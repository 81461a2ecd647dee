//! Python bindings: spectral fields, the operator calculus, building blocks,
//! the geometric decomposition, the parameter gate and the four commands.

use std::path::PathBuf;

use num_complex::Complex64;
use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;

use ci2d_core::blocks::{self, Direction, WaveParams};
use ci2d_core::calculus::{self, FreqBand};
use ci2d_core::cli::{self, RunConfig};
use ci2d_core::geometry::{self, StressMatrix};
use ci2d_core::schedule;
use ci2d_core::{CiError, Grid2, Rank, SpectralField};

create_exception!(ci2d, Ci2dError, PyException, "Error raised by the ci2d toolkit; `args[1]` is the CLI exit code.");

fn err(e: CiError) -> PyErr {
    Ci2dError::new_err((e.to_string(), e.exit_code()))
}

trait OrPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> OrPy<T> for ci2d_core::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(err)
    }
}

fn parse_rank(name: &str) -> PyResult<Rank> {
    match name {
        "scalar" => Ok(Rank::Scalar),
        "vector" => Ok(Rank::Vector),
        "symtensor" => Ok(Rank::SymTensor),
        "matrix" => Ok(Rank::Matrix),
        other => Err(err(CiError::InvalidInput(format!("unknown rank {other:?}")))),
    }
}

fn direction(k: (i64, i64)) -> PyResult<Direction> {
    Direction::from_five([k.0, k.1]).py()
}

/// Band-limited trigonometric polynomial on the torus `[0, 2 pi)^2`.
#[pyclass(name = "Field", module = "ci2d", skip_from_py_object)]
#[derive(Clone)]
struct PyField {
    inner: SpectralField,
}

fn wrap(inner: SpectralField) -> PyField {
    PyField { inner }
}

#[pymethods]
impl PyField {
    /// Zero field of the given rank and band on an `n x n` grid.
    #[staticmethod]
    fn zeros(n: usize, rank: &str, band: usize) -> PyResult<Self> {
        Ok(wrap(SpectralField::zeros(Grid2::new(n).py()?, parse_rank(rank)?, band).py()?.assume_real()))
    }

    /// Real field from nodal values, one `n*n` row-major list per component.
    #[staticmethod]
    fn from_values(n: usize, rank: &str, values: Vec<Vec<f64>>) -> PyResult<Self> {
        Ok(wrap(SpectralField::analyze_real(Grid2::new(n).py()?, parse_rank(rank)?, &values).py()?))
    }

    /// Real random field with uniform coefficients up to `band`.
    #[staticmethod]
    fn random(n: usize, rank: &str, band: usize, seed: u64) -> PyResult<Self> {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        Ok(wrap(SpectralField::random(Grid2::new(n).py()?, parse_rank(rank)?, band, true, &mut rng).py()?))
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.grid().n()
    }

    #[getter]
    fn rank(&self) -> &'static str {
        self.inner.rank().name()
    }

    #[getter]
    fn band(&self) -> usize {
        self.inner.band()
    }

    /// Coefficient of component `comp` at wave vector `xi`.
    fn coeff(&self, comp: usize, xi: (i64, i64)) -> Complex64 {
        self.inner.coeff(comp, [xi.0, xi.1])
    }

    fn set_coeff(&mut self, comp: usize, xi: (i64, i64), value: Complex64) {
        self.inner.set_coeff(comp, [xi.0, xi.1], value);
    }

    /// Real parts of the nodal values, one row-major list per component.
    fn values(&self) -> Vec<Vec<f64>> {
        self.inner.synthesize_real()
    }

    fn mean(&self) -> Vec<Complex64> {
        self.inner.mean()
    }

    fn l2_norm(&self) -> f64 {
        self.inner.l2_from_coeffs()
    }

    fn lp_norm(&self, p: f64) -> PyResult<f64> {
        if p == 1.0 {
            Ok(self.inner.l1_norm())
        } else {
            self.inner.lp_norm(p).py()
        }
    }

    fn sup_norm(&self) -> f64 {
        self.inner.sup_norm()
    }

    fn cn_norm(&self, order: u32) -> f64 {
        self.inner.cn_norm(order)
    }

    fn __add__(&self, other: &PyField) -> PyResult<Self> {
        Ok(wrap(self.inner.add(&other.inner).py()?))
    }

    fn __sub__(&self, other: &PyField) -> PyResult<Self> {
        Ok(wrap(self.inner.sub(&other.inner).py()?))
    }

    fn __mul__(&self, alpha: f64) -> Self {
        wrap(self.inner.scale(alpha))
    }

    fn __rmul__(&self, alpha: f64) -> Self {
        wrap(self.inner.scale(alpha))
    }

    /// Pointwise product of two scalar fields.
    fn product(&self, other: &PyField) -> PyResult<Self> {
        Ok(wrap(self.inner.mul(&other.inner).py()?))
    }

    fn derive(&self, a: u32, b: u32) -> Self {
        wrap(self.inner.derive(a, b))
    }

    fn gradient(&self) -> PyResult<Self> {
        Ok(wrap(self.inner.gradient().py()?))
    }

    fn perp_grad(&self) -> PyResult<Self> {
        Ok(wrap(self.inner.perp_grad().py()?))
    }

    fn divergence(&self) -> PyResult<Self> {
        Ok(wrap(self.inner.divergence().py()?))
    }

    /// Leray projection onto divergence-free fields.
    fn helmholtz(&self) -> PyResult<Self> {
        Ok(wrap(calculus::helmholtz(&self.inner).py()?))
    }

    /// `(-Delta)^theta`, `theta in [0, 1]`.
    fn frac_laplacian(&self, theta: f64) -> PyResult<Self> {
        Ok(wrap(calculus::frac_laplacian(&self.inner, theta).py()?))
    }

    /// `|grad|^{-1}` on nonzero modes.
    fn inv_grad(&self) -> Self {
        wrap(calculus::inv_grad(&self.inner))
    }

    /// Sharp projection onto `lo <= |xi| <= hi`.
    #[pyo3(signature = (lo, hi=None))]
    fn project(&self, lo: f64, hi: Option<f64>) -> PyResult<Self> {
        let band = match hi {
            Some(hi) => FreqBand::closed(lo, hi).py()?,
            None => FreqBand::AtLeast(lo),
        };
        Ok(wrap(calculus::project(&self.inner, band)))
    }

    /// Symmetric trace-free anti-divergence of a vector field.
    fn anti_divergence(&self) -> PyResult<Self> {
        Ok(wrap(calculus::anti_div(&self.inner).py()?))
    }

    /// `f (x) g` trace-free, symmetrized.
    fn tracefree_sym(&self, other: &PyField) -> PyResult<Self> {
        Ok(wrap(calculus::tracefree_sym(&self.inner, &other.inner).py()?))
    }

    fn tracefree_square(&self) -> PyResult<Self> {
        Ok(wrap(calculus::tracefree_square(&self.inner).py()?))
    }

    /// Write a CI2D field dump.
    #[pyo3(signature = (path, time=0.0, units="1"))]
    fn save(&self, path: PathBuf, time: f64, units: &str) -> PyResult<()> {
        ci2d_core::io::save_field(&path, &self.inner, time, units).py()
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(wrap(ci2d_core::io::load_field(&path).py()?.0))
    }

    fn __repr__(&self) -> String {
        format!("Field(n={}, rank={}, band={})", self.inner.grid().n(), self.inner.rank().name(), self.inner.band())
    }
}

/// Wave parameters `(lambda, 1/sigma, r, mu)` of the building blocks.
#[pyclass(name = "WaveParams", module = "ci2d", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyWaveParams {
    inner: WaveParams,
}

#[pymethods]
impl PyWaveParams {
    #[new]
    fn new(lam: u64, sigma_inv: u64, r: u64, mu: u64) -> PyResult<Self> {
        Ok(PyWaveParams { inner: WaveParams::new(lam, sigma_inv, r, mu).py()? })
    }

    #[getter]
    fn lambda_sigma(&self) -> u64 {
        self.inner.lambda_sigma()
    }

    #[getter]
    fn flow_band(&self) -> usize {
        self.inner.flow_band()
    }

    fn warnings(&self) -> Vec<String> {
        self.inner.warnings()
    }
}

/// The eight directions as `5k`.
#[pyfunction]
fn directions() -> Vec<(i64, i64)> {
    blocks::directions().into_iter().map(|k| (k.five_k()[0], k.five_k()[1])).collect()
}

/// `[(5k, gamma_k^2)]` with `sum gamma_k^2 (k (x) k) = R` for `R = [[r11, r12], [r12, -r11]]`.
#[pyfunction]
fn decompose(r11: f64, r12: f64) -> Vec<((i64, i64), f64)> {
    geometry::decompose(StressMatrix::new(r11, r12)).into_iter().map(|(k, g)| ((k.five_k()[0], k.five_k()[1]), g)).collect()
}

/// Normalized Dirichlet kernel `D_r`.
#[pyfunction]
fn dirichlet_kernel(n: usize, r: usize) -> PyResult<PyField> {
    Ok(wrap(blocks::dirichlet_kernel(Grid2::new(n).py()?, r).py()?))
}

/// `(eta_k, d_t eta_k)` at time `t`; `k` given as `5k`.
#[pyfunction]
fn eta(n: usize, k: (i64, i64), params: &PyWaveParams, t: f64) -> PyResult<(PyField, PyField)> {
    let e = blocks::eta(Grid2::new(n).py()?, direction(k)?, &params.inner, t).py()?;
    Ok((wrap(e.value), wrap(e.dt)))
}

/// `(w_k, d_t w_k)` at time `t`; `k` given as `5k`.
#[pyfunction]
fn intermittent_flow(n: usize, k: (i64, i64), params: &PyWaveParams, t: f64) -> PyResult<(PyField, PyField)> {
    let f = blocks::intermittent_flow(Grid2::new(n).py()?, direction(k)?, &params.inner, t).py()?;
    Ok((wrap(f.value), wrap(f.dt)))
}

/// Validate a paper-mode schedule given as strings (`A`, `alpha`, `beta`
/// rationals); returns the constraint margins or raises on the first violation.
#[pyfunction]
#[pyo3(signature = (theta, a, b, alpha, beta, q=0))]
fn validate_schedule(theta: f64, a: &str, b: u64, alpha: &str, beta: &str, q: u32) -> PyResult<Vec<(String, bool, String)>> {
    let cfg = cli::config::PaperConfig { a: a.into(), b, alpha: alpha.into(), beta: beta.into(), q, ell_exponent: None };
    let report = schedule::validate_schedule(&cfg.schedule(theta).py()?).py()?;
    Ok(report.constraints.iter().map(|c| (c.label.clone(), c.holds, c.detail.clone())).collect())
}

fn load_config(path: PathBuf) -> PyResult<RunConfig> {
    RunConfig::load(&path).py()
}

/// Run the property suite of a configuration; returns the JSON report.
#[pyfunction]
fn check(config: PathBuf) -> PyResult<String> {
    let report = cli::cmd_check(&load_config(config)?).py()?;
    serde_json::to_string(&report).map_err(|e| err(e.into()))
}

/// Write the initial state of a configuration to `out`.
#[pyfunction]
fn init(config: PathBuf, out: PathBuf) -> PyResult<()> {
    cli::cmd_init(&load_config(config)?, &out).py().map(|_| ())
}

/// One step from `state` into `out`; returns the diagnostics CSV.
#[pyfunction]
fn step(config: PathBuf, state: PathBuf, out: PathBuf) -> PyResult<String> {
    Ok(cli::cmd_step(&load_config(config)?, &state, &out).py()?.diagnostics.to_csv())
}

/// Norms, residual and spectrum of a state directory, as JSON.
#[pyfunction]
fn diagnose(state: PathBuf) -> PyResult<String> {
    let report = cli::cmd_diagnose(&state, None).py()?;
    serde_json::to_string(&report).map_err(|e| err(e.into()))
}

#[pymodule]
fn ci2d(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("Ci2dError", m.py().get_type::<Ci2dError>())?;
    m.add_class::<PyField>()?;
    m.add_class::<PyWaveParams>()?;
    m.add_function(wrap_pyfunction!(directions, m)?)?;
    m.add_function(wrap_pyfunction!(decompose, m)?)?;
    m.add_function(wrap_pyfunction!(dirichlet_kernel, m)?)?;
    m.add_function(wrap_pyfunction!(eta, m)?)?;
    m.add_function(wrap_pyfunction!(intermittent_flow, m)?)?;
    m.add_function(wrap_pyfunction!(validate_schedule, m)?)?;
    m.add_function(wrap_pyfunction!(check, m)?)?;
    m.add_function(wrap_pyfunction!(init, m)?)?;
    m.add_function(wrap_pyfunction!(step, m)?)?;
    m.add_function(wrap_pyfunction!(diagnose, m)?)?;
    Ok(())
}
