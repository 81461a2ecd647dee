//! Gauss–Legendre rules, the standard bump, and its radial Fourier transform.

use std::f64::consts::PI;
use std::sync::OnceLock;

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Integrate `f` over `[a, b]` with `cells` panels of a 16-point rule.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, cells: usize) -> f64 {
    let (x, w) = rule16();
    let h = (b - a) / cells as f64;
    let mut s = 0.0;
    for c in 0..cells {
        let mid = a + (c as f64 + 0.5) * h;
        for (xi, wi) in x.iter().zip(w) {
            s += wi * f(mid + 0.5 * h * xi);
        }
    }
    0.5 * h * s
}

fn rule16() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(16))
}

/// Unnormalized bump `exp(-1 / (1 - s^2))` on `(-1, 1)`.
pub fn raw_bump(s: f64) -> f64 {
    if s.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - s * s)).exp()
    }
}

/// Mass of [`raw_bump`] on the line.
pub fn bump_mass_1d() -> f64 {
    static MASS: OnceLock<f64> = OnceLock::new();
    *MASS.get_or_init(|| integrate(raw_bump, -1.0, 1.0, 64))
}

/// Unit-mass even bump on the line, supported in `[-1, 1]`.
pub fn bump_1d(s: f64) -> f64 {
    raw_bump(s) / bump_mass_1d()
}

/// Bessel `J0(x) = (1/pi) int_0^pi cos(x sin t) dt`, evaluated with the
/// trapezoid rule (spectrally accurate for this periodic integrand).
pub fn bessel_j0(x: f64) -> f64 {
    let m = 64 + (x.abs() as usize) * 2;
    let h = PI / m as f64;
    // endpoint values cos(0) = 1 each carry weight 1/2
    let mut s = 1.0;
    for j in 1..m {
        s += (x * (j as f64 * h).sin()).cos();
    }
    s * h / PI
}

/// Fourier transform `hat phi(rho) = int phi(x) exp(-i xi.x) dx`, `|xi| = rho`,
/// of the radial unit-mass bump `phi(x) = c exp(-1/(1-|x|^2))` on the plane.
pub fn radial_bump_hat(rho: f64) -> f64 {
    // hat phi(rho) = 2 pi c int_0^1 raw(r) J0(rho r) r dr
    static MASS: OnceLock<f64> = OnceLock::new();
    let mass = *MASS.get_or_init(|| integrate(|r| raw_bump(r) * r, 0.0, 1.0, 32));
    if rho == 0.0 {
        return 1.0;
    }
    integrate(|r| raw_bump(r) * bessel_j0(rho * r) * r, 0.0, 1.0, 32) / mass
}
