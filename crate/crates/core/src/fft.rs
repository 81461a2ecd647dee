//! Square 2D FFTs on `m x m` row-major buffers.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};

type PlanKey = (usize, bool);

fn plans() -> &'static Mutex<HashMap<PlanKey, Arc<dyn Fft<f64>>>> {
    static PLANS: OnceLock<Mutex<HashMap<PlanKey, Arc<dyn Fft<f64>>>>> = OnceLock::new();
    PLANS.get_or_init(|| Mutex::new(HashMap::new()))
}

fn plan(m: usize, forward: bool) -> Arc<dyn Fft<f64>> {
    let mut cache = plans().lock().expect("fft plan cache poisoned");
    cache
        .entry((m, forward))
        .or_insert_with(|| {
            let dir = if forward { FftDirection::Forward } else { FftDirection::Inverse };
            FftPlanner::new().plan_fft(m, dir)
        })
        .clone()
}

fn transpose(data: &mut [Complex64], m: usize) {
    for i in 0..m {
        for j in (i + 1)..m {
            data.swap(i * m + j, j * m + i);
        }
    }
}

fn transform(data: &mut [Complex64], m: usize, forward: bool) {
    debug_assert_eq!(data.len(), m * m);
    let fft = plan(m, forward);
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    fft.process_with_scratch(data, &mut scratch);
    transpose(data, m);
    fft.process_with_scratch(data, &mut scratch);
    transpose(data, m);
}

/// Unnormalized forward transform: `F[k] = sum_j f[j] exp(-i 2 pi j.k / m)`.
pub fn forward(data: &mut [Complex64], m: usize) {
    transform(data, m, true);
}

/// Unnormalized inverse transform: `f[j] = sum_k F[k] exp(+i 2 pi j.k / m)`.
pub fn inverse(data: &mut [Complex64], m: usize) {
    transform(data, m, false);
}

/// Wrap a signed wave number into `0..m`.
#[inline]
pub fn wrap(xi: i64, m: usize) -> usize {
    xi.rem_euclid(m as i64) as usize
}
