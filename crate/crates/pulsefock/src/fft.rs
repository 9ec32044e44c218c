//! Thin wrappers around `rustfft` shared by the propagation and spectral
//! layers. All transforms are unnormalized; callers apply their own
//! measure factors.

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::grid::Grid;

pub(crate) fn forward(samples: &[Complex64]) -> Vec<Complex64> {
    let mut buf = samples.to_vec();
    FftPlanner::new().plan_fft_forward(buf.len()).process(&mut buf);
    buf
}

pub(crate) fn inverse(bins: &[Complex64]) -> Vec<Complex64> {
    let mut buf = bins.to_vec();
    FftPlanner::new().plan_fft_inverse(buf.len()).process(&mut buf);
    let scale = 1.0 / buf.len() as f64;
    for z in &mut buf {
        *z *= scale;
    }
    buf
}

/// Angular wavenumber of every FFT bin, in transform order: bin `j` holds
/// `2*pi*j/(n*dx)` for `j <= n/2` and the negative alias above that.
pub(crate) fn wavenumbers(grid: &Grid) -> Vec<f64> {
    let n = grid.n_points() as i64;
    let step = 2.0 * std::f64::consts::PI / grid.length();
    (0..n)
        .map(|j| {
            let signed = if j <= n / 2 { j } else { j - n };
            signed as f64 * step
        })
        .collect()
}
