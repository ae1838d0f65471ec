use crate::instrument::ScanGrid;
use crate::{Error, Result};

/// Half-sample symmetric reflection of an index into `0..n`.
fn reflect(i: isize, n: usize) -> usize {
    let n = n as isize;
    let period = 2 * n;
    let mut k = i.rem_euclid(period);
    if k >= n {
        k = period - 1 - k;
    }
    k as usize
}

/// Weights `d_k`, k = 1..=radius, of the derivative-of-Gaussian filter written
/// as `out[i] = Σ d_k (x[i+k] - x[i-k])`, scaled so a unit ramp gives 1.
pub fn derivative_weights(sigma: f64) -> Vec<f64> {
    let radius = (4.0 * sigma).ceil().max(1.0) as usize;
    let g: Vec<f64> = (1..=radius)
        .map(|k| {
            let k = k as f64;
            k * (-k * k / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let norm: f64 = g.iter().enumerate().map(|(i, w)| 2.0 * (i + 1) as f64 * w).sum();
    g.into_iter().map(|w| w / norm).collect()
}

/// Smoothed first derivative of one row. Antisymmetric pairing makes the
/// response to a constant exactly zero, boundaries included.
pub fn derivative_row(row: &[f64], weights: &[f64], out: &mut [f64]) {
    let n = row.len();
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (k, w) in weights.iter().enumerate() {
            let k = (k + 1) as isize;
            let hi = row[reflect(i as isize + k, n)];
            let lo = row[reflect(i as isize - k, n)];
            acc += w * (hi - lo);
        }
        *o = acc;
    }
}

pub fn highpass_values(values: &[f64], rows: usize, cols: usize, sigma: f64) -> Result<Vec<f64>> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::validation("filter sigma must be positive"));
    }
    assert_eq!(values.len(), rows * cols);
    let w = derivative_weights(sigma);
    let mut out = vec![0.0; values.len()];
    for r in 0..rows {
        derivative_row(&values[r * cols..(r + 1) * cols], &w, &mut out[r * cols..(r + 1) * cols]);
    }
    Ok(out)
}

/// Removes slowly varying features by differentiating each row along the
/// sweep axis with a first-order Gaussian filter.
pub fn highpass_background(grid: &ScanGrid, sigma: f64) -> Result<ScanGrid> {
    let v = highpass_values(&grid.values, grid.rows(), grid.cols(), sigma)?;
    Ok(grid.with_values(v))
}
