use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Point {
    pub row: usize,
    pub col: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MaximaSet {
    pub rows: usize,
    pub cols: usize,
    /// Sorted by (row, col).
    pub points: Vec<Point>,
}

impl MaximaSet {
    pub fn new(rows: usize, cols: usize, mut points: Vec<Point>) -> Self {
        points.sort();
        points.dedup();
        MaximaSet { rows, cols, points }
    }

    pub fn in_row(&self, row: usize) -> &[Point] {
        let lo = self.points.partition_point(|p| p.row < row);
        let hi = self.points.partition_point(|p| p.row <= row);
        &self.points[lo..hi]
    }
}

/// Local maxima along each row over a `window`-pixel neighbourhood that also
/// exceed `floor`.
pub fn detect_maxima(values: &[f64], rows: usize, cols: usize, window: usize, floor: f64) -> MaximaSet {
    assert!(window >= 1, "maximum-filter window must be at least 1");
    assert_eq!(values.len(), rows * cols);
    let half = window / 2;
    let mut points = Vec::new();
    for r in 0..rows {
        let row = &values[r * cols..(r + 1) * cols];
        for c in 0..cols {
            let v = row[c];
            if !(v > floor) {
                continue;
            }
            let lo = c.saturating_sub(half);
            let hi = (c + half).min(cols - 1);
            if row[lo..=hi].iter().all(|&x| x <= v) {
                points.push(Point { row: r, col: c });
            }
        }
    }
    MaximaSet::new(rows, cols, points)
}

/// Median absolute deviation scaled to a Gaussian sigma.
pub fn robust_noise(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let med = median(values);
    let dev: Vec<f64> = values.iter().map(|v| (v - med).abs()).collect();
    1.4826 * median(&dev)
}

pub(crate) fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Pixel noise of a row-filtered image. On scans crowded with lines the MAD
/// of the pixels themselves is set by the lines, so it is compared with the
/// MAD of row-to-row differences, where near-vertical lines cancel, and the
/// smaller estimate wins.
pub fn image_noise(values: &[f64], rows: usize, cols: usize) -> f64 {
    let direct = robust_noise(values);
    if rows < 2 {
        return direct;
    }
    let diffs: Vec<f64> = (cols..rows * cols).map(|i| values[i] - values[i - cols]).collect();
    direct.min(robust_noise(&diffs) / std::f64::consts::SQRT_2)
}

/// Detection floor: the larger of a noise multiple and a fraction of the peak.
pub fn adaptive_floor(values: &[f64], rows: usize, cols: usize, noise_factor: f64, relative: f64) -> f64 {
    let peak = values.iter().copied().fold(0.0, f64::max);
    (noise_factor * image_noise(values, rows, cols)).max(relative * peak)
}
