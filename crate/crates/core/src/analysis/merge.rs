use serde::{Deserialize, Serialize};

use super::chain::CurveSegment;
use super::maxima::median;

/// A transition line: one (fractional) column per row over a contiguous row range.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransitionCurve {
    pub first_row: usize,
    pub cols: Vec<f64>,
}

impl TransitionCurve {
    pub fn last_row(&self) -> usize {
        self.first_row + self.cols.len() - 1
    }

    pub fn rows(&self) -> std::ops::RangeInclusive<usize> {
        self.first_row..=self.last_row()
    }

    pub fn mean_col(&self) -> f64 {
        self.cols.iter().sum::<f64>() / self.cols.len() as f64
    }

    pub fn col_at_row(&self, row: usize) -> Option<f64> {
        row.checked_sub(self.first_row).and_then(|i| self.cols.get(i).copied())
    }

    /// Column at a fractional row, `None` outside the curve.
    pub fn col_at(&self, row: f64) -> Option<f64> {
        let first = self.first_row as f64;
        if row < first || row > self.last_row() as f64 {
            return None;
        }
        let t = row - first;
        let i = t.floor() as usize;
        if i + 1 >= self.cols.len() {
            return self.cols.last().copied();
        }
        let f = t - i as f64;
        Some(self.cols[i] * (1.0 - f) + self.cols[i + 1] * f)
    }

    /// Plunger voltage as a function of the reported barrier voltage, given the
    /// two axes of the scan.
    pub fn plunger_at_barrier(&self, swept: &[f64], stepped: &[f64], barrier: f64) -> Option<f64> {
        let rstep = (stepped[stepped.len() - 1] - stepped[0]) / (stepped.len() - 1) as f64;
        let cstep = (swept[swept.len() - 1] - swept[0]) / (swept.len() - 1) as f64;
        let row = (barrier - stepped[0]) / rstep;
        self.col_at(row).map(|c| swept[0] + c * cstep)
    }

    fn slope(&self) -> f64 {
        let n = self.cols.len();
        if n < 2 {
            return 0.0;
        }
        let xm = (n - 1) as f64 / 2.0;
        let ym = self.mean_col();
        let (mut sxy, mut sxx) = (0.0, 0.0);
        for (i, c) in self.cols.iter().enumerate() {
            let dx = i as f64 - xm;
            sxy += dx * (c - ym);
            sxx += dx * dx;
        }
        sxy / sxx
    }

    fn from_segment(seg: &CurveSegment) -> Self {
        TransitionCurve {
            first_row: seg.first_row(),
            cols: seg.points.iter().map(|p| p.col as f64).collect(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MergeConfig {
    /// Largest number of missing rows bridged between two segments.
    pub max_row_gap: usize,
    /// Largest column mismatch (pixels) for two pieces to belong together.
    pub max_distance: f64,
    /// A curve farther than this multiple of the typical spacing from its
    /// nearest neighbour is discarded (applied with three or more curves).
    pub outlier_factor: f64,
}

impl Default for MergeConfig {
    fn default() -> Self {
        MergeConfig {
            max_row_gap: 3,
            max_distance: 3.0,
            outlier_factor: 2.5,
        }
    }
}

/// Mismatch between `a` and a later or overlapping `b`, if they may join.
fn join_distance(a: &TransitionCurve, b: &TransitionCurve, cfg: &MergeConfig) -> Option<f64> {
    if b.first_row > a.last_row() {
        let gap = b.first_row - a.last_row() - 1;
        if gap > cfg.max_row_gap {
            return None;
        }
        let predicted = a.cols[a.cols.len() - 1] + a.slope() * (b.first_row - a.last_row()) as f64;
        Some((predicted - b.cols[0]).abs())
    } else {
        let lo = a.first_row.max(b.first_row);
        let hi = a.last_row().min(b.last_row());
        if lo > hi {
            return None;
        }
        let d: f64 = (lo..=hi)
            .map(|r| (a.col_at_row(r).unwrap() - b.col_at_row(r).unwrap()).abs())
            .sum::<f64>()
            / (hi - lo + 1) as f64;
        Some(d)
    }
}

fn join(a: &TransitionCurve, b: &TransitionCurve) -> TransitionCurve {
    let first = a.first_row.min(b.first_row);
    let last = a.last_row().max(b.last_row());
    let mut known: Vec<Option<f64>> = (first..=last)
        .map(|r| match (a.col_at_row(r), b.col_at_row(r)) {
            (Some(x), Some(y)) => Some(0.5 * (x + y)),
            (x, y) => x.or(y),
        })
        .collect();
    // bridge missing rows linearly
    let mut i = 0;
    while i < known.len() {
        if known[i].is_none() {
            let lo = i - 1;
            let mut hi = i;
            while known[hi].is_none() {
                hi += 1;
            }
            let (y0, y1) = (known[lo].unwrap(), known[hi].unwrap());
            for (k, slot) in known.iter_mut().enumerate().take(hi).skip(i) {
                let t = (k - lo) as f64 / (hi - lo) as f64;
                *slot = Some(y0 + (y1 - y0) * t);
            }
            i = hi;
        }
        i += 1;
    }
    TransitionCurve {
        first_row: first,
        cols: known.into_iter().map(Option::unwrap).collect(),
    }
}

/// Merges overlapping or nearly abutting segments into curves, drops outlier
/// curves and orders the rest by mean column (first = 1e candidate).
pub fn merge_and_order(segments: &[CurveSegment], cfg: &MergeConfig) -> Vec<TransitionCurve> {
    let mut curves: Vec<TransitionCurve> = segments.iter().map(TransitionCurve::from_segment).collect();
    curves.sort_by(|a, b| (a.first_row, a.cols[0]).partial_cmp(&(b.first_row, b.cols[0])).unwrap());

    loop {
        let mut best: Option<(f64, usize, usize)> = None;
        for i in 0..curves.len() {
            for j in 0..curves.len() {
                if i == j || curves[j].first_row < curves[i].first_row {
                    continue;
                }
                if curves[j].first_row == curves[i].first_row && j < i {
                    continue;
                }
                if let Some(d) = join_distance(&curves[i], &curves[j], cfg) {
                    if d <= cfg.max_distance && best.is_none_or(|(bd, _, _)| d < bd) {
                        best = Some((d, i, j));
                    }
                }
            }
        }
        let Some((_, i, j)) = best else { break };
        let merged = join(&curves[i], &curves[j]);
        let (hi, lo) = (i.max(j), i.min(j));
        curves.remove(hi);
        curves.remove(lo);
        curves.push(merged);
        curves.sort_by(|a, b| (a.first_row, a.cols[0]).partial_cmp(&(b.first_row, b.cols[0])).unwrap());
    }

    curves.sort_by(|a, b| a.mean_col().total_cmp(&b.mean_col()));
    if curves.len() >= 3 {
        let means: Vec<f64> = curves.iter().map(TransitionCurve::mean_col).collect();
        let nn: Vec<f64> = (0..means.len())
            .map(|i| {
                let left = if i > 0 { means[i] - means[i - 1] } else { f64::INFINITY };
                let right = if i + 1 < means.len() { means[i + 1] - means[i] } else { f64::INFINITY };
                left.min(right)
            })
            .collect();
        let typical = median(&nn);
        let keep: Vec<bool> = nn.iter().map(|&d| d <= cfg.outlier_factor * typical).collect();
        curves = curves
            .into_iter()
            .zip(keep)
            .filter_map(|(c, k)| k.then_some(c))
            .collect();
    }
    curves
}
