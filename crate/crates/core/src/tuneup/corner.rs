use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::config::CornerConfig;
use super::fault::TuneupFault;
use crate::fit::{least_squares, Residuals};
use crate::instrument::model::logistic;
use crate::instrument::ScanGrid;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CornerFit {
    /// (stepped-axis gate, swept-axis gate) voltages of the corner.
    pub corner: (f64, f64),
    pub widths: (f64, f64),
    /// RMS residual of the fit on min-max normalised data.
    pub residual: f64,
}

/// `I0·L((V1 − c1)/w1)·L((V2 − c2)/w2) + off`, parameters
/// `[I0, c1, w1, c2, w2, off]`.
struct CornerModel<'a> {
    v1: &'a [f64],
    v2: &'a [f64],
    y: &'a [f64],
}

impl Residuals for CornerModel<'_> {
    fn len(&self) -> usize {
        self.y.len()
    }

    fn residuals(&self, p: &[f64], out: &mut [f64]) {
        let cols = self.v2.len();
        for (k, o) in out.iter_mut().enumerate() {
            let l1 = logistic((self.v1[k / cols] - p[1]) / p[2]);
            let l2 = logistic((self.v2[k % cols] - p[3]) / p[4]);
            *o = p[0] * l1 * l2 + p[5] - self.y[k];
        }
    }

    fn jacobian(&self, p: &[f64], out: &mut DMatrix<f64>) {
        let cols = self.v2.len();
        for k in 0..self.y.len() {
            let x1 = (self.v1[k / cols] - p[1]) / p[2];
            let x2 = (self.v2[k % cols] - p[3]) / p[4];
            let (l1, l2) = (logistic(x1), logistic(x2));
            let d1 = l1 * (1.0 - l1);
            let d2 = l2 * (1.0 - l2);
            out[(k, 0)] = l1 * l2;
            out[(k, 1)] = -p[0] * l2 * d1 / p[2];
            out[(k, 2)] = -p[0] * l2 * d1 * x1 / p[2];
            out[(k, 3)] = -p[0] * l1 * d2 / p[4];
            out[(k, 4)] = -p[0] * l1 * d2 * x2 / p[4];
            out[(k, 5)] = 1.0;
        }
    }
}

/// Voltage where a marginal profile first reaches half its range.
fn half_point(v: &[f64], profile: &[f64]) -> f64 {
    let lo = profile.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = profile.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let half = 0.5 * (lo + hi);
    for k in 1..profile.len() {
        if profile[k - 1] < half && profile[k] >= half {
            let f = (half - profile[k - 1]) / (profile[k] - profile[k - 1]);
            return v[k - 1] + f * (v[k] - v[k - 1]);
        }
    }
    0.5 * (v[0] + v[v.len() - 1])
}

/// Fits the pinch-off corner of a barrier-barrier transport scan.
pub fn fit_corner(grid: &ScanGrid, cfg: &CornerConfig) -> Result<CornerFit, TuneupFault> {
    let (rows, cols) = (grid.rows(), grid.cols());
    let lo = grid.values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = grid.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    if !(span >= cfg.min_span) || !span.is_finite() {
        return Err(TuneupFault::FlatScan { span: if span.is_finite() { span } else { 0.0 } });
    }
    let y: Vec<f64> = grid.values.iter().map(|v| (v - lo) / span).collect();
    let v1 = grid.stepped_values();
    let v2 = grid.swept_values();

    let row_profile: Vec<f64> = (0..rows).map(|r| y[r * cols..(r + 1) * cols].iter().sum::<f64>() / cols as f64).collect();
    let col_profile: Vec<f64> = (0..cols).map(|c| (0..rows).map(|r| y[r * cols + c]).sum::<f64>() / rows as f64).collect();
    let c1 = half_point(&v1, &row_profile);
    let c2 = half_point(&v2, &col_profile);
    let w_base = 0.5 * ((v1[rows - 1] - v1[0]) / rows as f64 + (v2[cols - 1] - v2[0]) / cols as f64);

    let problem = CornerModel { v1: &v1, v2: &v2, y: &y };
    let mut best: Option<crate::fit::FitOutcome> = None;
    for scale in [2.0, 6.0, 15.0] {
        let w = w_base * scale;
        let out = least_squares(&problem, &[1.0, c1, w, c2, w, 0.0]);
        if out.rms.is_finite() && best.as_ref().is_none_or(|b| out.rms < b.rms) {
            best = Some(out);
        }
    }
    let out = best.ok_or(TuneupFault::FitResidual { residual: f64::INFINITY })?;
    if out.rms > cfg.max_residual {
        return Err(TuneupFault::FitResidual { residual: out.rms });
    }
    let (c1, c2) = (out.params[1], out.params[3]);
    let in1 = (v1[0]..=v1[rows - 1]).contains(&c1);
    let in2 = (v2[0]..=v2[cols - 1]).contains(&c2);
    if !(in1 && in2) {
        return Err(TuneupFault::CornerOutsideWindow {
            c1: c1.clamp(v1[0], v1[rows - 1]),
            c2: c2.clamp(v2[0], v2[cols - 1]),
        });
    }
    Ok(CornerFit {
        corner: (c1, c2),
        widths: (out.params[2].abs(), out.params[4].abs()),
        residual: out.rms,
    })
}
