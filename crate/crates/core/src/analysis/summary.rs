use serde::{Deserialize, Serialize};

use super::chain::chain_segments;
use super::filter::highpass_values;
use super::maxima::{adaptive_floor, detect_maxima};
use super::merge::{merge_and_order, MergeConfig, TransitionCurve};
use crate::instrument::ScanGrid;
use crate::Result;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    /// Gaussian sigma of the derivative filter (pixels).
    pub sigma: f64,
    pub max_filter_window: usize,
    /// Maxima must exceed this multiple of the robust noise...
    pub noise_factor: f64,
    /// ...and this fraction of the strongest filtered response.
    pub relative_floor: f64,
    /// Allowed column step per row (pixels).
    pub slope_window: (f64, f64),
    /// Minimum vertical extent as a fraction of the scan rows.
    pub min_length_fraction: f64,
    pub merge: MergeConfig,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            sigma: 3.0,
            max_filter_window: 5,
            noise_factor: 5.0,
            relative_floor: 0.15,
            slope_window: (-3.0, 3.0),
            min_length_fraction: 0.3,
            merge: MergeConfig::default(),
        }
    }
}

impl AnalysisConfig {
    pub fn min_length(&self, rows: usize) -> usize {
        ((self.min_length_fraction * rows as f64).ceil() as usize).max(1)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TransitionSummary {
    pub v1e: Option<f64>,
    pub v2e: Option<f64>,
    pub addition_voltage: Option<f64>,
    /// Plunger minus first-barrier voltage where the 1e line fades out.
    pub cutoff_pb_difference: Option<f64>,
    pub scan_margin: Option<f64>,
    pub success: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanAnalysis {
    pub curves: Vec<TransitionCurve>,
    pub summary: TransitionSummary,
}

/// Moves every curve point from the rising-edge maximum of the derivative to
/// the +/- zero crossing on its right, i.e. to the line center.
pub fn refine_centers(curves: &mut [TransitionCurve], filtered: &[f64], cols: usize, sigma: f64) {
    let reach = (3.0 * sigma).ceil() as usize + 2;
    for curve in curves.iter_mut() {
        let first = curve.first_row;
        for (i, c) in curve.cols.iter_mut().enumerate() {
            let row = &filtered[(first + i) * cols..(first + i + 1) * cols];
            let start = (c.round() as usize).min(cols - 1);
            let lo = start.saturating_sub(1);
            let hi = (start + reach).min(cols - 1);
            for k in lo..hi {
                let (a, b) = (row[k], row[k + 1]);
                if a > 0.0 && b <= 0.0 {
                    *c = k as f64 + a / (a - b);
                    break;
                }
            }
        }
    }
}

/// Runs the full curve-detection chain on one charge-sensing scan.
pub fn analyze_scan(grid: &ScanGrid, cfg: &AnalysisConfig) -> Result<ScanAnalysis> {
    let (rows, cols) = (grid.rows(), grid.cols());
    let filtered = highpass_values(&grid.values, rows, cols, cfg.sigma)?;
    let floor = adaptive_floor(&filtered, rows, cols, cfg.noise_factor, cfg.relative_floor);
    let maxima = detect_maxima(&filtered, rows, cols, cfg.max_filter_window, floor);
    let segments = chain_segments(&maxima, cfg.slope_window, cfg.min_length(rows));
    let mut curves = merge_and_order(&segments, &cfg.merge);
    refine_centers(&mut curves, &filtered, cols, cfg.sigma);
    let summary = summarize_transitions(&curves, grid);
    Ok(ScanAnalysis { curves, summary })
}

/// Single-electron figures of a scan from its ordered curves.
pub fn summarize_transitions(curves: &[TransitionCurve], grid: &ScanGrid) -> TransitionSummary {
    let swept = grid.swept_values();
    let stepped = grid.stepped_values();
    let rows = grid.rows();
    let mid = (rows - 1) as f64 / 2.0;
    let pstep = grid.plan.swept.step();
    let plunger = |c: f64| swept[0] + c * pstep;
    let at_mid = |k: usize| curves.get(k).and_then(|c| c.col_at(mid)).map(plunger);

    let v1e = at_mid(0);
    let v2e = at_mid(1);
    let cutoff = curves.first().map(|c| plunger(c.cols[0]) - stepped[c.first_row]);
    TransitionSummary {
        v1e,
        v2e,
        addition_voltage: v1e.zip(v2e).map(|(a, b)| b - a),
        cutoff_pb_difference: cutoff,
        scan_margin: v1e.map(|v| v - swept[0]),
        success: !curves.is_empty(),
    }
}
