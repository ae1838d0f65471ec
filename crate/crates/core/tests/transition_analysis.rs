mod common;

use common::*;
use proptest::prelude::*;
use qdprobe::analysis::*;
use qdprobe::instrument::model::sech2;
use qdprobe::units::BOLTZMANN_EV;

#[test]
fn highpass_constant_and_ramp() {
    let (rows, cols) = (4, 30);
    let flat = highpass_values(&vec![0.7; rows * cols], rows, cols, 3.0).unwrap();
    assert!(flat.iter().all(|&x| x == 0.0));

    let ramp: Vec<f64> = (0..rows * cols).map(|i| 0.25 * (i % cols) as f64).collect();
    let out = highpass_values(&ramp, rows, cols, 3.0).unwrap();
    let reach = derivative_weights(3.0).len();
    for r in 0..rows {
        for c in reach..cols - reach {
            assert!((out[r * cols + c] - 0.25).abs() < 1e-12);
        }
    }
    assert!(highpass_values(&ramp, rows, cols, 0.0).is_err());
    assert!(highpass_values(&ramp, rows, cols, -1.0).is_err());
}

/// Derivative-of-Gaussian convolution written out directly from the kernel
/// definition, normalised to unit slope on a ramp.
fn convolve_oracle(row: &[f64], sigma: f64, i: usize) -> f64 {
    let radius = (4.0 * sigma).ceil() as i64;
    let kernel = |k: i64| {
        let k = k as f64;
        -k * (-k * k / (2.0 * sigma * sigma)).exp()
    };
    let norm: f64 = (-radius..=radius).map(|k| -kernel(k) * k as f64).sum();
    (-radius..=radius)
        .map(|k| -kernel(k) * row[(i as i64 + k) as usize])
        .sum::<f64>()
        / norm
}

#[test]
fn highpass_locates_single_line() {
    let cols = 120;
    let center = 57.3;
    let row: Vec<f64> = (0..cols).map(|c| 0.4 + sech2((c as f64 - center) / 2.5)).collect();
    let out = highpass_values(&row, 1, cols, 3.0).unwrap();
    for i in 20..100 {
        assert!((out[i] - convolve_oracle(&row, 3.0, i)).abs() < 1e-12);
    }
    let imax = (0..cols).max_by(|&a, &b| out[a].total_cmp(&out[b])).unwrap();
    let imin = (0..cols).min_by(|&a, &b| out[a].total_cmp(&out[b])).unwrap();
    assert!((imax as f64) < center && (imin as f64) > center);
    let k = (imax..imin).find(|&k| out[k] > 0.0 && out[k + 1] <= 0.0).unwrap();
    let zero = k as f64 + out[k] / (out[k] - out[k + 1]);
    assert!((zero - center).abs() < 1.0, "zero crossing {zero}");
}

#[test]
fn maxima_on_two_line_scan() {
    let lines = [
        Line { col0: 30.0, slope: 0.3, from_row: 0 },
        Line { col0: 60.0, slope: 0.3, from_row: 0 },
    ];
    let (rows, cols) = (20, 101);
    let raw = line_values(&lines, rows, cols, 2.0);
    let m = detect_maxima(&raw, rows, cols, 5, 0.5);
    for r in 0..rows {
        let row = &raw[r * cols..(r + 1) * cols];
        // exhaustive argmax over each half of the row
        let argmax = |lo: usize, hi: usize| (lo..hi).max_by(|&a, &b| row[a].total_cmp(&row[b])).unwrap();
        let expect = [argmax(0, 45), argmax(45, cols)];
        let got: Vec<usize> = m.in_row(r).iter().map(|p| p.col).collect();
        assert_eq!(got, expect);
        for (c, l) in got.iter().zip(&lines) {
            assert!((*c as f64 - l.col(r)).abs() <= 1.0);
        }
    }
}

#[test]
fn chaining_examples() {
    assert!(chain_segments(&MaximaSet::default(), (-3.0, 3.0), 1).is_empty());

    let mut pts = Vec::new();
    for r in 0..12 {
        pts.push(Point { row: r, col: 5 + r / 2 });
        pts.push(Point { row: r, col: 30 + r / 2 });
    }
    let set = MaximaSet::new(12, 40, pts.clone());
    let segs = chain_segments(&set, (-2.0, 2.0), 10);
    assert_eq!(segs.len(), 2);
    assert!(segs.iter().all(|s| s.points.len() == 12));
    let oracle = chain_oracle(&set.points, (-2.0, 2.0), 10);
    let got: std::collections::BTreeSet<_> = segs.into_iter().map(|s| s.points).collect();
    assert_eq!(got, oracle);
}

fn seg(rows: std::ops::Range<usize>, col: usize) -> CurveSegment {
    CurveSegment {
        points: rows.map(|row| Point { row, col }).collect(),
    }
}

#[test]
fn merge_examples() {
    let cfg = MergeConfig::default();
    let one = merge_and_order(&[seg(0..10, 10), seg(10..20, 10)], &cfg);
    assert_eq!(one.len(), 1);
    assert_eq!(one[0].rows(), 0..=19);

    let three = merge_and_order(&[seg(0..30, 70), seg(0..30, 20), seg(0..30, 45)], &cfg);
    let means: Vec<f64> = three.iter().map(TransitionCurve::mean_col).collect();
    assert_eq!(means, [20.0, 45.0, 70.0]);
}

#[test]
fn spurious_segment_removed_from_scan() {
    let truth = [
        Line { col0: 60.0, slope: 0.0, from_row: 0 },
        Line { col0: 75.0, slope: 0.0, from_row: 0 },
        Line { col0: 90.0, slope: 0.0, from_row: 0 },
    ];
    let (rows, cols) = (41, 101);
    let mut values = line_values(&truth, rows, cols, 2.0);
    // short bright streak far to the left
    for r in 10..26 {
        for c in 0..cols {
            values[r * cols + c] += sech2((c as f64 - 5.0) / 2.0);
        }
    }
    let grid = grid_from(sensing_plan(cols, rows, (0.2, 0.7), (0.3, 0.7)), |r, c| values[r * cols + c]);
    let curves = analyze_scan(&grid, &AnalysisConfig::default()).unwrap().curves;
    assert_eq!(curves.len(), 3);
    for (c, l) in curves.iter().zip(&truth) {
        assert!((c.mean_col() - l.col0).abs() < 0.5);
    }
}

#[test]
fn summary_of_vertical_lines() {
    // 0.20 .. 0.70 V in 5 mV steps: 0.45 V is column 50, 0.61 V column 82
    let plan = sensing_plan(101, 41, (0.20, 0.70), (0.3, 0.7));
    let grid = grid_from(plan.clone(), |_, _| 0.0);
    let curves = vec![
        TransitionCurve { first_row: 0, cols: vec![50.0; 41] },
        TransitionCurve { first_row: 0, cols: vec![82.0; 41] },
    ];
    let s = summarize_transitions(&curves, &grid);
    let close = |a: Option<f64>, b: f64| (a.unwrap() - b).abs() < 1e-12;
    assert!(close(s.v1e, 0.45));
    assert!(close(s.v2e, 0.61));
    assert!(close(s.addition_voltage, 0.16));
    assert!(close(s.scan_margin, 0.25));
    assert!(s.success);

    // the same through the full detection chain
    let lines = [
        Line { col0: 50.0, slope: 0.0, from_row: 0 },
        Line { col0: 82.0, slope: 0.0, from_row: 0 },
    ];
    let values = line_values(&lines, 41, 101, 2.0);
    let scan = grid_from(plan, |r, c| values[r * 101 + c]);
    let a = analyze_scan(&scan, &AnalysisConfig::default()).unwrap().summary;
    assert!((a.v1e.unwrap() - 0.45).abs() < 1e-6);
    assert!((a.v2e.unwrap() - 0.61).abs() < 1e-6);
    assert!((a.scan_margin.unwrap() - 0.25).abs() < 1e-6);
}

#[test]
fn curve_below_midpoint_gives_no_v1e() {
    let grid = grid_from(sensing_plan(101, 41, (0.2, 0.7), (0.3, 0.7)), |_, _| 0.0);
    let curves = vec![TransitionCurve { first_row: 0, cols: vec![30.0; 15] }];
    let s = summarize_transitions(&curves, &grid);
    assert!(s.success);
    assert_eq!(s.v1e, None);
    assert_eq!(s.addition_voltage, None);
    assert!(s.cutoff_pb_difference.is_some());
    assert_eq!(summarize_transitions(&[], &grid), TransitionSummary::default());
}

fn with_margin(margin: f64, add: f64) -> TransitionSummary {
    TransitionSummary {
        v1e: Some(0.5),
        v2e: Some(0.5 + add),
        addition_voltage: Some(add),
        cutoff_pb_difference: None,
        scan_margin: Some(margin),
        success: true,
    }
}

#[test]
fn margin_rule() {
    let wafer = vec![with_margin(0.40, 0.158), with_margin(0.316, 0.158), with_margin(0.2, 0.158)];
    assert_eq!(validate_margin(&wafer).unwrap(), [Some(true), Some(false), Some(false)]);
    let mut missing = with_margin(0.4, 0.1);
    missing.scan_margin = None;
    missing.addition_voltage = None;
    assert!(validate_margin(&[missing.clone()]).is_err());
    assert_eq!(validate_margin(&[missing, with_margin(0.4, 0.1)]).unwrap(), [None, Some(true)]);
}

const TE: f64 = 1.6;
const ALPHA: f64 = 0.08;

fn trace(amplitude: f64, points: usize) -> (Vec<f64>, Vec<f64>) {
    let kt2 = 2.0 * BOLTZMANN_EV * TE;
    let v: Vec<f64> = (0..points).map(|i| 0.48 + 0.04 * i as f64 / (points - 1) as f64).collect();
    let y = v.iter().map(|x| 0.2 + amplitude * sech2(ALPHA * (x - 0.5013) / kt2)).collect();
    (v, y)
}

#[test]
fn temperature_from_analytic_integral() {
    let kt2 = 2.0 * BOLTZMANN_EV * TE;
    let v: Vec<f64> = (0..201).map(|i| 0.48 + 0.0002 * i as f64).collect();
    // ∫sech² = tanh, plus an arbitrary linear background
    let y: Vec<f64> = v.iter().map(|x| 0.7 * (ALPHA * (x - 0.5) / kt2).tanh() + 0.1 - 0.3 * x).collect();
    let fit = fit_integrated_trace(&v, &y, ALPHA, 0.01, 0.5, 0.005).unwrap();
    assert!((fit.temperature / TE - 1.0).abs() < 1e-3, "{}", fit.temperature);
    assert!((fit.center - 0.5).abs() < 1e-6);
}

#[test]
fn temperature_from_lockin_trace() {
    let (v, y) = trace(1.0, 401);
    let fit = fit_electron_temperature(&v, &y, ALPHA, 0.01).unwrap();
    assert!((fit.temperature / TE - 1.0).abs() < 1e-3, "{}", fit.temperature);
    // T ∝ 1/α: ±0.01 on 0.08 is 12.5 %
    assert!((fit.uncertainty / fit.temperature - 0.125).abs() < 1e-12);

    let (v2, y2) = trace(2.0, 401);
    let fit2 = fit_electron_temperature(&v2, &y2, ALPHA, 0.01).unwrap();
    assert!((fit2.temperature / fit.temperature - 1.0).abs() < 1e-6);

    assert!(fit_electron_temperature(&v, &y, 0.0, 0.01).is_err());
    assert!(fit_electron_temperature(&v, &y, 1.5, 0.01).is_err());
    assert!(fit_electron_temperature(&v[..4], &y[..4], ALPHA, 0.01).is_err());
}

#[test]
fn flat_trace_does_not_fit() {
    let v: Vec<f64> = (0..50).map(|i| i as f64 * 1e-3).collect();
    let y = vec![0.3; 50];
    assert!(fit_electron_temperature(&v, &y, ALPHA, 0.01).is_err());
}

proptest! {
    #[test]
    fn highpass_null_on_constants(rows in 1usize..6, cols in 2usize..50, c in -10.0f64..10.0, sigma in 0.5f64..6.0) {
        check_constant_null(rows, cols, c, sigma)?;
    }

    #[test]
    fn maxima_invariant_under_global_constant((rows, cols, values) in dyadic_grid(), k in -2048i32..2048) {
        check_constant_invariance(rows, cols, values, f64::from(k) / 1024.0)?;
    }

    #[test]
    fn summaries_follow_axis_translation(lines in multi_line_scan(), dp in -0.3f64..0.3, db in -0.3f64..0.3) {
        check_translation(lines, dp, db)?;
    }

    #[test]
    fn segments_satisfy_criteria(points in small_maxima(), lo in -3i32..=0, width in 0i32..=4, min_length in 1usize..6) {
        check_segment_soundness(points, (f64::from(lo), f64::from(lo + width)), min_length)?;
    }

    #[test]
    fn chaining_matches_connectivity_oracle(points in small_maxima(), lo in -3i32..=0, width in 0i32..=4, min_length in 1usize..6) {
        check_chain_equivalence(points, (f64::from(lo), f64::from(lo + width)), min_length)?;
    }

    #[test]
    fn curve_order_matches_electron_order(lines in multi_line_scan()) {
        check_ordering(lines)?;
    }
}
