//! Shared builders and property checks for the integration suites.
#![allow(dead_code)]

use std::collections::BTreeSet;

use proptest::prelude::*;
use proptest::test_runner::TestCaseError;
use qdprobe::analysis::*;
use qdprobe::instrument::{model::sech2, Axis, ScanGrid, ScanKind, ScanOrigin, ScanPlan, ScanTarget};
use qdprobe::wafer::{DeviceLayout, DotId, WaferSpec};

/// Small wafer with the calibrated physics.
pub fn small_spec(seed: u64, dies: usize, devices: usize) -> WaferSpec {
    WaferSpec {
        name: "small".into(),
        die_count: dies,
        devices_per_die: devices,
        seed,
        ..Default::default()
    }
}

/// Sensing-style plan over the 12QD layout: P1 swept, B0 stepped.
pub fn sensing_plan(cols: usize, rows: usize, p: (f64, f64), b: (f64, f64)) -> ScanPlan {
    let layout = DeviceLayout::twelve_qd();
    let p1 = layout.gate_by_name("P1").unwrap();
    let b0 = layout.gate_by_name("B0").unwrap();
    ScanPlan {
        kind: ScanKind::PlungerVsBarriers,
        target: ScanTarget::Dot(DotId(0)),
        swept: Axis::single(p1, p.0, p.1, cols),
        stepped: Axis::single(b0, b.0, b.1, rows),
        fixed: vec![0.0; layout.gates.len()],
        lockin_frequency: 1e3,
        bias: 0.0,
    }
}

pub fn grid_from(plan: ScanPlan, f: impl Fn(usize, usize) -> f64) -> ScanGrid {
    let (rows, cols) = (plan.rows(), plan.cols());
    let values = (0..rows).flat_map(|r| (0..cols).map(move |c| (r, c))).map(|(r, c)| f(r, c)).collect();
    ScanGrid {
        plan,
        origin: ScanOrigin::default(),
        values,
    }
}

/// A synthetic transition line: column at row 0, columns per row, first visible row.
#[derive(Clone, Copy, Debug)]
pub struct Line {
    pub col0: f64,
    pub slope: f64,
    pub from_row: usize,
}

impl Line {
    pub fn col(&self, row: usize) -> f64 {
        self.col0 + self.slope * row as f64
    }
}

/// Lines of sech² shape (half-width in pixels) on a flat background.
pub fn line_values(lines: &[Line], rows: usize, cols: usize, width: f64) -> Vec<f64> {
    let mut v = vec![0.0; rows * cols];
    for r in 0..rows {
        for c in 0..cols {
            v[r * cols + c] = lines
                .iter()
                .filter(|l| r >= l.from_row)
                .map(|l| sech2((c as f64 - l.col(r)) / width))
                .sum();
        }
    }
    v
}

pub fn line_grid(lines: &[Line], rows: usize, cols: usize, width: f64) -> ScanGrid {
    let values = line_values(lines, rows, cols, width);
    grid_from(sensing_plan(cols, rows, (0.2, 0.5), (0.3, 0.7)), |r, c| values[r * cols + c])
}

/// Graph-connectivity oracle for the chaining rule: all admissible links are
/// found by exhaustive pair comparison, then grouped with union-find.
pub fn chain_oracle(points: &[Point], slope: (f64, f64), min_length: usize) -> BTreeSet<Vec<Point>> {
    let closest = |row: usize, col: usize| -> Option<Point> {
        let mut best: Option<Point> = None;
        for &p in points.iter().filter(|p| p.row == row) {
            let better = match best {
                None => true,
                Some(b) => {
                    let (dp, db) = (p.col.abs_diff(col), b.col.abs_diff(col));
                    dp < db || (dp == db && p.col < b.col)
                }
            };
            if better {
                best = Some(p);
            }
        }
        best
    };
    let mut parent: Vec<usize> = (0..points.len()).collect();
    fn find(parent: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while parent[r] != r {
            r = parent[r];
        }
        parent[i] = r;
        r
    }
    for (i, &p) in points.iter().enumerate() {
        for (j, &q) in points.iter().enumerate() {
            if q.row != p.row + 1 {
                continue;
            }
            let mutual = closest(q.row, p.col) == Some(q) && closest(p.row, q.col) == Some(p);
            let s = q.col as f64 - p.col as f64;
            if mutual && s >= slope.0 && s <= slope.1 {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a] = b;
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<Point>> = Default::default();
    for (i, &p) in points.iter().enumerate() {
        let root = find(&mut parent, i);
        groups.entry(root).or_default().push(p);
    }
    groups
        .into_values()
        .map(|mut g| {
            g.sort();
            g
        })
        .filter(|g| g[g.len() - 1].row - g[0].row + 1 >= min_length)
        .collect()
}

/// Random maxima sets of at most 20 points on a small raster.
pub fn small_maxima() -> impl Strategy<Value = Vec<Point>> {
    prop::collection::btree_set((0usize..8, 0usize..12), 0..=20)
        .prop_map(|s| s.into_iter().map(|(row, col)| Point { row, col }).collect())
}

pub fn check_chain_equivalence(points: Vec<Point>, slope: (f64, f64), min_length: usize) -> Result<(), TestCaseError> {
    let set = MaximaSet::new(8, 12, points.clone());
    let got: BTreeSet<Vec<Point>> = chain_segments(&set, slope, min_length)
        .into_iter()
        .map(|s| s.points)
        .collect();
    prop_assert_eq!(got, chain_oracle(&set.points, slope, min_length));
    Ok(())
}

/// Every emitted segment re-checked against the three chaining criteria.
pub fn check_segment_soundness(points: Vec<Point>, slope: (f64, f64), min_length: usize) -> Result<(), TestCaseError> {
    let set = MaximaSet::new(8, 12, points);
    let segs = chain_segments(&set, slope, min_length);
    let mut seen = BTreeSet::new();
    for seg in &segs {
        prop_assert!(seg.extent() >= min_length);
        for p in &seg.points {
            prop_assert!(seen.insert(*p), "point {:?} in two segments", p);
        }
        for w in seg.points.windows(2) {
            let (p, q) = (w[0], w[1]);
            prop_assert_eq!(q.row, p.row + 1);
            prop_assert_eq!(nearest(set.in_row(q.row), p.col), Some(q));
            prop_assert_eq!(nearest(set.in_row(p.row), q.col), Some(p));
            let s = q.col as f64 - p.col as f64;
            prop_assert!(s >= slope.0 && s <= slope.1);
        }
    }
    Ok(())
}

/// Grids of dyadic values: adding a dyadic constant is exact in binary floating point.
pub fn dyadic_grid() -> impl Strategy<Value = (usize, usize, Vec<f64>)> {
    (2usize..10, 8usize..40).prop_flat_map(|(rows, cols)| {
        (
            Just(rows),
            Just(cols),
            prop::collection::vec((-4096i32..4096).prop_map(|k| f64::from(k) / 1024.0), rows * cols),
        )
    })
}

pub fn check_constant_null(rows: usize, cols: usize, c: f64, sigma: f64) -> Result<(), TestCaseError> {
    let out = highpass_values(&vec![c; rows * cols], rows, cols, sigma).unwrap();
    prop_assert!(out.iter().all(|&x| x == 0.0));
    Ok(())
}

pub fn check_constant_invariance(rows: usize, cols: usize, values: Vec<f64>, shift: f64) -> Result<(), TestCaseError> {
    let shifted: Vec<f64> = values.iter().map(|v| v + shift).collect();
    let a = highpass_values(&values, rows, cols, 2.0).unwrap();
    let b = highpass_values(&shifted, rows, cols, 2.0).unwrap();
    let floor = 0.05;
    prop_assert_eq!(
        detect_maxima(&a, rows, cols, 5, floor).points,
        detect_maxima(&b, rows, cols, 5, floor).points
    );
    let plan = sensing_plan(cols, rows, (0.2, 0.5), (0.3, 0.7));
    let ga = grid_from(plan.clone(), |r, c| values[r * cols + c]);
    let gb = grid_from(plan, |r, c| shifted[r * cols + c]);
    let cfg = AnalysisConfig::default();
    prop_assert_eq!(analyze_scan(&ga, &cfg).unwrap().curves, analyze_scan(&gb, &cfg).unwrap().curves);
    Ok(())
}

/// Two or three well separated lines on a 41-row raster.
pub fn multi_line_scan() -> impl Strategy<Value = Vec<Line>> {
    (15.0f64..25.0, -0.2f64..0.2, 20.0f64..28.0, 2usize..4, 0usize..12).prop_map(|(c0, slope, gap, n, from)| {
        (0..n)
            .map(|k| Line {
                col0: c0 + gap * k as f64,
                slope,
                from_row: if k == 0 { from } else { 0 },
            })
            .collect()
    })
}

pub fn check_translation(lines: Vec<Line>, dp: f64, db: f64) -> Result<(), TestCaseError> {
    let (rows, cols) = (41, 101);
    let values = line_values(&lines, rows, cols, 2.0);
    let (p, b) = ((0.2, 0.5), (0.3, 0.7));
    let base = grid_from(sensing_plan(cols, rows, p, b), |r, c| values[r * cols + c]);
    let moved = grid_from(sensing_plan(cols, rows, (p.0 + dp, p.1 + dp), (b.0 + db, b.1 + db)), |r, c| {
        values[r * cols + c]
    });
    let cfg = AnalysisConfig::default();
    let s0 = analyze_scan(&base, &cfg).unwrap().summary;
    let s1 = analyze_scan(&moved, &cfg).unwrap().summary;
    let close = |a: Option<f64>, b: Option<f64>, d: f64| match (a, b) {
        (Some(a), Some(b)) => (b - a - d).abs() < 1e-9,
        (None, None) => true,
        _ => false,
    };
    prop_assert!(s0.success && s1.success);
    prop_assert!(close(s0.v1e, s1.v1e, dp), "{:?} {:?}", s0.v1e, s1.v1e);
    prop_assert!(close(s0.v2e, s1.v2e, dp));
    prop_assert!(close(s0.addition_voltage, s1.addition_voltage, 0.0));
    prop_assert!(close(s0.cutoff_pb_difference, s1.cutoff_pb_difference, dp - db));
    prop_assert!(close(s0.scan_margin, s1.scan_margin, 0.0));
    Ok(())
}

/// Curve order equals line order on noise-free multi-line scans.
pub fn check_ordering(lines: Vec<Line>) -> Result<(), TestCaseError> {
    let grid = line_grid(&lines, 41, 101, 2.0);
    let curves = analyze_scan(&grid, &AnalysisConfig::default()).unwrap().curves;
    prop_assert_eq!(curves.len(), lines.len());
    for (c, l) in curves.iter().zip(&lines) {
        let r = c.first_row + c.cols.len() / 2;
        prop_assert!((c.col_at_row(r).unwrap() - l.col(r)).abs() < 1.0);
    }
    Ok(())
}
