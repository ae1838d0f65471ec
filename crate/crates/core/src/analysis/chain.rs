use serde::{Deserialize, Serialize};

use super::maxima::{MaximaSet, Point};

/// Chain of maxima, one per row over consecutive rows, bottom to top.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CurveSegment {
    pub points: Vec<Point>,
}

impl CurveSegment {
    pub fn first_row(&self) -> usize {
        self.points[0].row
    }

    pub fn last_row(&self) -> usize {
        self.points[self.points.len() - 1].row
    }

    /// Number of rows spanned.
    pub fn extent(&self) -> usize {
        self.last_row() - self.first_row() + 1
    }
}

/// Closest point of `candidates` to column `col`; ties go to the lower column.
pub fn nearest(candidates: &[Point], col: usize) -> Option<Point> {
    candidates
        .iter()
        .copied()
        .min_by_key(|p| (p.col.abs_diff(col), p.col))
}

/// Links maxima in adjacent rows that are each other's nearest neighbour and
/// whose column step (pixels per row) lies in `slope_window`, then keeps the
/// resulting chains spanning at least `min_length` rows.
pub fn chain_segments(maxima: &MaximaSet, slope_window: (f64, f64), min_length: usize) -> Vec<CurveSegment> {
    assert!(slope_window.0 <= slope_window.1, "slope window is inverted");
    let mut up: Vec<Option<usize>> = vec![None; maxima.points.len()];
    let mut has_down = vec![false; maxima.points.len()];
    let index_of = |p: Point| maxima.points.binary_search(&p).expect("point in set");

    for (i, &p) in maxima.points.iter().enumerate() {
        let next_row = maxima.in_row(p.row + 1);
        let Some(q) = nearest(next_row, p.col) else {
            continue;
        };
        let back = nearest(maxima.in_row(p.row), q.col).expect("row contains p");
        if back != p {
            continue;
        }
        let slope = q.col as f64 - p.col as f64;
        if slope < slope_window.0 || slope > slope_window.1 {
            continue;
        }
        let j = index_of(q);
        up[i] = Some(j);
        has_down[j] = true;
    }

    let mut segments = Vec::new();
    for start in 0..maxima.points.len() {
        if has_down[start] {
            continue;
        }
        let mut points = vec![maxima.points[start]];
        let mut cur = start;
        while let Some(next) = up[cur] {
            points.push(maxima.points[next]);
            cur = next;
        }
        let seg = CurveSegment { points };
        if seg.extent() >= min_length {
            segments.push(seg);
        }
    }
    segments
}
