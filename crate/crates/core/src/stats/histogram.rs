use serde::{Deserialize, Serialize};

/// Fixed-width histogram; `edges` has one more entry than `counts`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

impl Histogram {
    /// Equal-width bins spanning the data. A degenerate range gets a unit-free
    /// ±0.5·|x| (or ±0.5) window so that every value still lands in a bin.
    pub fn from_values(values: &[f64], bins: usize) -> Self {
        let bins = bins.max(1);
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let (lo, hi) = if values.is_empty() {
            (0.0, 1.0)
        } else if hi > lo {
            (lo, hi)
        } else {
            let pad = if lo == 0.0 { 0.5 } else { 0.5 * lo.abs() };
            (lo - pad, hi + pad)
        };
        let edges: Vec<f64> = (0..=bins)
            .map(|i| if i == bins { hi } else { lo + (hi - lo) * i as f64 / bins as f64 })
            .collect();
        Self::with_edges(values, edges)
    }

    /// Bins are half-open except the last, which includes its upper edge.
    /// Values outside the edges are ignored.
    pub fn with_edges(values: &[f64], edges: Vec<f64>) -> Self {
        let bins = edges.len().saturating_sub(1);
        let mut counts = vec![0; bins];
        for &v in values {
            if bins == 0 || !(v >= edges[0] && v <= edges[bins]) {
                continue;
            }
            let k = edges.partition_point(|&e| e <= v).saturating_sub(1).min(bins - 1);
            counts[k] += 1;
        }
        Histogram { edges, counts }
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_value_counted() {
        let v = [0.0, 0.1, 0.25, 0.5, 0.99, 1.0];
        let h = Histogram::from_values(&v, 4);
        assert_eq!(h.edges, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(h.counts, vec![2, 1, 1, 2]);
    }

    #[test]
    fn constant_data() {
        let h = Histogram::from_values(&[2.0, 2.0], 3);
        assert_eq!(h.total(), 2);
    }
}
