use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::histogram::Histogram;
use super::matched::{matched_pair_sigma, sample_std, MatchedPairResult};
use crate::analysis::TransitionSummary;
use crate::wafer::{mirror_pairs, DeviceLayout, GateRole};
use crate::{Error, Result};

pub const DEFAULT_BINS: usize = 30;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricStats {
    pub n: usize,
    pub mean: Option<f64>,
    pub std: Option<f64>,
    pub histogram: Histogram,
}

impl MetricStats {
    pub fn of(values: &[f64], bins: usize) -> Self {
        MetricStats {
            n: values.len(),
            mean: (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64),
            std: sample_std(values),
            histogram: Histogram::from_values(values, bins),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ratio {
    pub value: f64,
    pub uncertainty: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OneElectronReport {
    pub v1e: MetricStats,
    pub addition_voltage: MetricStats,
    pub cutoff_pb_difference: MetricStats,
    /// Matched-pair random variation of the 1e voltage.
    pub v1e_matched: Option<MatchedPairResult>,
    /// Random 1e variation over the mean addition voltage.
    pub variation_ratio: Option<Ratio>,
}

/// Dot pairs whose plungers mirror each other across the array center.
pub fn mirror_dot_pairs(layout: &DeviceLayout) -> Result<Vec<(String, String)>> {
    let dot_of = |g| layout.dots.iter().find(|d| d.plunger == g).map(|d| d.name.clone());
    Ok(mirror_pairs(layout)?
        .into_iter()
        .filter(|&(a, _)| layout.gates[a.0].role == GateRole::Plunger)
        .filter_map(|(a, b)| dot_of(a).zip(dot_of(b)))
        .collect())
}

/// Ratio with first-order error propagation: the relative variance of a
/// sample std from `n` values, plus the relative spread of the divisor.
pub fn variation_ratio(sigma: f64, n: usize, mean_add: f64, std_add: f64) -> Ratio {
    let value = sigma / mean_add;
    let rel_sigma = if n > 1 { 1.0 / (2.0 * (n as f64 - 1.0)) } else { f64::INFINITY };
    let rel_add = std_add / mean_add;
    Ratio {
        value,
        uncertainty: value * (rel_sigma + rel_add * rel_add).sqrt(),
    }
}

/// 1e figures over every device. `devices` holds one map (dot name → summary)
/// per device.
pub fn one_electron_statistics(
    devices: &[BTreeMap<String, TransitionSummary>],
    layout: &DeviceLayout,
    bins: usize,
) -> Result<OneElectronReport> {
    let total: usize = devices.iter().map(BTreeMap::len).sum();
    if total < 2 {
        return Err(Error::InsufficientData("need at least two transition summaries".into()));
    }
    let collect = |f: fn(&TransitionSummary) -> Option<f64>| -> Vec<f64> {
        devices.iter().flat_map(|m| m.values().filter_map(f)).collect()
    };
    let v1e = collect(|s| s.v1e);
    let add = collect(|s| s.addition_voltage);
    let cutoff = collect(|s| s.cutoff_pb_difference);

    let per_device: Vec<BTreeMap<String, f64>> = devices
        .iter()
        .map(|m| m.iter().filter_map(|(k, s)| s.v1e.map(|v| (k.clone(), v))).collect())
        .collect();
    let v1e_matched = mirror_dot_pairs(layout)
        .ok()
        .and_then(|pairs| matched_pair_sigma(&per_device, &pairs).ok());

    let add_stats = MetricStats::of(&add, bins);
    let variation_ratio = match (&v1e_matched, add_stats.mean, add_stats.std) {
        (Some(m), Some(mean), Some(std)) if mean > 0.0 => Some(variation_ratio(m.random_sigma, m.samples, mean, std)),
        _ => None,
    };
    Ok(OneElectronReport {
        v1e: MetricStats::of(&v1e, bins),
        addition_voltage: add_stats,
        cutoff_pb_difference: MetricStats::of(&cutoff, bins),
        v1e_matched,
        variation_ratio,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_summaries_have_zero_spread() {
        let s = TransitionSummary {
            v1e: Some(0.9),
            v2e: Some(0.98),
            addition_voltage: Some(0.08),
            cutoff_pb_difference: Some(0.1),
            scan_margin: Some(0.2),
            success: true,
        };
        let dev = BTreeMap::from([("Q1".to_string(), s.clone()), ("Q2".to_string(), s)]);
        let r = one_electron_statistics(&[dev], &DeviceLayout::twelve_qd(), 10).unwrap();
        assert_eq!(r.v1e.std, Some(0.0));
        assert_eq!(r.addition_voltage.std, Some(0.0));
        assert_eq!(r.cutoff_pb_difference.std, Some(0.0));
    }

    #[test]
    fn mirror_dots() {
        let p = mirror_dot_pairs(&DeviceLayout::twelve_qd()).unwrap();
        assert_eq!(p.len(), 6);
        assert_eq!(p[0], ("Q1".to_string(), "Q12".to_string()));
        assert_eq!(p[5], ("Q6".to_string(), "Q7".to_string()));
    }
}
