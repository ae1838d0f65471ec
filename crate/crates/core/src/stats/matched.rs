use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Fewer within-device differences than this and a pair is left out: the
/// centering step would eat too much of its variance.
pub const MIN_PAIR_SAMPLES: usize = 8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairSamples {
    pub a: String,
    pub b: String,
    pub mean: f64,
    /// Differences with the pair mean removed.
    pub centered: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatchedPairResult {
    pub pairs: Vec<PairSamples>,
    /// Pairs with too few samples.
    pub skipped: Vec<(String, String)>,
    /// Std of the merged, centered differences.
    pub pooled_sigma: f64,
    /// Per-gate random component, pooled / √2.
    pub random_sigma: f64,
    pub samples: usize,
}

/// Random variation from differences between matched gates of the same device.
///
/// `values` holds one map (name → value) per device. A device contributes to a
/// pair only when both members are present. Each pair's mean is removed before
/// merging, so anything common to both gates of a device (wafer position,
/// device-level offsets) and any fixed pair asymmetry cancel.
pub fn matched_pair_sigma(values: &[BTreeMap<String, f64>], pairs: &[(String, String)]) -> Result<MatchedPairResult> {
    let mut kept = Vec::new();
    let mut skipped = Vec::new();
    for (a, b) in pairs {
        let diffs: Vec<f64> = values
            .iter()
            .filter_map(|m| Some(m.get(a)? - m.get(b)?))
            .collect();
        if diffs.len() < MIN_PAIR_SAMPLES {
            skipped.push((a.clone(), b.clone()));
            continue;
        }
        let mean = diffs.iter().sum::<f64>() / diffs.len() as f64;
        kept.push(PairSamples {
            a: a.clone(),
            b: b.clone(),
            mean,
            centered: diffs.iter().map(|d| d - mean).collect(),
        });
    }
    let samples: usize = kept.iter().map(|p| p.centered.len()).sum();
    // one degree of freedom is spent on each pair mean
    let dof = samples.saturating_sub(kept.len());
    if samples < 2 || dof == 0 {
        return Err(Error::InsufficientData(format!(
            "matched pairs need at least {MIN_PAIR_SAMPLES} devices per pair"
        )));
    }
    let ss: f64 = kept.iter().flat_map(|p| p.centered.iter()).map(|d| d * d).sum();
    let pooled_sigma = (ss / dof as f64).sqrt();
    Ok(MatchedPairResult {
        pairs: kept,
        skipped,
        pooled_sigma,
        random_sigma: pooled_sigma / std::f64::consts::SQRT_2,
        samples,
    })
}

/// Sample standard deviation (n − 1).
pub fn sample_std(values: &[f64]) -> Option<f64> {
    if values.len() < 2 {
        return None;
    }
    let m = values.iter().sum::<f64>() / values.len() as f64;
    let ss: f64 = values.iter().map(|v| (v - m) * (v - m)).sum();
    Some((ss / (values.len() - 1) as f64).sqrt())
}

/// Std of each named quantity across devices.
pub fn per_gate_std(values: &[BTreeMap<String, f64>], names: &[String]) -> BTreeMap<String, f64> {
    names
        .iter()
        .filter_map(|n| {
            let v: Vec<f64> = values.iter().filter_map(|m| m.get(n).copied()).collect();
            sample_std(&v).map(|s| (n.clone(), s))
        })
        .collect()
}
