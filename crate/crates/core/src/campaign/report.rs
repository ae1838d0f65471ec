use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::analysis::{median_addition, validate_margin, TransitionSummary};
use crate::stats::*;
use crate::tuneup::{DeviceRecord, RECORD_SCHEMA_VERSION};
use crate::wafer::{mirror_pairs, DeviceLayout, GateRole, WAFER_SCHEMA_VERSION};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub config_hash: String,
    pub wafer_id: String,
    pub seed: u64,
    pub tool_version: String,
    pub record_schema: u32,
    pub scan_schema: u32,
    pub wafer_schema: u32,
}

impl Provenance {
    pub fn new(config_hash: String, wafer_id: String, seed: u64) -> Self {
        Provenance {
            config_hash,
            wafer_id,
            seed,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            record_schema: RECORD_SCHEMA_VERSION,
            scan_schema: crate::instrument::SCAN_FORMAT_VERSION,
            wafer_schema: WAFER_SCHEMA_VERSION,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateVtStats {
    pub gate: String,
    pub role: GateRole,
    pub stats: MetricStats,
}

/// A stored scan that could not be used.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanFlag {
    pub device: String,
    pub file: String,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarginSummary {
    pub median_addition: f64,
    pub passed: usize,
    pub total: usize,
}

impl MarginSummary {
    pub fn fraction(&self) -> f64 {
        self.passed as f64 / self.total as f64
    }
}

/// One charge-sensing scan of the campaign.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DotRow {
    pub device: String,
    pub die: usize,
    pub die_col: u32,
    pub die_row: u32,
    pub device_index: usize,
    pub dot: String,
    pub scan: String,
    pub summary: TransitionSummary,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CampaignReport {
    pub schema_version: u32,
    pub provenance: Provenance,
    pub devices: usize,
    pub yields: Option<YieldRollup>,
    /// Per gate position, in layout order.
    pub vt: Vec<GateVtStats>,
    pub vt_matched: Option<MatchedPairResult>,
    pub one_electron: Option<OneElectronReport>,
    pub margin: Option<MarginSummary>,
    pub sharing: Option<VoltageSharingResult>,
    pub scans_attempted: usize,
    pub scans_successful: usize,
    pub success_rate: Option<f64>,
    pub scan_flags: Vec<ScanFlag>,
    pub dots: Vec<DotRow>,
}

pub fn device_label(r: &DeviceRecord) -> String {
    format!("die-{:02}-{:02}/dev-{}", r.identity.die_col, r.identity.die_row, r.identity.device)
}

/// Sensing summaries of every attempted scan; an unanalyzable scan counts as
/// a failed one.
fn attempted(r: &DeviceRecord) -> impl Iterator<Item = (&str, &str, TransitionSummary)> {
    r.dots.iter().filter_map(|d| {
        let s = d.sensing.as_ref()?;
        let scan = s.scan.as_deref()?;
        Some((d.name.as_str(), scan, s.summary.clone().unwrap_or_default()))
    })
}

pub fn build_report(
    records: &[DeviceRecord],
    layout: &DeviceLayout,
    provenance: Provenance,
    scan_flags: Vec<ScanFlag>,
) -> CampaignReport {
    let yields = yield_rollup(records).ok();

    let gate_maps: Vec<BTreeMap<String, f64>> = records
        .iter()
        .map(|r| {
            r.gates
                .iter()
                .filter(|g| g.role != GateRole::Screening)
                .filter_map(|g| g.vt.map(|v| (g.name.clone(), v)))
                .collect()
        })
        .collect();
    let vt = layout
        .gates
        .iter()
        .filter(|g| g.role != GateRole::Screening)
        .map(|g| {
            let v: Vec<f64> = gate_maps.iter().filter_map(|m| m.get(&g.name).copied()).collect();
            GateVtStats {
                gate: g.name.clone(),
                role: g.role,
                stats: MetricStats::of(&v, DEFAULT_BINS),
            }
        })
        .collect();
    let vt_pairs: Vec<(String, String)> = mirror_pairs(layout)
        .map(|p| {
            p.into_iter()
                .map(|(a, b)| (layout.gate_name(a).to_string(), layout.gate_name(b).to_string()))
                .collect()
        })
        .unwrap_or_default();
    let vt_matched = matched_pair_sigma(&gate_maps, &vt_pairs).ok();

    let mut dots = Vec::new();
    let mut per_device: Vec<BTreeMap<String, TransitionSummary>> = Vec::new();
    let mut sharing_input = Vec::new();
    for r in records {
        let mut m = BTreeMap::new();
        for (dot, scan, s) in attempted(r) {
            dots.push(DotRow {
                device: device_label(r),
                die: r.identity.die,
                die_col: r.identity.die_col,
                die_row: r.identity.die_row,
                device_index: r.identity.device,
                dot: dot.to_string(),
                scan: scan.to_string(),
                summary: s.clone(),
            });
            m.insert(dot.to_string(), s);
        }
        if !m.is_empty() {
            sharing_input.push((device_label(r), m.values().cloned().collect::<Vec<_>>()));
            per_device.push(m);
        }
    }
    let summaries: Vec<TransitionSummary> = dots.iter().map(|d| d.summary.clone()).collect();
    let scans_successful = summaries.iter().filter(|s| s.success).count();
    let success_rate = success_rate(&summaries).ok();
    let one_electron = one_electron_statistics(&per_device, layout, DEFAULT_BINS).ok();
    let margin = median_addition(&summaries).ok().and_then(|med| {
        let verdicts = validate_margin(&summaries).ok()?;
        let total = verdicts.iter().flatten().count();
        (total > 0).then(|| MarginSummary {
            median_addition: med,
            passed: verdicts.iter().flatten().filter(|&&p| p).count(),
            total,
        })
    });
    let sharing = voltage_sharing(&sharing_input).ok();

    CampaignReport {
        schema_version: REPORT_SCHEMA_VERSION,
        provenance,
        devices: records.len(),
        yields,
        vt,
        vt_matched,
        one_electron,
        margin,
        sharing,
        scans_attempted: summaries.len(),
        scans_successful,
        success_rate,
        scan_flags,
        dots,
    }
}
