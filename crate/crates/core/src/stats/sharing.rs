use serde::{Deserialize, Serialize};

use crate::analysis::TransitionSummary;
use crate::{Error, Result};

/// Charge-state counts of one device at a common plunger voltage.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeviceSharing {
    pub device: String,
    pub common_voltage: f64,
    pub zero: usize,
    pub one: usize,
    pub many: usize,
    /// Dots left out for lacking a 1e or 2e voltage.
    pub excluded: usize,
}

impl DeviceSharing {
    pub fn used(&self) -> usize {
        self.zero + self.one + self.many
    }

    /// (n = 0, n = 1, n ≥ 2) fractions over the dots with data.
    pub fn fractions(&self) -> (f64, f64, f64) {
        let n = self.used() as f64;
        (self.zero as f64 / n, self.one as f64 / n, self.many as f64 / n)
    }

    pub fn success(&self) -> f64 {
        self.one as f64 / self.used() as f64
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VoltageSharingResult {
    pub devices: Vec<DeviceSharing>,
    /// Devices with no dot carrying both voltages.
    pub excluded_devices: Vec<String>,
    pub median_success: Option<f64>,
}

/// Number of dots left at exactly one electron by a common plunger voltage.
pub fn count_single(points: &[(f64, f64)], v: f64) -> usize {
    points.iter().filter(|&&(v1, v2)| !(v1 > v) && !(v2 < v)).count()
}

/// Candidate common voltages: every breakpoint and every midpoint between
/// consecutive breakpoints. The objective only changes at breakpoints, so the
/// optimum is attained on this set.
fn candidates(points: &[(f64, f64)]) -> Vec<f64> {
    let mut b: Vec<f64> = points.iter().flat_map(|&(a, c)| [a, c]).collect();
    b.sort_by(f64::total_cmp);
    b.dedup();
    let mut out = b.clone();
    out.extend(b.windows(2).map(|w| 0.5 * (w[0] + w[1])));
    out.sort_by(f64::total_cmp);
    out
}

/// Optimal common voltage for one device; ties go to the lowest voltage.
pub fn optimal_common_voltage(points: &[(f64, f64)]) -> Option<(f64, usize)> {
    let mut best: Option<(f64, usize)> = None;
    for v in candidates(points) {
        let n = count_single(points, v);
        if best.is_none_or(|(_, bn)| n > bn) {
            best = Some((v, n));
        }
    }
    best
}

/// Sorts every dot of a device into n = 0, 1 or ≥ 2 at the device's optimal
/// common voltage.
pub fn share_device(device: &str, summaries: &[TransitionSummary]) -> Option<DeviceSharing> {
    let points: Vec<(f64, f64)> = summaries.iter().filter_map(|s| s.v1e.zip(s.v2e)).collect();
    let excluded = summaries.len() - points.len();
    let (v, one) = optimal_common_voltage(&points)?;
    let zero = points.iter().filter(|p| p.0 > v).count();
    Some(DeviceSharing {
        device: device.to_string(),
        common_voltage: v,
        zero,
        one,
        many: points.len() - zero - one,
        excluded,
    })
}

pub fn voltage_sharing(devices: &[(String, Vec<TransitionSummary>)]) -> Result<VoltageSharingResult> {
    if devices.is_empty() {
        return Err(Error::InsufficientData("no devices".into()));
    }
    let mut out = Vec::new();
    let mut excluded_devices = Vec::new();
    for (name, s) in devices {
        match share_device(name, s) {
            Some(d) => out.push(d),
            None => excluded_devices.push(name.clone()),
        }
    }
    let median_success = (!out.is_empty()).then(|| {
        let v: Vec<f64> = out.iter().map(DeviceSharing::success).collect();
        crate::analysis::median(&v)
    });
    Ok(VoltageSharingResult {
        devices: out,
        excluded_devices,
        median_success,
    })
}
