use serde::{Deserialize, Serialize};

use crate::wafer::GateId;

/// Current criterion defining the threshold voltage (A).
pub const DEFAULT_VT_THRESHOLD: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IvCurve {
    /// `None` for a whole-channel ramp.
    pub gate: Option<GateId>,
    pub voltages: Vec<f64>,
    pub currents: Vec<f64>,
    pub bias: f64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize, thiserror::Error)]
#[serde(rename_all = "kebab-case")]
pub enum VtFault {
    #[error("current never reaches the threshold")]
    NoTurnOn,
    #[error("current is above the threshold over the whole sweep")]
    AlwaysOn,
    #[error("invalid curve: {0}")]
    Invalid(String),
}

/// Linearly interpolated voltage of the first upward crossing of `threshold`.
pub fn extract_vt(curve: &IvCurve, threshold: f64) -> Result<f64, VtFault> {
    let (v, i) = (&curve.voltages, &curve.currents);
    if v.len() != i.len() || v.len() < 2 {
        return Err(VtFault::Invalid("needs at least two matching samples".into()));
    }
    if v.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(VtFault::Invalid("voltages must increase strictly".into()));
    }
    for k in 0..v.len() - 1 {
        if i[k] < threshold && i[k + 1] >= threshold {
            let f = (threshold - i[k]) / (i[k + 1] - i[k]);
            return Ok(v[k] + f * (v[k + 1] - v[k]));
        }
    }
    if i.iter().all(|&x| x >= threshold) {
        Err(VtFault::AlwaysOn)
    } else {
        Err(VtFault::NoTurnOn)
    }
}
