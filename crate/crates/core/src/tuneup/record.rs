use std::path::Path;

use serde::{Deserialize, Serialize};

use super::fault::TuneupFault;
use super::iv::VtFault;
use crate::analysis::TransitionSummary;
use crate::instrument::ScanKind;
use crate::wafer::{ChannelKind, GateRole};
use crate::{Error, Result};

pub const RECORD_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeviceIdentity {
    pub wafer: String,
    pub seed: u64,
    pub die: usize,
    pub die_col: u32,
    pub die_row: u32,
    pub device: usize,
    pub x_mm: f64,
    pub y_mm: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OhmicRecord {
    pub name: String,
    pub conductance: f64,
    pub ok: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelRecord {
    pub name: String,
    pub kind: ChannelKind,
    pub vt: Option<f64>,
    pub fault: Option<TuneupFault>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IsolationRecord {
    pub voltage: Option<f64>,
    pub fault: Option<TuneupFault>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateRecord {
    pub name: String,
    pub role: GateRole,
    /// Channel the gate sits over, `None` for the screening gate.
    pub channel: Option<String>,
    pub vt: Option<f64>,
    pub fault: Option<VtFault>,
    /// Equalized operating voltage.
    pub setpoint: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EqualizationRecord {
    pub channel: String,
    pub passes: usize,
    pub fault: Option<TuneupFault>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanRef {
    pub kind: ScanKind,
    pub index: usize,
    /// Dot name, or "A-B" for a pair.
    pub target: String,
    /// Path relative to the device directory.
    pub file: String,
}

impl ScanRef {
    pub fn new(kind: ScanKind, index: usize, target: String) -> Self {
        ScanRef {
            kind,
            index,
            target,
            file: format!("scans/{}-{:02}.csv", kind.as_str(), index),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SensingRecord {
    pub sensor: String,
    /// `None` if the scan was not taken.
    pub scan: Option<String>,
    pub summary: Option<TransitionSummary>,
    pub fault: Option<TuneupFault>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DotRecord {
    pub name: String,
    pub kind: ChannelKind,
    /// Fitted (first barrier, second barrier) corner voltages.
    pub corner: Option<(f64, f64)>,
    pub corner_residual: Option<f64>,
    pub fault: Option<TuneupFault>,
    pub sensing: Option<SensingRecord>,
}

impl DotRecord {
    pub fn corner_ok(&self) -> bool {
        self.corner.is_some() && self.fault.is_none()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeviceRecord {
    pub schema_version: u32,
    pub identity: DeviceIdentity,
    pub ohmics: Vec<OhmicRecord>,
    pub channels: Vec<ChannelRecord>,
    pub isolation: IsolationRecord,
    pub gates: Vec<GateRecord>,
    pub equalization: Vec<EqualizationRecord>,
    pub dots: Vec<DotRecord>,
    pub scans: Vec<ScanRef>,
}

impl DeviceRecord {
    pub fn gate(&self, name: &str) -> Option<&GateRecord> {
        self.gates.iter().find(|g| g.name == name)
    }

    pub fn dot(&self, name: &str) -> Option<&DotRecord> {
        self.dots.iter().find(|d| d.name == name)
    }

    pub fn channel(&self, name: &str) -> Option<&ChannelRecord> {
        self.channels.iter().find(|c| c.name == name)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("record serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str, path: &Path) -> Result<Self> {
        #[derive(Deserialize)]
        struct Version {
            schema_version: u32,
        }
        let v: Version = serde_json::from_str(text).map_err(|e| Error::Json {
            path: path.to_path_buf(),
            source: e,
        })?;
        if v.schema_version != RECORD_SCHEMA_VERSION {
            return Err(Error::SchemaVersion {
                what: format!("device record {}", path.display()),
                found: v.schema_version,
                expected: RECORD_SCHEMA_VERSION,
            });
        }
        serde_json::from_str(text).map_err(|e| Error::Json {
            path: path.to_path_buf(),
            source: e,
        })
    }
}
