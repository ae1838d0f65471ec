use serde::{Deserialize, Serialize};

use super::iv::VtFault;
use crate::Error;

/// Why a tune-up stage did not produce a usable result for a component.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, thiserror::Error)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TuneupFault {
    #[error("channel did not turn on: {fault}")]
    ChannelOff { fault: VtFault },
    #[error("cross-conductance still above the noise floor at {floor} V")]
    NotIsolated { floor: f64 },
    #[error("no screening gate in the layout")]
    NoScreeningGate,
    #[error("equalization did not converge (gates {gates:?})")]
    NotEqualized { gates: Vec<String> },
    #[error("scan is flat (span {span:e} A)")]
    FlatScan { span: f64 },
    #[error("corner fit residual {residual:.3} too large")]
    FitResidual { residual: f64 },
    #[error("corner ({c1:.4}, {c2:.4}) V outside the scanned window")]
    CornerOutsideWindow { c1: f64, c2: f64 },
    #[error("skipped: {reason}")]
    Skipped { reason: String },
    #[error("instrument error: {message}")]
    Instrument { message: String },
}

impl TuneupFault {
    pub fn skipped(reason: impl Into<String>) -> Self {
        TuneupFault::Skipped { reason: reason.into() }
    }
}

impl From<Error> for TuneupFault {
    fn from(e: Error) -> Self {
        TuneupFault::Instrument { message: e.to_string() }
    }
}
