use serde::{Deserialize, Serialize};

use crate::wafer::{DeviceLayout, DotId, GateId};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScanKind {
    BarrierBarrier,
    PlungerVsBarriers,
    PlungerPlunger,
}

impl ScanKind {
    pub const ALL: [ScanKind; 3] = [
        ScanKind::BarrierBarrier,
        ScanKind::PlungerVsBarriers,
        ScanKind::PlungerPlunger,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ScanKind::BarrierBarrier => "barrier-barrier",
            ScanKind::PlungerVsBarriers => "plunger-vs-barriers",
            ScanKind::PlungerPlunger => "plunger-plunger",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.as_str() == s)
    }

    /// Transport scans report amps, sensing scans lock-in units.
    pub fn units(self) -> &'static str {
        match self {
            ScanKind::BarrierBarrier => "A",
            _ => "lockin-au",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScanTarget {
    Dot(DotId),
    DotPair(DotId, DotId),
}

impl ScanTarget {
    pub fn primary(self) -> DotId {
        match self {
            ScanTarget::Dot(d) | ScanTarget::DotPair(d, _) => d,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateRamp {
    pub gate: GateId,
    pub start: f64,
    pub stop: f64,
}

/// One raster axis: every listed gate moves together, each over its own range.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub ramps: Vec<GateRamp>,
    pub points: usize,
}

impl Axis {
    pub fn single(gate: GateId, start: f64, stop: f64, points: usize) -> Self {
        Axis {
            ramps: vec![GateRamp { gate, start, stop }],
            points,
        }
    }

    pub fn voltage(&self, ramp: usize, i: usize) -> f64 {
        let r = &self.ramps[ramp];
        if i + 1 == self.points {
            return r.stop;
        }
        r.start + (r.stop - r.start) * i as f64 / (self.points - 1) as f64
    }

    /// Voltages of the first (reported) gate of the axis.
    pub fn values(&self) -> Vec<f64> {
        (0..self.points).map(|i| self.voltage(0, i)).collect()
    }

    pub fn step(&self) -> f64 {
        let r = &self.ramps[0];
        (r.stop - r.start) / (self.points - 1) as f64
    }

    fn validate(&self, what: &str, layout: &DeviceLayout) -> Result<()> {
        if self.points < 2 {
            return Err(Error::validation(format!("{what} axis needs at least 2 points")));
        }
        if self.ramps.is_empty() {
            return Err(Error::validation(format!("{what} axis has no gates")));
        }
        for r in &self.ramps {
            layout.gate(r.gate)?;
            if !(r.start < r.stop) || !r.start.is_finite() || !r.stop.is_finite() {
                return Err(Error::validation(format!(
                    "{what} axis on {} needs start < stop",
                    layout.gate_name(r.gate)
                )));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanPlan {
    pub kind: ScanKind,
    pub target: ScanTarget,
    /// Inner (column) axis.
    pub swept: Axis,
    /// Outer (row) axis.
    pub stepped: Axis,
    /// Voltages of every gate not on an axis.
    pub fixed: Vec<f64>,
    pub lockin_frequency: f64,
    pub bias: f64,
}

impl ScanPlan {
    pub fn rows(&self) -> usize {
        self.stepped.points
    }

    pub fn cols(&self) -> usize {
        self.swept.points
    }

    pub fn validate(&self, layout: &DeviceLayout) -> Result<()> {
        self.swept.validate("swept", layout)?;
        self.stepped.validate("stepped", layout)?;
        if self.fixed.len() != layout.gates.len() {
            return Err(Error::validation(format!(
                "plan fixes {} gate voltages, layout has {} gates",
                self.fixed.len(),
                layout.gates.len()
            )));
        }
        match self.target {
            ScanTarget::Dot(d) => {
                layout.dot(d)?;
            }
            ScanTarget::DotPair(a, b) => {
                layout.dot(a)?;
                layout.dot(b)?;
            }
        }
        if !(self.lockin_frequency > 0.0) {
            return Err(Error::validation("lock-in frequency must be positive"));
        }
        Ok(())
    }

    /// Gate voltages applied at raster position (row, col).
    pub fn voltages_at(&self, row: usize, col: usize, out: &mut [f64]) {
        out.copy_from_slice(&self.fixed);
        for (k, r) in self.stepped.ramps.iter().enumerate() {
            out[r.gate.0] = self.stepped.voltage(k, row);
        }
        for (k, r) in self.swept.ramps.iter().enumerate() {
            out[r.gate.0] = self.swept.voltage(k, col);
        }
    }
}

/// Where a scan was taken.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ScanOrigin {
    pub wafer: String,
    pub die: usize,
    pub die_col: u32,
    pub die_row: u32,
    pub device: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanGrid {
    pub plan: ScanPlan,
    pub origin: ScanOrigin,
    /// Row-major, `rows × cols`; rows follow the stepped axis.
    pub values: Vec<f64>,
}

impl ScanGrid {
    pub fn rows(&self) -> usize {
        self.plan.rows()
    }

    pub fn cols(&self) -> usize {
        self.plan.cols()
    }

    pub fn value(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.cols() + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        let c = self.cols();
        &self.values[row * c..(row + 1) * c]
    }

    pub fn swept_values(&self) -> Vec<f64> {
        self.plan.swept.values()
    }

    pub fn stepped_values(&self) -> Vec<f64> {
        self.plan.stepped.values()
    }

    pub fn units(&self) -> &'static str {
        self.plan.kind.units()
    }

    /// Same plan and origin, different values.
    pub fn with_values(&self, values: Vec<f64>) -> ScanGrid {
        assert_eq!(values.len(), self.values.len());
        ScanGrid {
            plan: self.plan.clone(),
            origin: self.origin.clone(),
            values,
        }
    }
}
