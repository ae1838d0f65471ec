use serde::{Deserialize, Serialize};

use super::layout::{GateRole, LayoutKind};
use crate::{Error, Result};

pub const SUPPORTED_BARRIER_DEPTHS_NM: [u32; 2] = [30, 50];

/// Everything needed to generate a wafer. Missing TOML keys fall back to the
/// calibrated 50 nm defaults.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WaferSpec {
    pub name: String,
    pub die_count: usize,
    pub devices_per_die: usize,
    pub die_pitch_mm: f64,
    pub barrier_depth_nm: u32,
    pub seed: u64,
    pub layout: LayoutKind,
    /// `None` selects the calibrated disorder for `barrier_depth_nm`.
    pub disorder: Option<DisorderModel>,
    pub device: DeviceModel,
    pub faults: Vec<InjectedFault>,
}

impl Default for WaferSpec {
    fn default() -> Self {
        WaferSpec {
            name: "wafer".into(),
            die_count: 58,
            devices_per_die: 4,
            die_pitch_mm: 30.0,
            barrier_depth_nm: 50,
            seed: 0,
            layout: LayoutKind::TwelveQd,
            disorder: None,
            device: DeviceModel::default(),
            faults: Vec::new(),
        }
    }
}

impl WaferSpec {
    pub fn id(&self) -> String {
        format!("{}-s{}", self.name, self.seed)
    }

    /// Calibrated wafer with the scripted yield fixture.
    pub fn calibrated(barrier_depth_nm: u32, seed: u64) -> Self {
        WaferSpec {
            name: format!("calibrated-{barrier_depth_nm}nm"),
            barrier_depth_nm,
            seed,
            faults: yield_fixture_faults(),
            ..Default::default()
        }
    }

    pub fn resolved_disorder(&self) -> DisorderModel {
        self.disorder
            .clone()
            .unwrap_or_else(|| DisorderModel::calibrated(self.barrier_depth_nm))
    }

    pub fn validate(&self) -> Result<()> {
        if self.die_count < 1 {
            return Err(Error::validation("die_count must be at least 1"));
        }
        if self.devices_per_die < 1 {
            return Err(Error::validation("devices_per_die must be at least 1"));
        }
        if !(self.die_pitch_mm > 0.0) {
            return Err(Error::validation("die_pitch_mm must be positive"));
        }
        if !SUPPORTED_BARRIER_DEPTHS_NM.contains(&self.barrier_depth_nm) {
            return Err(Error::validation(format!(
                "barrier depth {} nm not in {:?}",
                self.barrier_depth_nm, SUPPORTED_BARRIER_DEPTHS_NM
            )));
        }
        self.resolved_disorder().validate()?;
        self.device.validate()?;
        for f in &self.faults {
            let (die, device) = f.site();
            if die >= self.die_count || device >= self.devices_per_die {
                return Err(Error::validation(format!(
                    "fault targets die {die} device {device} outside the wafer"
                )));
            }
        }
        if !self.faults.is_empty() {
            let layout = self.layout.build();
            for f in &self.faults {
                match f {
                    InjectedFault::DeadOhmic { ohmic, .. } if !layout.ohmics.contains(ohmic) => {
                        return Err(Error::validation(format!("unknown ohmic {ohmic}")));
                    }
                    InjectedFault::DeadGate { gate, .. } => {
                        layout.gate_by_name(gate)?;
                    }
                    InjectedFault::LeakyDot { dot, .. } if layout.dot_by_name(dot).is_none() => {
                        return Err(Error::validation(format!("unknown dot {dot}")));
                    }
                    _ => {}
                }
            }
        }
        Ok(())
    }
}

/// `c0 + cx·u + cy·v + cxx·u² + cxy·u·v + cyy·v²` with `u = x / 150 mm`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Polynomial2 {
    pub c0: f64,
    pub cx: f64,
    pub cy: f64,
    pub cxx: f64,
    pub cxy: f64,
    pub cyy: f64,
}

pub const WAFER_RADIUS_MM: f64 = 150.0;

impl Polynomial2 {
    pub fn eval_mm(&self, x_mm: f64, y_mm: f64) -> f64 {
        let u = x_mm / WAFER_RADIUS_MM;
        let v = y_mm / WAFER_RADIUS_MM;
        self.c0 + self.cx * u + self.cy * v + self.cxx * u * u + self.cxy * u * v + self.cyy * v * v
    }

    /// Linear gradient giving `span` volts from one wafer edge to the other.
    pub fn edge_to_edge_x(span: f64) -> Self {
        Polynomial2 {
            cx: span / 2.0,
            ..Default::default()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RoleBaseline {
    pub plunger: f64,
    pub barrier: f64,
    pub reservoir: f64,
    /// Voltage below which the screening gate stops coupling the channels.
    pub screening: f64,
}

impl Default for RoleBaseline {
    fn default() -> Self {
        RoleBaseline {
            plunger: 1.0,
            barrier: 0.9,
            reservoir: 1.1,
            screening: 0.6,
        }
    }
}

impl RoleBaseline {
    pub fn get(&self, role: GateRole) -> f64 {
        match role {
            GateRole::Plunger => self.plunger,
            GateRole::Barrier => self.barrier,
            GateRole::Reservoir => self.reservoir,
            GateRole::Screening => self.screening,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FaultRates {
    pub ohmic: f64,
    pub gate: f64,
    pub dot: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DisorderModel {
    pub systematic: Polynomial2,
    pub role_baseline: RoleBaseline,
    pub random_sigma_vt: f64,
    /// Dot-to-dot scatter of the first transition beyond the plunger VT.
    pub dot_random_sigma_v1e: f64,
    /// Mean of `v1e - plunger VT` at the barrier reference point.
    pub v1e_offset: f64,
    pub addition_voltage_mean: f64,
    pub addition_voltage_sigma: f64,
    /// Barrier offset above the corner where the tunnel rate reaches 1 kHz.
    pub cutoff_offset_mean: f64,
    pub cutoff_offset_sigma: f64,
    /// Cutoff draws are truncated at this many sigmas.
    pub cutoff_offset_truncation: f64,
    pub fault_rates: FaultRates,
}

impl Default for DisorderModel {
    fn default() -> Self {
        Self::calibrated(50)
    }
}

impl DisorderModel {
    /// Disorder tuned so the simulated statistics land on the measured
    /// 30 nm / 50 nm barrier wafers.
    pub fn calibrated(barrier_depth_nm: u32) -> Self {
        let systematic = Polynomial2 {
            c0: 0.0,
            cx: 0.035,
            cy: -0.02,
            cxx: 0.05,
            cxy: 0.0,
            cyy: 0.04,
        };
        let base = DisorderModel {
            systematic,
            role_baseline: RoleBaseline::default(),
            random_sigma_vt: 0.058,
            dot_random_sigma_v1e: 0.015,
            v1e_offset: -0.017,
            addition_voltage_mean: 0.079,
            addition_voltage_sigma: 0.007,
            cutoff_offset_mean: 0.03,
            cutoff_offset_sigma: 0.0756,
            cutoff_offset_truncation: 2.0,
            fault_rates: FaultRates::default(),
        };
        if barrier_depth_nm == 30 {
            DisorderModel {
                dot_random_sigma_v1e: 0.011,
                addition_voltage_mean: 0.059,
                addition_voltage_sigma: 0.006,
                cutoff_offset_mean: 0.035,
                cutoff_offset_sigma: 0.066,
                ..base
            }
        } else {
            base
        }
    }

    /// No disorder at all: every gate of a role shares one VT.
    pub fn uniform() -> Self {
        DisorderModel {
            systematic: Polynomial2::default(),
            random_sigma_vt: 0.0,
            dot_random_sigma_v1e: 0.0,
            addition_voltage_sigma: 0.0,
            cutoff_offset_sigma: 0.0,
            ..Self::calibrated(50)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let sigmas = [
            ("random_sigma_vt", self.random_sigma_vt),
            ("dot_random_sigma_v1e", self.dot_random_sigma_v1e),
            ("addition_voltage_sigma", self.addition_voltage_sigma),
            ("cutoff_offset_sigma", self.cutoff_offset_sigma),
        ];
        for (name, s) in sigmas {
            if !(s >= 0.0) {
                return Err(Error::validation(format!("{name} must be >= 0")));
            }
        }
        if !(self.addition_voltage_mean > 0.0) {
            return Err(Error::validation("addition_voltage_mean must be positive"));
        }
        if !(self.cutoff_offset_truncation > 0.0) {
            return Err(Error::validation("cutoff_offset_truncation must be positive"));
        }
        let r = self.fault_rates;
        for (name, p) in [("ohmic", r.ohmic), ("gate", r.gate), ("dot", r.dot)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::validation(format!("fault rate {name} outside [0, 1]")));
            }
        }
        Ok(())
    }
}

/// Physical constants shared by every device on the wafer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeviceModel {
    pub pinchoff_width: f64,
    /// Saturated channel current at 1 mV bias (A).
    pub on_current: f64,
    pub plunger_lever_arm: f64,
    /// Barrier lever arm as a fraction of the plunger lever arm.
    pub barrier_ratio: f64,
    /// Neighbouring plunger lever arm as a fraction of the plunger lever arm.
    pub neighbor_ratio: f64,
    /// Voltage scale of the exponential tunnel-rate dependence.
    pub tunnel_rate_scale: f64,
    pub coupling_max: f64,
    pub coupling_width: f64,
    /// Range of the anomalously low VT given to a gate of a leaky dot.
    pub leaky_vt_range: (f64, f64),
    /// Separation of the die's devices along x (mm).
    pub device_pitch_mm: f64,
}

impl Default for DeviceModel {
    fn default() -> Self {
        DeviceModel {
            pinchoff_width: 0.03,
            on_current: 50e-9,
            plunger_lever_arm: 0.08,
            barrier_ratio: 0.25,
            neighbor_ratio: 0.2,
            tunnel_rate_scale: 0.015,
            coupling_max: 0.2,
            coupling_width: 0.05,
            leaky_vt_range: (0.15, 0.28),
            device_pitch_mm: 2.0,
        }
    }
}

impl DeviceModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.pinchoff_width > 0.0) {
            return Err(Error::validation("pinchoff_width must be positive"));
        }
        if !(self.on_current > 0.0) {
            return Err(Error::validation("on_current must be positive"));
        }
        let a = self.plunger_lever_arm;
        if !(a > 0.0 && a <= 1.0) {
            return Err(Error::validation("plunger_lever_arm must lie in (0, 1]"));
        }
        for (name, r) in [("barrier_ratio", self.barrier_ratio), ("neighbor_ratio", self.neighbor_ratio)] {
            if !(r >= 0.0 && r * a <= 1.0) {
                return Err(Error::validation(format!("{name} gives a lever arm outside [0, 1]")));
            }
        }
        if !(self.tunnel_rate_scale > 0.0 && self.coupling_width > 0.0) {
            return Err(Error::validation("tunnel_rate_scale and coupling_width must be positive"));
        }
        if !(self.coupling_max >= 0.0) {
            return Err(Error::validation("coupling_max must be >= 0"));
        }
        Ok(())
    }
}

/// A component failure placed at a fixed site.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InjectedFault {
    /// Contact that never conducts; its channel carries no current.
    DeadOhmic { die: usize, device: usize, ohmic: String },
    /// Gate that does not respond to its voltage.
    DeadGate { die: usize, device: usize, gate: String },
    /// Dot whose confinement leaks: one of its gates has an anomalously low VT.
    LeakyDot { die: usize, device: usize, dot: String },
}

impl InjectedFault {
    pub fn site(&self) -> (usize, usize) {
        match *self {
            InjectedFault::DeadOhmic { die, device, .. }
            | InjectedFault::DeadGate { die, device, .. }
            | InjectedFault::LeakyDot { die, device, .. } => (die, device),
        }
    }
}

/// Nine sensor dots failing on nine distinct devices, everything else intact.
pub fn yield_fixture_faults() -> Vec<InjectedFault> {
    const SITES: [(usize, usize, &str); 9] = [
        (3, 1, "S2"),
        (9, 2, "S4"),
        (14, 3, "S1"),
        (20, 1, "S3"),
        (27, 1, "S1"),
        (33, 2, "S2"),
        (41, 3, "S4"),
        (48, 3, "S2"),
        (55, 2, "S3"),
    ];
    SITES
        .iter()
        .map(|&(die, device, dot)| InjectedFault::LeakyDot {
            die,
            device,
            dot: dot.to_string(),
        })
        .collect()
}
