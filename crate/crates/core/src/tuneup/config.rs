use serde::{Deserialize, Serialize};

use crate::analysis::AnalysisConfig;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OhmicConfig {
    /// Voltage on every channel gate while the contacts are checked.
    pub gate_voltage: f64,
    /// Bias swept symmetrically over ±`bias_span`.
    pub bias_span: f64,
    pub points: usize,
    /// Minimum fitted conductance as a fraction of the saturated conductance.
    pub min_conductance_fraction: f64,
    pub min_r_squared: f64,
}

impl Default for OhmicConfig {
    fn default() -> Self {
        OhmicConfig {
            gate_voltage: 2.0,
            bias_span: 1e-3,
            points: 5,
            min_conductance_fraction: 0.1,
            min_r_squared: 0.99,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TurnOnConfig {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
    /// Channel gates are parked this far above the channel VT afterwards.
    pub offset: f64,
}

impl Default for TurnOnConfig {
    fn default() -> Self {
        TurnOnConfig {
            start: 0.0,
            stop: 2.0,
            points: 201,
            offset: 0.25,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GateIvConfig {
    /// Sweep runs over [channel VT − below, channel VT + above].
    pub below: f64,
    pub above: f64,
    pub step: f64,
}

impl Default for GateIvConfig {
    fn default() -> Self {
        GateIvConfig {
            below: 1.2,
            above: 0.3,
            step: 0.005,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IsolationConfig {
    pub start: f64,
    pub step: f64,
    pub floor: f64,
    pub noise_floor: f64,
}

impl Default for IsolationConfig {
    fn default() -> Self {
        IsolationConfig {
            start: 1.0,
            step: 0.02,
            floor: -0.5,
            noise_floor: 1e-3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EqualizeConfig {
    /// Target normalised transconductance (dI/dV)/I, 1/V.
    pub target: f64,
    /// Relative half-width of the accepted band.
    pub band: f64,
    pub increment: f64,
    /// Half-step of the symmetric finite difference.
    pub half_step: f64,
    /// Per-gate step budget within one pass.
    pub max_steps: usize,
    pub max_passes: usize,
}

impl Default for EqualizeConfig {
    fn default() -> Self {
        EqualizeConfig {
            target: 3.33,
            band: 0.25,
            increment: 0.01,
            half_step: 0.002,
            max_steps: 60,
            max_passes: 5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CornerConfig {
    /// Barrier window [VT − below, VT + above].
    pub below: f64,
    pub above: f64,
    pub points: usize,
    /// Plunger parked this far above its VT during the scan.
    pub plunger_offset: f64,
    pub max_residual: f64,
    /// Scans whose current span is below this are flat (A).
    pub min_span: f64,
}

impl Default for CornerConfig {
    fn default() -> Self {
        CornerConfig {
            below: 0.15,
            above: 0.35,
            points: 31,
            plunger_offset: 0.15,
            max_residual: 0.05,
            min_span: 0.1e-9,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SensingConfig {
    pub plunger_half_window: f64,
    pub plunger_points: usize,
    /// Window center above the fitted corner, applied to both barriers.
    pub barrier_offset: f64,
    pub barrier_half_window: f64,
    pub barrier_points: usize,
    /// Unused sensors are pinched this far below their plunger VT.
    pub pinch_offset: f64,
}

impl Default for SensingConfig {
    fn default() -> Self {
        SensingConfig {
            plunger_half_window: 0.15,
            plunger_points: 101,
            barrier_offset: 0.10,
            barrier_half_window: 0.25,
            barrier_points: 41,
            pinch_offset: 0.3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DqdConfig {
    pub enabled: bool,
    pub plunger_half_window: f64,
    pub points: usize,
    /// Barriers held this far above their corners.
    pub barrier_offset: f64,
}

impl Default for DqdConfig {
    fn default() -> Self {
        DqdConfig {
            enabled: false,
            plunger_half_window: 0.15,
            points: 61,
            barrier_offset: 0.15,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub vt_threshold: f64,
    pub bias: f64,
    /// Whether this device gets charge-sensing scans.
    pub charge_sensing: bool,
    pub ohmic: OhmicConfig,
    pub turn_on: TurnOnConfig,
    pub gate_iv: GateIvConfig,
    pub isolation: IsolationConfig,
    pub equalize: EqualizeConfig,
    pub corner: CornerConfig,
    pub sensing: SensingConfig,
    pub dqd: DqdConfig,
    pub analysis: AnalysisConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            vt_threshold: super::iv::DEFAULT_VT_THRESHOLD,
            bias: 1e-3,
            charge_sensing: true,
            ohmic: OhmicConfig::default(),
            turn_on: TurnOnConfig::default(),
            gate_iv: GateIvConfig::default(),
            isolation: IsolationConfig::default(),
            equalize: EqualizeConfig::default(),
            corner: CornerConfig::default(),
            sensing: SensingConfig::default(),
            dqd: DqdConfig::default(),
            analysis: AnalysisConfig::default(),
        }
    }
}

impl PipelineConfig {

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("vt_threshold", self.vt_threshold),
            ("bias", self.bias),
            ("gate_iv.step", self.gate_iv.step),
            ("isolation.step", self.isolation.step),
            ("equalize.increment", self.equalize.increment),
            ("equalize.half_step", self.equalize.half_step),
            ("equalize.target", self.equalize.target),
            ("analysis.sigma", self.analysis.sigma),
        ];
        for (name, v) in positive {
            if !(v > 0.0) {
                return Err(Error::validation(format!("pipeline {name} must be positive")));
            }
        }
        let counts = [
            ("turn_on.points", self.turn_on.points),
            ("corner.points", self.corner.points),
            ("sensing.plunger_points", self.sensing.plunger_points),
            ("sensing.barrier_points", self.sensing.barrier_points),
            ("dqd.points", self.dqd.points),
            ("ohmic.points", self.ohmic.points),
        ];
        for (name, n) in counts {
            if n < 2 {
                return Err(Error::validation(format!("pipeline {name} must be at least 2")));
            }
        }
        if self.analysis.max_filter_window < 1 {
            return Err(Error::validation("analysis.max_filter_window must be at least 1"));
        }
        if self.analysis.slope_window.0 > self.analysis.slope_window.1 {
            return Err(Error::validation("analysis.slope_window is inverted"));
        }
        Ok(())
    }
}
