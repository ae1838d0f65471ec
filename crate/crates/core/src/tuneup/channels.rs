use serde::{Deserialize, Serialize};

use super::config::{EqualizeConfig, GateIvConfig, IsolationConfig, OhmicConfig, TurnOnConfig};
use super::fault::TuneupFault;
use super::iv::{extract_vt, IvCurve, VtFault};
use crate::instrument::ProbeSession;
use crate::units::REFERENCE_BIAS;
use crate::wafer::{ChannelId, GateId, OhmicId};
use crate::Result;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OhmicCheck {
    pub ohmic: OhmicId,
    /// Best linear-fit conductance over the channels using this contact (S).
    pub conductance: f64,
    pub ok: bool,
}

/// Slope, intercept and R² of an ordinary least-squares line.
fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let xm = x.iter().sum::<f64>() / n;
    let ym = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - xm) * (b - ym)).sum();
    let sxx: f64 = x.iter().map(|a| (a - xm) * (a - xm)).sum();
    let syy: f64 = y.iter().map(|b| (b - ym) * (b - ym)).sum();
    let slope = sxy / sxx;
    let r2 = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 0.0 };
    (slope, ym - slope * xm, r2)
}

/// Two-terminal check of every contact with all gates of its channels open.
/// A contact passes if any channel through it shows a linear, low-resistance IV.
pub fn check_ohmics(session: &mut ProbeSession, cfg: &OhmicConfig) -> Result<Vec<OhmicCheck>> {
    let layout = session.layout();
    let saved = session.voltages().clone();
    let g_on = session.wafer().spec.device.on_current / REFERENCE_BIAS;
    let mut best = vec![(0.0_f64, false); layout.ohmics.len()];
    for (c, info) in layout.channels.iter().enumerate() {
        let mut v = saved.clone();
        for &g in &info.gates {
            v.set(g, cfg.gate_voltage)?;
        }
        let biases: Vec<f64> = (0..cfg.points)
            .map(|i| -cfg.bias_span + 2.0 * cfg.bias_span * i as f64 / (cfg.points - 1) as f64)
            .collect();
        let mut currents = Vec::with_capacity(biases.len());
        for &b in &biases {
            currents.push(session.measure_current(ChannelId(c), &v, b)?);
        }
        let (g, _, r2) = linear_fit(&biases, &currents);
        let pass = g > cfg.min_conductance_fraction * g_on && r2 > cfg.min_r_squared;
        for &o in &info.ohmics {
            let slot = &mut best[o.0];
            slot.0 = slot.0.max(g);
            slot.1 |= pass;
        }
    }
    session.set_voltages(saved)?;
    Ok(best
        .into_iter()
        .enumerate()
        .map(|(o, (conductance, ok))| OhmicCheck {
            ohmic: OhmicId(o),
            conductance,
            ok,
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelTurnOn {
    pub channel: ChannelId,
    pub vt: Option<f64>,
    pub fault: Option<VtFault>,
    pub curve: IvCurve,
}

fn grid(start: f64, stop: f64, points: usize) -> Vec<f64> {
    (0..points)
        .map(|i| {
            if i + 1 == points {
                stop
            } else {
                start + (stop - start) * i as f64 / (points - 1) as f64
            }
        })
        .collect()
}

/// Ramps all gates of each channel together, extracts the channel VT and parks
/// the channel's gates at VT + offset. Gates of a channel that never turns on
/// are returned to 0 V.
pub fn turn_on_channels(session: &mut ProbeSession, cfg: &TurnOnConfig, bias: f64, threshold: f64) -> Result<Vec<ChannelTurnOn>> {
    let layout = session.layout();
    let ramp = grid(cfg.start, cfg.stop, cfg.points);
    let mut out = Vec::with_capacity(layout.channels.len());
    for (c, info) in layout.channels.iter().enumerate() {
        let ch = ChannelId(c);
        let mut v = session.voltages().clone();
        let mut currents = Vec::with_capacity(ramp.len());
        for &x in &ramp {
            for &g in &info.gates {
                v.set(g, x)?;
            }
            currents.push(session.measure_current(ch, &v, bias)?);
        }
        let curve = IvCurve {
            gate: None,
            voltages: ramp.clone(),
            currents,
            bias,
        };
        let (vt, fault) = match extract_vt(&curve, threshold) {
            Ok(vt) => (Some(vt), None),
            Err(f) => (None, Some(f)),
        };
        let park = vt.map_or(0.0, |vt| vt + cfg.offset);
        for &g in &info.gates {
            session.set_gate(g, park)?;
        }
        out.push(ChannelTurnOn {
            channel: ch,
            vt,
            fault,
            curve,
        });
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateSweep {
    pub gate: GateId,
    pub vt: Option<f64>,
    pub fault: Option<VtFault>,
    pub curve: IvCurve,
}

/// Sweeps one gate over a window below and above its channel VT with every
/// other gate left where it is; the gate is restored afterwards.
pub fn sweep_gate(
    session: &mut ProbeSession,
    gate: GateId,
    channel: ChannelId,
    channel_vt: f64,
    cfg: &GateIvConfig,
    bias: f64,
    threshold: f64,
) -> Result<GateSweep> {
    let n = ((cfg.below + cfg.above) / cfg.step).round() as usize + 1;
    let lo = channel_vt - cfg.below;
    let voltages: Vec<f64> = (0..n).map(|i| lo + cfg.step * i as f64).collect();
    let parked = session.voltages()[gate];
    let mut v = session.voltages().clone();
    let mut currents = Vec::with_capacity(n);
    for &x in &voltages {
        v.set(gate, x)?;
        currents.push(session.measure_current(channel, &v, bias)?);
    }
    session.set_gate(gate, parked)?;
    let curve = IvCurve {
        gate: Some(gate),
        voltages,
        currents,
        bias,
    };
    let (vt, fault) = match extract_vt(&curve, threshold) {
        Ok(vt) => (Some(vt), None),
        Err(f) => (None, Some(f)),
    };
    Ok(GateSweep { gate, vt, fault, curve })
}

/// Lowers the screening gate until the qubit channel no longer responds to
/// any sensor bias. Returns the first voltage at which that holds; the gate
/// is left there (or at the floor on failure).
pub fn isolate_channels(session: &mut ProbeSession, cfg: &IsolationConfig) -> std::result::Result<f64, TuneupFault> {
    let layout = session.layout();
    let scr = layout.screening.ok_or(TuneupFault::NoScreeningGate)?;
    let Some(q) = layout.qubit_channel() else {
        return Ok(cfg.start);
    };
    let sensors: Vec<ChannelId> = layout.sensor_channels().collect();
    let mut k = 0usize;
    loop {
        let v = cfg.start - k as f64 * cfg.step;
        if v < cfg.floor - 1e-9 {
            session.set_gate(scr, cfg.floor)?;
            return Err(TuneupFault::NotIsolated { floor: cfg.floor });
        }
        session.set_gate(scr, v)?;
        let mut isolated = true;
        for &s in &sensors {
            if session.cross_conductance(q, s)?.abs() >= cfg.noise_floor {
                isolated = false;
                break;
            }
        }
        if isolated {
            return Ok(v);
        }
        k += 1;
    }
}

/// Normalised transconductance (dI/dV_g)/I by symmetric finite difference.
pub fn normalized_transconductance(
    session: &mut ProbeSession,
    channel: ChannelId,
    gate: GateId,
    half_step: f64,
    bias: f64,
) -> Result<f64> {
    let mut v = session.voltages().clone();
    let x = v[gate];
    let i0 = session.measure_current(channel, &v, bias)?;
    v.set(gate, x + half_step)?;
    let up = session.measure_current(channel, &v, bias)?;
    v.set(gate, x - half_step)?;
    let down = session.measure_current(channel, &v, bias)?;
    if !(i0 > 0.0) {
        return Ok(0.0);
    }
    Ok((up - down) / (2.0 * half_step) / i0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Equalization {
    pub channel: ChannelId,
    /// Final voltage of every equalized gate.
    pub setpoints: Vec<(GateId, f64)>,
    pub passes: usize,
    /// Gates still outside the band when the budget ran out.
    pub unconverged: Vec<GateId>,
}

impl Equalization {
    pub fn converged(&self) -> bool {
        self.unconverged.is_empty()
    }
}

/// Walks each gate towards the target transconductance band in fixed
/// increments, one gate at a time, repeating passes until none moves.
pub fn equalize_density(
    session: &mut ProbeSession,
    channel: ChannelId,
    gates: &[GateId],
    cfg: &EqualizeConfig,
    bias: f64,
) -> Result<Equalization> {
    let lo = cfg.target * (1.0 - cfg.band);
    let hi = cfg.target * (1.0 + cfg.band);
    let mut in_band = vec![false; gates.len()];
    let mut passes = 0;
    while passes < cfg.max_passes {
        passes += 1;
        let mut moved = false;
        for (k, &g) in gates.iter().enumerate() {
            in_band[k] = false;
            for step in 0..=cfg.max_steps {
                let t = normalized_transconductance(session, channel, g, cfg.half_step, bias)?;
                if (lo..=hi).contains(&t) {
                    in_band[k] = true;
                    break;
                }
                if step == cfg.max_steps {
                    break;
                }
                let v = session.voltages()[g];
                // steep response means the gate is close to pinch-off
                let next = if t > hi { v + cfg.increment } else { v - cfg.increment };
                session.set_gate(g, next)?;
                moved = true;
            }
        }
        if !moved {
            break;
        }
    }
    let unconverged = gates.iter().zip(&in_band).filter(|(_, &b)| !b).map(|(&g, _)| g).collect();
    Ok(Equalization {
        channel,
        setpoints: gates.iter().map(|&g| (g, session.voltages()[g])).collect(),
        passes,
        unconverged,
    })
}
