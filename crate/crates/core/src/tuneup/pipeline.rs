use super::channels::{check_ohmics, equalize_density, isolate_channels, sweep_gate, turn_on_channels};
use super::config::PipelineConfig;
use super::corner::fit_corner;
use super::fault::TuneupFault;
use super::iv::IvCurve;
use super::record::*;
use crate::analysis::analyze_scan;
use crate::instrument::{Axis, GateRamp, ProbeSession, ScanGrid, ScanKind, ScanPlan, ScanTarget};
use crate::wafer::{ChannelId, DotId, GateId};

/// Everything one device pipeline produced.
#[derive(Clone, Debug)]
pub struct DeviceRun {
    pub record: DeviceRecord,
    /// Scans in the order listed in the record.
    pub scans: Vec<ScanGrid>,
    pub channel_curves: Vec<IvCurve>,
    pub gate_curves: Vec<IvCurve>,
}

struct State {
    channel_vt: Vec<Option<f64>>,
    gate_vt: Vec<Option<f64>>,
    corners: Vec<Option<(f64, f64)>>,
}

fn plan(session: &ProbeSession, kind: ScanKind, target: ScanTarget, swept: Axis, stepped: Axis, bias: f64) -> ScanPlan {
    ScanPlan {
        kind,
        target,
        swept,
        stepped,
        fixed: session.voltages().as_slice().to_vec(),
        lockin_frequency: session.config().lockin_frequency,
        bias,
    }
}

/// Runs one scan and puts the gates back where they were.
fn acquire(session: &mut ProbeSession, plan: &ScanPlan) -> Result<ScanGrid, TuneupFault> {
    let saved = session.voltages().clone();
    let grid = session.run_scan(plan);
    session.set_voltages(saved)?;
    Ok(grid?)
}

fn dot_gates_vt(state: &State, gates: &[GateId], names: impl Fn(GateId) -> String) -> Result<Vec<f64>, TuneupFault> {
    gates
        .iter()
        .map(|&g| state.gate_vt[g.0].ok_or_else(|| TuneupFault::skipped(format!("gate {} has no VT", names(g)))))
        .collect()
}

fn barrier_scan(
    session: &mut ProbeSession,
    cfg: &PipelineConfig,
    state: &State,
    dot: DotId,
) -> Result<(ScanGrid, Result<super::corner::CornerFit, TuneupFault>), TuneupFault> {
    let layout = session.layout();
    let info = layout.dot(dot)?;
    if state.channel_vt[info.channel.0].is_none() {
        return Err(TuneupFault::skipped(format!("channel {} is off", layout.channels[info.channel.0].name)));
    }
    let gates = [info.plunger, info.barriers[0], info.barriers[1]];
    let vt = dot_gates_vt(state, &gates, |g| layout.gate_name(g).to_string())?;
    let c = &cfg.corner;
    session.set_gate(info.plunger, vt[0] + c.plunger_offset)?;
    let stepped = Axis::single(info.barriers[0], vt[1] - c.below, vt[1] + c.above, c.points);
    let swept = Axis::single(info.barriers[1], vt[2] - c.below, vt[2] + c.above, c.points);
    let p = plan(session, ScanKind::BarrierBarrier, ScanTarget::Dot(dot), swept, stepped, cfg.bias);
    let grid = acquire(session, &p)?;
    let fit = fit_corner(&grid, c);
    Ok((grid, fit))
}

fn sensing_scan(
    session: &mut ProbeSession,
    cfg: &PipelineConfig,
    state: &State,
    dot: DotId,
) -> Result<ScanGrid, TuneupFault> {
    let layout = session.layout();
    let info = layout.dot(dot)?;
    let sensor = info.sensor.ok_or_else(|| TuneupFault::skipped("dot has no charge sensor"))?;
    let corner = state.corners[dot.0].ok_or_else(|| TuneupFault::skipped("dot corner not found"))?;
    if state.corners[sensor.0].is_none() {
        return Err(TuneupFault::skipped(format!("sensor {} not tuned up", layout.dots[sensor.0].name)));
    }
    let vp = state.gate_vt[info.plunger.0].ok_or_else(|| TuneupFault::skipped("plunger has no VT"))?;
    let s = &cfg.sensing;

    let saved = session.voltages().clone();
    session.tune_sensor(sensor)?;
    for other in layout.sensor_dots().filter(|&o| o != sensor) {
        let p = layout.dots[other.0].plunger;
        if let Some(vt) = state.gate_vt[p.0] {
            session.set_gate(p, vt - s.pinch_offset)?;
        }
    }
    let swept = Axis::single(info.plunger, vp - s.plunger_half_window, vp + s.plunger_half_window, s.plunger_points);
    let centre = (corner.0 + s.barrier_offset, corner.1 + s.barrier_offset);
    let stepped = Axis {
        ramps: vec![
            GateRamp {
                gate: info.barriers[0],
                start: centre.0 - s.barrier_half_window,
                stop: centre.0 + s.barrier_half_window,
            },
            GateRamp {
                gate: info.barriers[1],
                start: centre.1 - s.barrier_half_window,
                stop: centre.1 + s.barrier_half_window,
            },
        ],
        points: s.barrier_points,
    };
    let p = plan(session, ScanKind::PlungerVsBarriers, ScanTarget::Dot(dot), swept, stepped, cfg.bias);
    let grid = acquire(session, &p);
    session.set_voltages(saved)?;
    grid
}

fn dqd_scan(
    session: &mut ProbeSession,
    cfg: &PipelineConfig,
    state: &State,
    a: DotId,
    b: DotId,
) -> Result<ScanGrid, TuneupFault> {
    let layout = session.layout();
    let (ia, ib) = (layout.dot(a)?, layout.dot(b)?);
    let ca = state.corners[a.0].ok_or_else(|| TuneupFault::skipped("dot corner not found"))?;
    let cb = state.corners[b.0].ok_or_else(|| TuneupFault::skipped("dot corner not found"))?;
    let sensor = ia.sensor.ok_or_else(|| TuneupFault::skipped("dot has no charge sensor"))?;
    if state.corners[sensor.0].is_none() {
        return Err(TuneupFault::skipped("sensor not tuned up"));
    }
    let vt = dot_gates_vt(state, &[ia.plunger, ib.plunger], |g| layout.gate_name(g).to_string())?;
    let d = &cfg.dqd;
    let saved = session.voltages().clone();
    session.tune_sensor(sensor)?;
    // the shared barrier takes the mean of the two corner estimates
    session.set_gate(ia.barriers[0], ca.0 + d.barrier_offset)?;
    session.set_gate(ia.barriers[1], 0.5 * (ca.1 + cb.0) + d.barrier_offset)?;
    session.set_gate(ib.barriers[1], cb.1 + d.barrier_offset)?;
    let h = d.plunger_half_window;
    let swept = Axis::single(ia.plunger, vt[0] - h, vt[0] + h, d.points);
    let stepped = Axis::single(ib.plunger, vt[1] - h, vt[1] + h, d.points);
    let p = plan(session, ScanKind::PlungerPlunger, ScanTarget::DotPair(a, b), swept, stepped, cfg.bias);
    let grid = acquire(session, &p);
    session.set_voltages(saved)?;
    grid
}

fn fault_of<T>(r: &crate::Result<T>) -> Option<TuneupFault> {
    r.as_ref().err().map(|e| TuneupFault::Instrument { message: e.to_string() })
}

/// Full automated tune-up of one device. Stage failures become record flags;
/// only the affected component's later stages are skipped.
pub fn run_device_pipeline(session: &mut ProbeSession, cfg: &PipelineConfig) -> DeviceRun {
    let layout = session.layout();
    let truth = session.truth();
    let origin = session.origin();
    let identity = DeviceIdentity {
        wafer: origin.wafer,
        seed: origin.seed,
        die: origin.die,
        die_col: origin.die_col,
        die_row: origin.die_row,
        device: origin.device,
        x_mm: truth.x_mm,
        y_mm: truth.y_mm,
    };

    let ohmic_checks = check_ohmics(session, &cfg.ohmic);
    let ohmics: Vec<OhmicRecord> = match &ohmic_checks {
        Ok(v) => v
            .iter()
            .map(|o| OhmicRecord {
                name: layout.ohmics[o.ohmic.0].clone(),
                conductance: o.conductance,
                ok: o.ok,
            })
            .collect(),
        Err(_) => layout
            .ohmics
            .iter()
            .map(|n| OhmicRecord {
                name: n.clone(),
                conductance: 0.0,
                ok: false,
            })
            .collect(),
    };

    let mut state = State {
        channel_vt: vec![None; layout.channels.len()],
        gate_vt: vec![None; layout.gates.len()],
        corners: vec![None; layout.dots.len()],
    };

    let turn_on = turn_on_channels(session, &cfg.turn_on, cfg.bias, cfg.vt_threshold);
    let mut channels: Vec<ChannelRecord> = layout
        .channels
        .iter()
        .map(|c| ChannelRecord {
            name: c.name.clone(),
            kind: c.kind,
            vt: None,
            fault: fault_of(&turn_on),
        })
        .collect();
    let mut channel_curves = Vec::new();
    if let Ok(results) = turn_on {
        for r in results {
            let rec = &mut channels[r.channel.0];
            rec.vt = r.vt;
            rec.fault = r.fault.map(|fault| TuneupFault::ChannelOff { fault });
            state.channel_vt[r.channel.0] = r.vt;
            channel_curves.push(r.curve);
        }
    }

    let mut gates: Vec<GateRecord> = layout
        .gates
        .iter()
        .map(|g| GateRecord {
            name: g.name.clone(),
            role: g.role,
            channel: g.channel.map(|c| layout.channels[c.0].name.clone()),
            vt: None,
            fault: None,
            setpoint: None,
        })
        .collect();
    let mut gate_curves = Vec::new();
    for (c, info) in layout.channels.iter().enumerate() {
        let Some(cvt) = state.channel_vt[c] else { continue };
        for &g in &info.gates {
            match sweep_gate(session, g, ChannelId(c), cvt, &cfg.gate_iv, cfg.bias, cfg.vt_threshold) {
                Ok(s) => {
                    gates[g.0].vt = s.vt;
                    gates[g.0].fault = s.fault;
                    state.gate_vt[g.0] = s.vt;
                    gate_curves.push(s.curve);
                }
                Err(e) => gates[g.0].fault = Some(super::iv::VtFault::Invalid(e.to_string())),
            }
        }
    }

    let isolation = match isolate_channels(session, &cfg.isolation) {
        Ok(v) => IsolationRecord {
            voltage: Some(v),
            fault: None,
        },
        Err(f) => IsolationRecord {
            voltage: None,
            fault: Some(f),
        },
    };
    if let Some(scr) = layout.screening {
        gates[scr.0].vt = isolation.voltage;
        gates[scr.0].setpoint = Some(session.voltages()[scr]);
    }

    let mut equalization = Vec::new();
    for (c, info) in layout.channels.iter().enumerate() {
        if state.channel_vt[c].is_none() {
            continue;
        }
        let eq_gates: Vec<GateId> = info.gates.iter().copied().filter(|g| state.gate_vt[g.0].is_some()).collect();
        let rec = match equalize_density(session, ChannelId(c), &eq_gates, &cfg.equalize, cfg.bias) {
            Ok(eq) => {
                for &(g, v) in &eq.setpoints {
                    gates[g.0].setpoint = Some(v);
                }
                let fault = (!eq.converged()).then(|| TuneupFault::NotEqualized {
                    gates: eq.unconverged.iter().map(|&g| layout.gate_name(g).to_string()).collect(),
                });
                EqualizationRecord {
                    channel: info.name.clone(),
                    passes: eq.passes,
                    fault,
                }
            }
            Err(e) => EqualizationRecord {
                channel: info.name.clone(),
                passes: 0,
                fault: Some(e.into()),
            },
        };
        equalization.push(rec);
    }

    let mut scans = Vec::new();
    let mut scan_refs = Vec::new();
    let mut dots: Vec<DotRecord> = layout
        .dots
        .iter()
        .map(|d| DotRecord {
            name: d.name.clone(),
            kind: d.kind,
            corner: None,
            corner_residual: None,
            fault: None,
            sensing: None,
        })
        .collect();
    for d in 0..layout.dots.len() {
        match barrier_scan(session, cfg, &state, DotId(d)) {
            Ok((grid, fit)) => {
                scan_refs.push(ScanRef::new(ScanKind::BarrierBarrier, d, layout.dots[d].name.clone()));
                scans.push(grid);
                match fit {
                    Ok(f) => {
                        dots[d].corner = Some(f.corner);
                        dots[d].corner_residual = Some(f.residual);
                        state.corners[d] = Some(f.corner);
                    }
                    Err(fault) => {
                        if let TuneupFault::FitResidual { residual } = fault {
                            dots[d].corner_residual = Some(residual);
                        }
                        dots[d].fault = Some(fault);
                    }
                }
            }
            Err(fault) => dots[d].fault = Some(fault),
        }
    }

    if cfg.charge_sensing {
        for d in layout.qubit_dots().collect::<Vec<_>>() {
            let sensor = layout.dots[d.0].sensor.map(|s| layout.dots[s.0].name.clone()).unwrap_or_default();
            let mut rec = SensingRecord {
                sensor,
                scan: None,
                summary: None,
                fault: None,
            };
            match sensing_scan(session, cfg, &state, d) {
                Ok(grid) => {
                    let r = ScanRef::new(ScanKind::PlungerVsBarriers, d.0, layout.dots[d.0].name.clone());
                    rec.scan = Some(r.file.clone());
                    match analyze_scan(&grid, &cfg.analysis) {
                        Ok(a) => rec.summary = Some(a.summary),
                        Err(e) => rec.fault = Some(e.into()),
                    }
                    scan_refs.push(r);
                    scans.push(grid);
                }
                Err(fault) => rec.fault = Some(fault),
            }
            dots[d.0].sensing = Some(rec);
        }
    }

    if cfg.dqd.enabled {
        let qubits: Vec<DotId> = layout.qubit_dots().collect();
        let mut index = 0;
        for w in qubits.windows(2) {
            let (a, b) = (w[0], w[1]);
            if layout.dots[a.0].sensor != layout.dots[b.0].sensor {
                continue;
            }
            if let Ok(grid) = dqd_scan(session, cfg, &state, a, b) {
                let target = format!("{}-{}", layout.dots[a.0].name, layout.dots[b.0].name);
                scan_refs.push(ScanRef::new(ScanKind::PlungerPlunger, index, target));
                scans.push(grid);
            }
            index += 1;
        }
    }

    DeviceRun {
        record: DeviceRecord {
            schema_version: RECORD_SCHEMA_VERSION,
            identity,
            ohmics,
            channels,
            isolation,
            gates,
            equalization,
            dots,
            scans: scan_refs,
        },
        scans,
        channel_curves,
        gate_curves,
    }
}
