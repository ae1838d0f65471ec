//! Noise-free device response. Everything here is a pure function of the
//! ground truth and the applied voltages.

use crate::units::{thermal_energy, HBAR_EV, REFERENCE_BIAS};
use crate::wafer::{ChannelId, ChannelKind, DeviceLayout, DeviceModel, DeviceTruth, DotGroundTruth, GateGroundTruth};

/// Highest electron number whose transition is rendered.
pub const MAX_ELECTRONS: u32 = 8;

pub fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn sech2(x: f64) -> f64 {
    let a = x.abs();
    if a > 300.0 {
        return 0.0;
    }
    let c = a.cosh();
    1.0 / (c * c)
}

/// Transmission factor of one gate; a dead gate never closes.
pub fn gate_factor(g: &GateGroundTruth, v: f64) -> f64 {
    if g.responsive {
        logistic((v - g.true_vt) / g.pinchoff_width)
    } else {
        1.0
    }
}

/// Channel open fraction: the product of its gate factors plus the leak
/// paths around unconfined dots.
pub fn channel_transmission(layout: &DeviceLayout, truth: &DeviceTruth, channel: ChannelId, v: &[f64]) -> f64 {
    let info = &layout.channels[channel.0];
    if info.ohmics.iter().any(|&o| !truth.ohmic_alive(o)) {
        return 0.0;
    }
    let all: f64 = info
        .gates
        .iter()
        .map(|&g| gate_factor(truth.gate(g), v[g.0]))
        .product();
    let mut leak = 0.0;
    for (d, dot) in layout.dots.iter().enumerate() {
        if dot.channel != channel || truth.dots[d].confined {
            continue;
        }
        let own = [dot.plunger, dot.barriers[0], dot.barriers[1]];
        let rest: f64 = info
            .gates
            .iter()
            .filter(|g| !own.contains(g))
            .map(|&g| gate_factor(truth.gate(g), v[g.0]))
            .product();
        let l1 = gate_factor(truth.gate(dot.barriers[0]), v[dot.barriers[0].0]);
        let l2 = gate_factor(truth.gate(dot.barriers[1]), v[dot.barriers[1].0]);
        leak += rest * (1.0 - l1) * (1.0 - l2);
    }
    all + leak
}

/// Dimensionless inter-channel coupling through the screening region.
pub fn screening_coupling(model: &DeviceModel, threshold: f64, vs: f64) -> f64 {
    if vs > threshold {
        model.coupling_max * (1.0 - (-(vs - threshold) / model.coupling_width).exp())
    } else {
        0.0
    }
}

pub fn channels_coupled(layout: &DeviceLayout, a: ChannelId, b: ChannelId) -> bool {
    let ka = layout.channels[a.0].kind;
    let kb = layout.channels[b.0].kind;
    a != b && ka != kb && (ka == ChannelKind::Qubit || kb == ChannelKind::Qubit)
}

/// Current into channel `a` given every channel's bias (noise-free, amps).
pub fn channel_current(
    layout: &DeviceLayout,
    truth: &DeviceTruth,
    model: &DeviceModel,
    a: ChannelId,
    v: &[f64],
    biases: &[f64],
) -> f64 {
    let g_on = model.on_current / REFERENCE_BIAS;
    let pa = channel_transmission(layout, truth, a, v);
    let mut i = g_on * biases[a.0] * pa;
    if let Some(s) = layout.screening {
        let k = screening_coupling(model, truth.gate(s).true_vt, v[s.0]);
        if k > 0.0 {
            for b in 0..layout.channels.len() {
                let b = ChannelId(b);
                if channels_coupled(layout, a, b) && biases[b.0] != 0.0 {
                    let pb = channel_transmission(layout, truth, b, v);
                    i += g_on * k * pa * pb * biases[b.0];
                }
            }
        }
    }
    i
}

/// Tunnel-coupling broadening factor.
pub fn broadening(tunnel_rate: f64, temperature: f64) -> f64 {
    let r = HBAR_EV * tunnel_rate / thermal_energy(temperature);
    (1.0 + r * r).sqrt()
}

/// Lock-in response of a dot's transitions, before sensor sensitivity.
pub fn transition_response(
    dot: &DotGroundTruth,
    plunger_voltage: f64,
    v: &[f64],
    temperature: f64,
    amplitude: f64,
    lockin_frequency: f64,
) -> f64 {
    if !dot.confined {
        return 0.0;
    }
    let gamma = dot.tunnel_rate(v);
    if gamma < lockin_frequency {
        return 0.0;
    }
    let beta = broadening(gamma, temperature);
    let kt2 = 2.0 * thermal_energy(temperature) * beta;
    (1..=MAX_ELECTRONS)
        .map(|n| {
            let vn = dot.transition_voltage_at(n, v);
            amplitude / beta * sech2(dot.plunger_lever_arm * (plunger_voltage - vn) / kt2)
        })
        .sum()
}

pub fn sensor_sensitivity(offset: f64, width: f64) -> f64 {
    (-offset * offset / (2.0 * width * width)).exp()
}

/// Slowly varying sensor background (lock-in units).
pub fn background(amplitude: f64, plunger_voltage: f64, barrier_voltage: f64) -> f64 {
    if amplitude == 0.0 {
        return 0.0;
    }
    amplitude * (0.6 + 0.4 * (std::f64::consts::TAU * plunger_voltage / 0.8 + 3.0 * barrier_voltage).sin())
}
