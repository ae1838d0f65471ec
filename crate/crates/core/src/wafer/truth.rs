use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::layout::{ChannelKind, DeviceLayout, DotId, GateId, GateRole, OhmicId};
use super::spec::{DeviceModel, DisorderModel, InjectedFault, WaferSpec};
use crate::{Error, Result};

pub const WAFER_SCHEMA_VERSION: u32 = 1;

/// Lock-in frequency at which the cutoff offset is defined.
pub const CUTOFF_RATE_HZ: f64 = 1e3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Die {
    pub index: usize,
    /// Grid position counted from the lowest occupied column/row.
    pub col: u32,
    pub row: u32,
    pub x_mm: f64,
    pub y_mm: f64,
}

impl Die {
    pub fn dir_name(&self) -> String {
        format!("die-{:02}-{:02}", self.col, self.row)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LeverArm {
    pub dot: DotId,
    pub alpha: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateGroundTruth {
    pub gate: GateId,
    pub role: GateRole,
    pub true_vt: f64,
    pub pinchoff_width: f64,
    /// False for a dead gate, which leaves the channel permanently open.
    pub responsive: bool,
    pub lever_arms: Vec<LeverArm>,
}

/// Cross-capacitive pull of another gate on a dot's transitions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateCoupling {
    pub gate: GateId,
    /// Lever arm relative to the dot's plunger.
    pub ratio: f64,
    /// Voltage of this gate at which `true_v1e` is defined.
    pub reference: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DotGroundTruth {
    pub dot: DotId,
    pub plunger_lever_arm: f64,
    /// eV
    pub charging_energy: f64,
    pub addition_voltage: f64,
    /// Plunger voltage of the first transition with every coupled gate at its reference.
    pub true_v1e: f64,
    pub tunnel_rate_prefactor: f64,
    pub tunnel_rate_scale: f64,
    /// Mean barrier offset from the corner where the tunnel rate is 1 kHz.
    pub cutoff_offset: f64,
    pub paired_sensor: Option<DotId>,
    /// False when the dot's confinement leaks.
    pub confined: bool,
    pub couplings: Vec<GateCoupling>,
}

impl DotGroundTruth {
    /// Plunger voltage of the `n`-th transition with both barriers raised by
    /// `barrier_offset` above their references and all other gates at theirs.
    pub fn true_transition_voltage(&self, n: u32, barrier_offset: f64) -> f64 {
        assert!(n >= 1, "electron number starts at 1");
        let pull: f64 = self
            .barrier_couplings()
            .map(|c| c.ratio * barrier_offset)
            .sum();
        self.true_v1e + f64::from(n - 1) * self.addition_voltage - pull
    }

    /// Plunger voltage of the `n`-th transition for arbitrary gate voltages
    /// (indexed by gate id; the plunger entry is ignored).
    pub fn transition_voltage_at(&self, n: u32, voltages: &[f64]) -> f64 {
        assert!(n >= 1, "electron number starts at 1");
        let pull: f64 = self
            .couplings
            .iter()
            .map(|c| c.ratio * (voltages[c.gate.0] - c.reference))
            .sum();
        self.true_v1e + f64::from(n - 1) * self.addition_voltage - pull
    }

    /// Mean barrier offset from the references.
    pub fn barrier_offset(&self, voltages: &[f64]) -> f64 {
        let (sum, n) = self
            .barrier_couplings()
            .fold((0.0, 0usize), |(s, n), c| (s + voltages[c.gate.0] - c.reference, n + 1));
        if n == 0 {
            0.0
        } else {
            sum / n as f64
        }
    }

    pub fn tunnel_rate(&self, voltages: &[f64]) -> f64 {
        self.tunnel_rate_prefactor * (self.barrier_offset(voltages) / self.tunnel_rate_scale).exp()
    }

    fn barrier_couplings(&self) -> impl Iterator<Item = &GateCoupling> {
        // barriers are always stored first
        self.couplings.iter().take(2)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeviceTruth {
    pub die: usize,
    pub index: usize,
    pub x_mm: f64,
    pub y_mm: f64,
    pub gates: Vec<GateGroundTruth>,
    pub dots: Vec<DotGroundTruth>,
    pub ohmic_ok: Vec<bool>,
    pub faults: Vec<InjectedFault>,
}

impl DeviceTruth {
    pub fn gate(&self, id: GateId) -> &GateGroundTruth {
        &self.gates[id.0]
    }

    pub fn dot(&self, id: DotId) -> &DotGroundTruth {
        &self.dots[id.0]
    }

    pub fn ohmic_alive(&self, id: OhmicId) -> bool {
        self.ohmic_ok[id.0]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Wafer {
    pub spec: WaferSpec,
    pub disorder: DisorderModel,
    pub layout: DeviceLayout,
    pub dies: Vec<Die>,
    /// Die-major order: `devices[die * devices_per_die + index]`.
    pub devices: Vec<DeviceTruth>,
}

#[derive(Serialize, Deserialize)]
struct WaferFile {
    schema_version: u32,
    wafer: Wafer,
}

#[derive(Deserialize)]
struct VersionProbe {
    schema_version: u32,
}

impl Wafer {
    pub fn device(&self, die: usize, index: usize) -> Option<&DeviceTruth> {
        if index >= self.spec.devices_per_die {
            return None;
        }
        self.devices.get(die * self.spec.devices_per_die + index)
    }

    pub fn id(&self) -> String {
        self.spec.id()
    }

    pub fn to_json(&self) -> String {
        let file = WaferFile {
            schema_version: WAFER_SCHEMA_VERSION,
            wafer: self.clone(),
        };
        serde_json::to_string_pretty(&file).expect("wafer serializes")
    }

    pub fn from_json(text: &str, path: &Path) -> Result<Self> {
        let probe: VersionProbe = serde_json::from_str(text).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })?;
        if probe.schema_version != WAFER_SCHEMA_VERSION {
            return Err(Error::SchemaVersion {
                what: "wafer ground truth".into(),
                found: probe.schema_version,
                expected: WAFER_SCHEMA_VERSION,
            });
        }
        let file: WaferFile = serde_json::from_str(text).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })?;
        Ok(file.wafer)
    }
}

/// SplitMix64 finalizer, used to derive independent stream seeds.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for an independent random stream tied to a device.
pub fn stream_seed(seed: u64, die: usize, device: usize, stream: u64) -> u64 {
    let mut h = mix(seed);
    for part in [die as u64, device as u64, stream] {
        h = mix(h ^ part);
    }
    h
}

const STREAM_DISORDER: u64 = 1;
const STREAM_FAULTS: u64 = 2;

/// Die sites closest to the wafer center; the outer ring is never part of the map.
pub fn die_map(die_count: usize, pitch_mm: f64) -> Vec<Die> {
    let reach = (die_count as f64).sqrt().ceil() as i32 + 1;
    let mut cells: Vec<(i32, i32)> = (-reach..=reach)
        .flat_map(|r| (-reach..=reach).map(move |c| (c, r)))
        .collect();
    cells.sort_by_key(|&(c, r)| (c * c + r * r, r, c));
    cells.truncate(die_count);
    cells.sort_by_key(|&(c, r)| (r, c));
    let min_c = cells.iter().map(|p| p.0).min().unwrap_or(0);
    let min_r = cells.iter().map(|p| p.1).min().unwrap_or(0);
    cells
        .into_iter()
        .enumerate()
        .map(|(index, (c, r))| Die {
            index,
            col: (c - min_c) as u32,
            row: (r - min_r) as u32,
            x_mm: c as f64 * pitch_mm,
            y_mm: r as f64 * pitch_mm,
        })
        .collect()
}

fn gaussian(rng: &mut ChaCha8Rng, sigma: f64) -> f64 {
    if sigma == 0.0 {
        return 0.0;
    }
    Normal::new(0.0, sigma).expect("sigma >= 0").sample(rng)
}

fn truncated_gaussian(rng: &mut ChaCha8Rng, mean: f64, sigma: f64, cut: f64) -> f64 {
    if sigma == 0.0 {
        return mean;
    }
    loop {
        let z = gaussian(rng, 1.0);
        if z.abs() <= cut {
            return mean + sigma * z;
        }
    }
}

pub fn generate_wafer(spec: &WaferSpec) -> Result<Wafer> {
    spec.validate()?;
    let layout = spec.layout.build();
    layout.validate()?;
    let disorder = spec.resolved_disorder();
    let dies = die_map(spec.die_count, spec.die_pitch_mm);
    let mut devices = Vec::with_capacity(dies.len() * spec.devices_per_die);
    for die in &dies {
        for index in 0..spec.devices_per_die {
            let x = die.x_mm
                + (index as f64 - (spec.devices_per_die as f64 - 1.0) / 2.0) * spec.device.device_pitch_mm;
            let y = die.y_mm;
            let faults: Vec<InjectedFault> = spec
                .faults
                .iter()
                .filter(|f| f.site() == (die.index, index))
                .cloned()
                .collect();
            devices.push(generate_device(
                spec, &disorder, &layout, die.index, index, x, y, faults,
            )?);
        }
    }
    Ok(Wafer {
        spec: spec.clone(),
        disorder,
        layout,
        dies,
        devices,
    })
}

#[allow(clippy::too_many_arguments)]
fn generate_device(
    spec: &WaferSpec,
    disorder: &DisorderModel,
    layout: &DeviceLayout,
    die: usize,
    index: usize,
    x_mm: f64,
    y_mm: f64,
    mut faults: Vec<InjectedFault>,
) -> Result<DeviceTruth> {
    let model: &DeviceModel = &spec.device;
    let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(spec.seed, die, index, STREAM_DISORDER));
    let systematic = disorder.systematic.eval_mm(x_mm, y_mm);

    let mut gates: Vec<GateGroundTruth> = layout
        .gates
        .iter()
        .enumerate()
        .map(|(i, g)| GateGroundTruth {
            gate: GateId(i),
            role: g.role,
            true_vt: disorder.role_baseline.get(g.role)
                + systematic
                + gaussian(&mut rng, disorder.random_sigma_vt),
            pinchoff_width: model.pinchoff_width,
            responsive: true,
            lever_arms: Vec::new(),
        })
        .collect();

    struct DotDraw {
        addition: f64,
        v1e_scatter: f64,
        cutoff: f64,
    }
    let draws: Vec<DotDraw> = layout
        .dots
        .iter()
        .map(|_| DotDraw {
            addition: (disorder.addition_voltage_mean
                + gaussian(&mut rng, disorder.addition_voltage_sigma))
            .max(0.25 * disorder.addition_voltage_mean),
            v1e_scatter: gaussian(&mut rng, disorder.dot_random_sigma_v1e),
            cutoff: truncated_gaussian(
                &mut rng,
                disorder.cutoff_offset_mean,
                disorder.cutoff_offset_sigma,
                disorder.cutoff_offset_truncation,
            ),
        })
        .collect();

    // Faults use their own stream so enabling them never perturbs the disorder.
    let mut frng = ChaCha8Rng::seed_from_u64(stream_seed(spec.seed, die, index, STREAM_FAULTS));
    let rates = disorder.fault_rates;
    for name in &layout.ohmics {
        if frng.random::<f64>() < rates.ohmic {
            faults.push(InjectedFault::DeadOhmic { die, device: index, ohmic: name.clone() });
        }
    }
    for g in &layout.gates {
        if g.role != GateRole::Screening && frng.random::<f64>() < rates.gate {
            faults.push(InjectedFault::DeadGate { die, device: index, gate: g.name.clone() });
        }
    }
    for d in &layout.dots {
        if frng.random::<f64>() < rates.dot {
            faults.push(InjectedFault::LeakyDot { die, device: index, dot: d.name.clone() });
        }
    }

    let mut ohmic_ok = vec![true; layout.ohmics.len()];
    let mut confined = vec![true; layout.dots.len()];
    for f in &faults {
        match f {
            InjectedFault::DeadOhmic { ohmic, .. } => {
                let o = layout
                    .ohmics
                    .iter()
                    .position(|n| n == ohmic)
                    .ok_or_else(|| Error::validation(format!("unknown ohmic {ohmic}")))?;
                ohmic_ok[o] = false;
            }
            InjectedFault::DeadGate { gate, .. } => {
                let g = layout.gate_by_name(gate)?;
                gates[g.0].responsive = false;
            }
            InjectedFault::LeakyDot { dot, .. } => {
                let d = layout
                    .dot_by_name(dot)
                    .ok_or_else(|| Error::validation(format!("unknown dot {dot}")))?;
                confined[d.0] = false;
                let info = &layout.dots[d.0];
                let candidates = [info.plunger, info.barriers[0], info.barriers[1]];
                let g = candidates[frng.random_range(0..candidates.len())];
                let (lo, hi) = model.leaky_vt_range;
                gates[g.0].true_vt = lo + (hi - lo) * frng.random::<f64>();
            }
        }
    }

    let alpha_p = model.plunger_lever_arm;
    let mut dots = Vec::with_capacity(layout.dots.len());
    for (i, info) in layout.dots.iter().enumerate() {
        let draw = &draws[i];
        let mut couplings: Vec<GateCoupling> = info
            .barriers
            .iter()
            .map(|&b| GateCoupling {
                gate: b,
                ratio: model.barrier_ratio,
                reference: gates[b.0].true_vt,
            })
            .collect();
        for (j, other) in layout.dots.iter().enumerate() {
            let shares_barrier = j != i
                && other.channel == info.channel
                && other.barriers.iter().any(|b| info.barriers.contains(b));
            if shares_barrier {
                couplings.push(GateCoupling {
                    gate: other.plunger,
                    ratio: model.neighbor_ratio,
                    reference: gates[other.plunger.0].true_vt,
                });
            }
        }
        for c in std::iter::once((info.plunger, 1.0)).chain(couplings.iter().map(|c| (c.gate, c.ratio))) {
            gates[c.0 .0].lever_arms.push(LeverArm {
                dot: DotId(i),
                alpha: alpha_p * c.1,
            });
        }
        let cutoff = draw.cutoff;
        dots.push(DotGroundTruth {
            dot: DotId(i),
            plunger_lever_arm: alpha_p,
            charging_energy: draw.addition * alpha_p,
            addition_voltage: draw.addition,
            true_v1e: gates[info.plunger.0].true_vt + disorder.v1e_offset + draw.v1e_scatter,
            tunnel_rate_prefactor: CUTOFF_RATE_HZ * (-cutoff / model.tunnel_rate_scale).exp(),
            tunnel_rate_scale: model.tunnel_rate_scale,
            cutoff_offset: cutoff,
            paired_sensor: info.sensor,
            confined: confined[i],
            couplings,
        });
    }
    debug_assert!(layout
        .dots
        .iter()
        .all(|d| d.kind == ChannelKind::Sensor || d.sensor.is_some()));

    Ok(DeviceTruth {
        die,
        index,
        x_mm,
        y_mm,
        gates,
        dots,
        ohmic_ok,
        faults,
    })
}
