use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::model;
use super::scan::{ScanGrid, ScanKind, ScanOrigin, ScanPlan, ScanTarget};
use crate::units::REFERENCE_BIAS;
use crate::wafer::{stream_seed, ChannelId, ChannelKind, DeviceLayout, DeviceTruth, Die, DotId, GateId, Wafer};
use crate::{Error, Result};

const STREAM_INSTRUMENT: u64 = 3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseModel {
    /// Lock-in white noise per sample (lock-in units).
    pub white_noise_rms: f64,
    /// Transport current noise per sample (A).
    pub current_noise_rms: f64,
    /// Probability of a sensor shift before each scan line.
    pub sensor_jump_rate: f64,
    /// Size of a sensor shift (V).
    pub sensor_jump_sigma: f64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        NoiseModel {
            white_noise_rms: 0.03,
            current_noise_rms: 2e-12,
            sensor_jump_rate: 0.006,
            sensor_jump_sigma: 0.01,
        }
    }
}

impl NoiseModel {
    pub fn zero() -> Self {
        NoiseModel {
            white_noise_rms: 0.0,
            current_noise_rms: 0.0,
            sensor_jump_rate: 0.0,
            sensor_jump_sigma: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.white_noise_rms >= 0.0
            && self.current_noise_rms >= 0.0
            && self.sensor_jump_sigma >= 0.0
            && (0.0..=1.0).contains(&self.sensor_jump_rate);
        if ok {
            Ok(())
        } else {
            Err(Error::validation("noise parameters must be >= 0 and the jump rate a probability"))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InstrumentConfig {
    pub electron_temperature: f64,
    pub lockin_amplitude: f64,
    pub lockin_frequency: f64,
    /// Sensor offset at which sensitivity falls to exp(-1/2).
    pub sensor_width: f64,
    pub background_amplitude: f64,
    pub noise: NoiseModel,
}

impl Default for InstrumentConfig {
    fn default() -> Self {
        InstrumentConfig {
            electron_temperature: 1.6,
            lockin_amplitude: 1.0,
            lockin_frequency: 1e3,
            sensor_width: 0.004,
            background_amplitude: 0.1,
            noise: NoiseModel::default(),
        }
    }
}

impl InstrumentConfig {
    pub fn noise_free() -> Self {
        InstrumentConfig {
            noise: NoiseModel::zero(),
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.electron_temperature > 0.0 && self.lockin_frequency > 0.0 && self.sensor_width > 0.0) {
            return Err(Error::validation(
                "electron temperature, lock-in frequency and sensor width must be positive",
            ));
        }
        self.noise.validate()
    }
}

/// Applied gate voltages for one device, indexed by gate id.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GateVoltages(Vec<f64>);

impl GateVoltages {
    pub fn zeros(layout: &DeviceLayout) -> Self {
        GateVoltages(vec![0.0; layout.gates.len()])
    }

    pub fn from_vec(layout: &DeviceLayout, v: Vec<f64>) -> Result<Self> {
        if v.len() != layout.gates.len() {
            return Err(Error::validation(format!(
                "{} voltages for {} gates",
                v.len(),
                layout.gates.len()
            )));
        }
        Ok(GateVoltages(v))
    }

    pub fn get(&self, g: GateId) -> Result<f64> {
        self.0.get(g.0).copied().ok_or(Error::UnknownGate(g.0))
    }

    pub fn set(&mut self, g: GateId, v: f64) -> Result<()> {
        let slot = self.0.get_mut(g.0).ok_or(Error::UnknownGate(g.0))?;
        *slot = v;
        Ok(())
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl std::ops::Index<GateId> for GateVoltages {
    type Output = f64;
    fn index(&self, g: GateId) -> &f64 {
        &self.0[g.0]
    }
}

/// A probed device. Holds the applied voltages, per-channel biases and the
/// drifting sensor offsets; every measurement advances the noise stream.
pub struct ProbeSession<'w> {
    wafer: &'w Wafer,
    truth: &'w DeviceTruth,
    config: InstrumentConfig,
    rng: ChaCha8Rng,
    voltages: GateVoltages,
    biases: Vec<f64>,
    sensor_offset: Vec<f64>,
    sensor_tuned: Vec<bool>,
}

impl<'w> ProbeSession<'w> {
    pub fn new(wafer: &'w Wafer, die: usize, device: usize, config: InstrumentConfig) -> Result<Self> {
        config.validate()?;
        let truth = wafer.device(die, device).ok_or_else(|| {
            Error::validation(format!("wafer has no device {device} on die {die}"))
        })?;
        let seed = stream_seed(wafer.spec.seed, die, device, STREAM_INSTRUMENT);
        Ok(ProbeSession {
            wafer,
            truth,
            config,
            rng: ChaCha8Rng::seed_from_u64(seed),
            voltages: GateVoltages::zeros(&wafer.layout),
            biases: vec![0.0; wafer.layout.channels.len()],
            sensor_offset: vec![0.0; wafer.layout.dots.len()],
            sensor_tuned: vec![false; wafer.layout.dots.len()],
        })
    }

    pub fn layout(&self) -> &'w DeviceLayout {
        &self.wafer.layout
    }

    pub fn wafer(&self) -> &'w Wafer {
        self.wafer
    }

    pub fn truth(&self) -> &'w DeviceTruth {
        self.truth
    }

    pub fn die(&self) -> &'w Die {
        &self.wafer.dies[self.truth.die]
    }

    pub fn config(&self) -> &InstrumentConfig {
        &self.config
    }

    pub fn voltages(&self) -> &GateVoltages {
        &self.voltages
    }

    pub fn set_gate(&mut self, g: GateId, v: f64) -> Result<()> {
        self.voltages.set(g, v)
    }

    pub fn set_voltages(&mut self, v: GateVoltages) -> Result<()> {
        if v.as_slice().len() != self.voltages.as_slice().len() {
            return Err(Error::validation("voltage vector does not match the layout"));
        }
        self.voltages = v;
        Ok(())
    }

    pub fn origin(&self) -> ScanOrigin {
        let die = self.die();
        ScanOrigin {
            wafer: self.wafer.id(),
            die: die.index,
            die_col: die.col,
            die_row: die.row,
            device: self.truth.index,
            seed: self.wafer.spec.seed,
        }
    }

    fn gaussian(&mut self, sigma: f64) -> f64 {
        if sigma == 0.0 {
            0.0
        } else {
            Normal::new(0.0, sigma).expect("sigma >= 0").sample(&mut self.rng)
        }
    }

    /// Current through `channel` at the given voltages and source-drain bias;
    /// other channels keep the session's biases (zero unless changed).
    pub fn measure_current(&mut self, channel: ChannelId, voltages: &GateVoltages, bias: f64) -> Result<f64> {
        self.layout().channel(channel)?;
        if voltages.as_slice().len() != self.layout().gates.len() {
            return Err(Error::validation("voltage vector does not match the layout"));
        }
        let mut biases = self.biases.clone();
        biases[channel.0] = bias;
        let i = model::channel_current(
            self.layout(),
            self.truth,
            &self.wafer.spec.device,
            channel,
            voltages.as_slice(),
            &biases,
        );
        Ok(i + self.gaussian(self.config.noise.current_noise_rms))
    }

    /// Current through `channel` at the session's applied voltages.
    pub fn channel_current(&mut self, channel: ChannelId, bias: f64) -> Result<f64> {
        let v = self.voltages.clone();
        self.measure_current(channel, &v, bias)
    }

    /// dI_a/dV_b (bias of channel b) normalised by the saturated conductance.
    pub fn cross_conductance(&mut self, a: ChannelId, b: ChannelId) -> Result<f64> {
        let layout = self.layout();
        layout.channel(a)?;
        layout.channel(b)?;
        if a == b {
            return Err(Error::SameChannel(layout.channels[a.0].name.clone()));
        }
        let h = REFERENCE_BIAS;
        let base = self.biases[b.0];
        let v = self.voltages.clone();
        self.biases[b.0] = base + h;
        let up = self.measure_current(a, &v, 0.0);
        self.biases[b.0] = base - h;
        let down = self.measure_current(a, &v, 0.0);
        self.biases[b.0] = base;
        let g_on = self.wafer.spec.device.on_current / REFERENCE_BIAS;
        Ok((up? - down?) / (2.0 * h) / g_on)
    }

    /// Sets a sensor to its most sensitive point, clearing any drift.
    pub fn tune_sensor(&mut self, sensor: DotId) -> Result<()> {
        let info = self.layout().dot(sensor)?;
        if info.kind != ChannelKind::Sensor {
            return Err(Error::validation(format!("{} is not a sensor dot", info.name)));
        }
        self.sensor_offset[sensor.0] = 0.0;
        self.sensor_tuned[sensor.0] = true;
        Ok(())
    }

    pub fn sensor_tuned(&self, sensor: DotId) -> bool {
        self.sensor_tuned.get(sensor.0).copied().unwrap_or(false)
    }

    fn sensor_of(&self, dot: DotId) -> Result<DotId> {
        let info = self.layout().dot(dot)?;
        let s = info.sensor.ok_or_else(|| Error::UnpairedDot(info.name.clone()))?;
        if !self.sensor_tuned[s.0] {
            return Err(Error::SensorNotTuned(self.layout().dots[s.0].name.clone()));
        }
        Ok(s)
    }

    fn clean_lockin(&self, dots: &[DotId], sensors: &[DotId], v: &[f64], f_lockin: f64) -> f64 {
        let mut signal = 0.0;
        for (&d, &s) in dots.iter().zip(sensors) {
            let info = &self.layout().dots[d.0];
            let sens = if self.truth.dots[s.0].confined {
                model::sensor_sensitivity(self.sensor_offset[s.0], self.config.sensor_width)
            } else {
                0.0
            };
            signal += sens
                * model::transition_response(
                    &self.truth.dots[d.0],
                    v[info.plunger.0],
                    v,
                    self.config.electron_temperature,
                    self.config.lockin_amplitude,
                    f_lockin,
                );
        }
        let info = &self.layout().dots[dots[0].0];
        signal + model::background(self.config.background_amplitude, v[info.plunger.0], v[info.barriers[0].0])
    }

    /// Demodulated charge-sensor signal for `dot` at the given voltages.
    pub fn lockin_signal(&mut self, dot: DotId, voltages: &GateVoltages) -> Result<f64> {
        let s = self.sensor_of(dot)?;
        let clean = self.clean_lockin(&[dot], &[s], voltages.as_slice(), self.config.lockin_frequency);
        Ok(clean + self.gaussian(self.config.noise.white_noise_rms))
    }

    fn maybe_jump(&mut self, sensors: &[DotId]) {
        let p = self.config.noise.sensor_jump_rate;
        if p == 0.0 {
            return;
        }
        for &s in sensors {
            if self.rng.random::<f64>() < p {
                let j = self.gaussian(self.config.noise.sensor_jump_sigma);
                self.sensor_offset[s.0] += j;
            }
        }
    }

    /// Raster acquisition, stepped axis outer. The applied voltages are left
    /// at the plan's fixed values afterwards.
    pub fn run_scan(&mut self, plan: &ScanPlan) -> Result<ScanGrid> {
        plan.validate(self.layout())?;
        let (dots, sensors): (Vec<DotId>, Vec<DotId>) = match (plan.kind, plan.target) {
            (ScanKind::BarrierBarrier, _) => (vec![plan.target.primary()], vec![]),
            (_, ScanTarget::Dot(d)) => (vec![d], vec![self.sensor_of(d)?]),
            (_, ScanTarget::DotPair(a, b)) => (vec![a, b], vec![self.sensor_of(a)?, self.sensor_of(b)?]),
        };
        let mut unique_sensors = sensors.clone();
        unique_sensors.sort();
        unique_sensors.dedup();
        let channel = self.layout().dots[dots[0].0].channel;
        let mut v = vec![0.0; plan.fixed.len()];
        let mut values = Vec::with_capacity(plan.rows() * plan.cols());
        for row in 0..plan.rows() {
            if row > 0 && plan.kind != ScanKind::BarrierBarrier {
                self.maybe_jump(&unique_sensors);
            }
            for col in 0..plan.cols() {
                plan.voltages_at(row, col, &mut v);
                let value = match plan.kind {
                    ScanKind::BarrierBarrier => {
                        let gv = GateVoltages(v.clone());
                        self.measure_current(channel, &gv, plan.bias)?
                    }
                    _ => {
                        self.clean_lockin(&dots, &sensors, &v, plan.lockin_frequency)
                            + self.gaussian(self.config.noise.white_noise_rms)
                    }
                };
                values.push(value);
            }
        }
        self.voltages = GateVoltages(plan.fixed.clone());
        Ok(ScanGrid {
            plan: plan.clone(),
            origin: self.origin(),
            values,
        })
    }
}
