use serde::{Deserialize, Serialize};

use crate::tuneup::DeviceRecord;
use crate::wafer::GateRole;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct YieldCount {
    pub good: usize,
    pub total: usize,
}

impl YieldCount {
    pub fn percentage(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            100.0 * self.good as f64 / self.total as f64
        }
    }

    fn add(&mut self, good: bool) {
        self.total += 1;
        self.good += usize::from(good);
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct YieldRollup {
    pub ohmics: YieldCount,
    pub gates: YieldCount,
    pub dots: YieldCount,
    pub devices: YieldCount,
}

/// Current through the contact can be linearly controlled.
pub fn ohmic_good(record: &DeviceRecord, index: usize) -> bool {
    record.ohmics[index].ok
}

/// The gate turns on and pinches off its channel. The screening gate has no
/// channel of its own; it counts as good when it isolates the channels.
pub fn gate_good(record: &DeviceRecord, index: usize) -> bool {
    let g = &record.gates[index];
    if g.role == GateRole::Screening {
        return record.isolation.voltage.is_some();
    }
    let channel_on = g
        .channel
        .as_deref()
        .and_then(|c| record.channel(c))
        .is_some_and(|c| c.vt.is_some());
    channel_on && g.vt.is_some()
}

/// The dot has a viable tune-up point.
pub fn dot_good(record: &DeviceRecord, index: usize) -> bool {
    record.dots[index].corner_ok()
}

pub fn device_good(record: &DeviceRecord) -> bool {
    (0..record.ohmics.len()).all(|i| ohmic_good(record, i))
        && (0..record.gates.len()).all(|i| gate_good(record, i))
        && (0..record.dots.len()).all(|i| dot_good(record, i))
}

pub fn yield_rollup(records: &[DeviceRecord]) -> Result<YieldRollup> {
    if records.is_empty() {
        return Err(Error::InsufficientData("no device records".into()));
    }
    let mut r = YieldRollup {
        ohmics: YieldCount::default(),
        gates: YieldCount::default(),
        dots: YieldCount::default(),
        devices: YieldCount::default(),
    };
    for rec in records {
        for i in 0..rec.ohmics.len() {
            r.ohmics.add(ohmic_good(rec, i));
        }
        for i in 0..rec.gates.len() {
            r.gates.add(gate_good(rec, i));
        }
        for i in 0..rec.dots.len() {
            r.dots.add(dot_good(rec, i));
        }
        r.devices.add(device_good(rec));
    }
    Ok(r)
}
