//! Gate, channel and dot topology of a device.
//!
//! The default layout is the 12-quantum-dot linear array: a qubit channel with
//! twelve plungers, thirteen barriers and two reservoir gates, four opposing
//! sensor channels (reservoir, barrier, plunger, barrier each) and one center
//! screening gate separating the two sides. That gives 44 gates, 16 dots and
//! 7 ohmic contacts per device.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

macro_rules! id_type {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub usize);

        impl $name {
            pub fn index(self) -> usize {
                self.0
            }
        }
    };
}

id_type!(
    /// Index into [`DeviceLayout::gates`].
    GateId
);
id_type!(
    /// Index into [`DeviceLayout::dots`].
    DotId
);
id_type!(
    /// Index into [`DeviceLayout::channels`].
    ChannelId
);
id_type!(
    /// Index into [`DeviceLayout::ohmics`].
    OhmicId
);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GateRole {
    Plunger,
    Barrier,
    Reservoir,
    Screening,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChannelKind {
    Qubit,
    Sensor,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateInfo {
    pub name: String,
    pub role: GateRole,
    /// Channel the gate sits over; `None` for the screening gate.
    pub channel: Option<ChannelId>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelInfo {
    pub name: String,
    pub kind: ChannelKind,
    /// Gates over the channel, in order along the channel.
    pub gates: Vec<GateId>,
    pub ohmics: Vec<OhmicId>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DotInfo {
    pub name: String,
    pub kind: ChannelKind,
    pub channel: ChannelId,
    pub plunger: GateId,
    pub barriers: [GateId; 2],
    /// Charge sensor used to read this dot (qubit dots only).
    pub sensor: Option<DotId>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeviceLayout {
    pub gates: Vec<GateInfo>,
    pub channels: Vec<ChannelInfo>,
    pub dots: Vec<DotInfo>,
    pub ohmics: Vec<String>,
    pub screening: Option<GateId>,
}

/// Serializable selector for the built-in layouts.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LayoutKind {
    #[default]
    TwelveQd,
}

impl LayoutKind {
    pub fn build(self) -> DeviceLayout {
        match self {
            LayoutKind::TwelveQd => DeviceLayout::linear_array(12, 4),
        }
    }
}

impl DeviceLayout {
    /// The 12-quantum-dot device.
    pub fn twelve_qd() -> Self {
        Self::linear_array(12, 4)
    }

    /// A linear array of `qubit_dots` dots read by `sensors` charge sensors.
    ///
    /// Each sensor reads a contiguous block of qubit dots; `qubit_dots` must be
    /// divisible by `sensors`.
    pub fn linear_array(qubit_dots: usize, sensors: usize) -> Self {
        assert!(qubit_dots >= 1 && sensors >= 1 && qubit_dots % sensors == 0);
        let mut gates = Vec::new();
        let mut channels = Vec::new();
        let mut dots = Vec::new();
        let mut ohmics = Vec::new();

        let push_gate = |gates: &mut Vec<GateInfo>, name: String, role, channel| {
            gates.push(GateInfo {
                name,
                role,
                channel,
            });
            GateId(gates.len() - 1)
        };

        // Qubit channel.
        let qc = ChannelId(0);
        ohmics.push("QS".to_string());
        ohmics.push("QD".to_string());
        let mut qgates = vec![push_gate(&mut gates, "RL".into(), GateRole::Reservoir, Some(qc))];
        let mut barriers = vec![push_gate(&mut gates, "B0".into(), GateRole::Barrier, Some(qc))];
        qgates.push(barriers[0]);
        let mut plungers = Vec::new();
        for i in 1..=qubit_dots {
            let p = push_gate(&mut gates, format!("P{i}"), GateRole::Plunger, Some(qc));
            let b = push_gate(&mut gates, format!("B{i}"), GateRole::Barrier, Some(qc));
            plungers.push(p);
            barriers.push(b);
            qgates.push(p);
            qgates.push(b);
        }
        qgates.push(push_gate(&mut gates, "RR".into(), GateRole::Reservoir, Some(qc)));
        channels.push(ChannelInfo {
            name: "Q".into(),
            kind: ChannelKind::Qubit,
            gates: qgates,
            ohmics: vec![OhmicId(0), OhmicId(1)],
        });

        // Sensor channels share one drain contact.
        let shared_drain = OhmicId(2 + sensors);
        let mut sensor_dots = Vec::new();
        for k in 1..=sensors {
            let ch = ChannelId(channels.len());
            let source = OhmicId(ohmics.len());
            ohmics.push(format!("S{k}S"));
            let r = push_gate(&mut gates, format!("S{k}R"), GateRole::Reservoir, Some(ch));
            let bl = push_gate(&mut gates, format!("S{k}BL"), GateRole::Barrier, Some(ch));
            let p = push_gate(&mut gates, format!("S{k}P"), GateRole::Plunger, Some(ch));
            let br = push_gate(&mut gates, format!("S{k}BR"), GateRole::Barrier, Some(ch));
            channels.push(ChannelInfo {
                name: format!("S{k}"),
                kind: ChannelKind::Sensor,
                gates: vec![r, bl, p, br],
                ohmics: vec![source, shared_drain],
            });
            sensor_dots.push((ch, p, [bl, br]));
        }
        ohmics.push("SD".to_string());

        let per_sensor = qubit_dots / sensors;
        for (i, &p) in plungers.iter().enumerate() {
            dots.push(DotInfo {
                name: format!("Q{}", i + 1),
                kind: ChannelKind::Qubit,
                channel: qc,
                plunger: p,
                barriers: [barriers[i], barriers[i + 1]],
                sensor: Some(DotId(qubit_dots + i / per_sensor)),
            });
        }
        for (k, (ch, p, b)) in sensor_dots.into_iter().enumerate() {
            dots.push(DotInfo {
                name: format!("S{}", k + 1),
                kind: ChannelKind::Sensor,
                channel: ch,
                plunger: p,
                barriers: b,
                sensor: None,
            });
        }

        let screening = push_gate(&mut gates, "SCR".into(), GateRole::Screening, None);

        DeviceLayout {
            gates,
            channels,
            dots,
            ohmics,
            screening: Some(screening),
        }
    }

    pub fn gate(&self, id: GateId) -> Result<&GateInfo> {
        self.gates.get(id.0).ok_or(Error::UnknownGate(id.0))
    }

    pub fn dot(&self, id: DotId) -> Result<&DotInfo> {
        self.dots.get(id.0).ok_or(Error::UnknownDot(id.0))
    }

    pub fn channel(&self, id: ChannelId) -> Result<&ChannelInfo> {
        self.channels.get(id.0).ok_or(Error::UnknownChannel(id.0))
    }

    pub fn gate_by_name(&self, name: &str) -> Result<GateId> {
        self.gates
            .iter()
            .position(|g| g.name == name)
            .map(GateId)
            .ok_or_else(|| Error::UnknownGateName(name.to_string()))
    }

    pub fn dot_by_name(&self, name: &str) -> Option<DotId> {
        self.dots.iter().position(|d| d.name == name).map(DotId)
    }

    pub fn gate_name(&self, id: GateId) -> &str {
        &self.gates[id.0].name
    }

    pub fn qubit_channel(&self) -> Option<ChannelId> {
        self.channels
            .iter()
            .position(|c| c.kind == ChannelKind::Qubit)
            .map(ChannelId)
    }

    pub fn sensor_channels(&self) -> impl Iterator<Item = ChannelId> + '_ {
        self.channels
            .iter()
            .enumerate()
            .filter(|(_, c)| c.kind == ChannelKind::Sensor)
            .map(|(i, _)| ChannelId(i))
    }

    pub fn qubit_dots(&self) -> impl Iterator<Item = DotId> + '_ {
        self.dots
            .iter()
            .enumerate()
            .filter(|(_, d)| d.kind == ChannelKind::Qubit)
            .map(|(i, _)| DotId(i))
    }

    pub fn sensor_dots(&self) -> impl Iterator<Item = DotId> + '_ {
        self.dots
            .iter()
            .enumerate()
            .filter(|(_, d)| d.kind == ChannelKind::Sensor)
            .map(|(i, _)| DotId(i))
    }

    /// Dots defined (plunger or barrier) by the given gate.
    pub fn dots_of_gate(&self, gate: GateId) -> Vec<DotId> {
        self.dots
            .iter()
            .enumerate()
            .filter(|(_, d)| d.plunger == gate || d.barriers.contains(&gate))
            .map(|(i, _)| DotId(i))
            .collect()
    }

    /// Plunger/barrier sequence of the qubit channel, reservoirs excluded.
    pub fn qubit_array(&self) -> Vec<GateId> {
        let Some(qc) = self.qubit_channel() else {
            return Vec::new();
        };
        self.channels[qc.0]
            .gates
            .iter()
            .copied()
            .filter(|&g| matches!(self.gates[g.0].role, GateRole::Plunger | GateRole::Barrier))
            .collect()
    }

    /// Checks structural invariants of a dot-array layout.
    pub fn validate(&self) -> Result<()> {
        for (ci, ch) in self.channels.iter().enumerate() {
            for &g in &ch.gates {
                let info = self.gate(g)?;
                if info.channel != Some(ChannelId(ci)) {
                    return Err(Error::validation(format!(
                        "gate {} listed on channel {} but tagged otherwise",
                        info.name, ch.name
                    )));
                }
            }
            for &o in &ch.ohmics {
                if o.0 >= self.ohmics.len() {
                    return Err(Error::validation(format!("channel {} has unknown ohmic", ch.name)));
                }
            }
        }
        let array = self.qubit_array();
        let plungers = array
            .iter()
            .filter(|&&g| self.gates[g.0].role == GateRole::Plunger)
            .count();
        if !array.is_empty() && array.len() != 2 * plungers + 1 {
            return Err(Error::validation(format!(
                "qubit array has {} plunger/barrier gates for {} plungers",
                array.len(),
                plungers
            )));
        }
        for dot in &self.dots {
            if self.gate(dot.plunger)?.role != GateRole::Plunger {
                return Err(Error::validation(format!("dot {} plunger has wrong role", dot.name)));
            }
            let ch = self.channel(dot.channel)?;
            let pos = ch
                .gates
                .iter()
                .position(|&g| g == dot.plunger)
                .ok_or_else(|| Error::validation(format!("dot {} plunger off-channel", dot.name)))?;
            let adjacent = pos > 0
                && pos + 1 < ch.gates.len()
                && ch.gates[pos - 1] == dot.barriers[0]
                && ch.gates[pos + 1] == dot.barriers[1];
            if !adjacent {
                return Err(Error::validation(format!(
                    "dot {} plunger is not flanked by its two barriers",
                    dot.name
                )));
            }
            for &b in &dot.barriers {
                if self.gate(b)?.role != GateRole::Barrier {
                    return Err(Error::validation(format!("dot {} barrier has wrong role", dot.name)));
                }
            }
            if let Some(s) = dot.sensor {
                if self.dot(s)?.kind != ChannelKind::Sensor {
                    return Err(Error::validation(format!("dot {} paired with non-sensor", dot.name)));
                }
            }
        }
        Ok(())
    }
}

/// Mirror-symmetric gate pairs of the qubit array.
///
/// Gate `i` of the plunger/barrier sequence is paired with gate `n - 1 - i`;
/// for an odd-length array the center gate stays unpaired.
pub fn mirror_pairs(layout: &DeviceLayout) -> Result<Vec<(GateId, GateId)>> {
    let array = layout.qubit_array();
    if array.len() < 2 {
        return Err(Error::Asymmetric(
            "fewer than two plunger/barrier gates on the qubit channel".into(),
        ));
    }
    let n = array.len();
    for i in 0..n / 2 {
        let (a, b) = (array[i], array[n - 1 - i]);
        if layout.gates[a.0].role != layout.gates[b.0].role {
            return Err(Error::Asymmetric(format!(
                "{} and {} mirror each other but have different roles",
                layout.gates[a.0].name, layout.gates[b.0].name
            )));
        }
    }
    Ok((0..n / 2).map(|i| (array[i], array[n - 1 - i])).collect())
}
