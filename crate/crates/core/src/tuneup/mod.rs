//! Automated per-device tune-up: contacts, channel turn-on, gate threshold
//! voltages, channel isolation, density equalization, dot corners and
//! charge-sensing acquisition.

mod channels;
mod config;
mod corner;
mod fault;
mod iv;
mod pipeline;
mod record;

pub use channels::{
    check_ohmics, equalize_density, isolate_channels, normalized_transconductance, sweep_gate, turn_on_channels,
    ChannelTurnOn, Equalization, GateSweep, OhmicCheck,
};
pub use config::*;
pub use corner::{fit_corner, CornerFit};
pub use fault::TuneupFault;
pub use iv::{extract_vt, IvCurve, VtFault, DEFAULT_VT_THRESHOLD};
pub use pipeline::{run_device_pipeline, DeviceRun};
pub use record::*;
