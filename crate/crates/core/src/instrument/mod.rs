//! Virtual instrument: transport current, inter-channel cross-conductance and
//! lock-in charge-sensing signal of a probed device.

pub mod model;
mod format;
mod scan;
mod session;

pub use format::{parse_scan, write_scan, SCAN_FORMAT_VERSION};
pub use scan::{Axis, GateRamp, ScanGrid, ScanKind, ScanOrigin, ScanPlan, ScanTarget};
pub use session::{GateVoltages, InstrumentConfig, NoiseModel, ProbeSession};
