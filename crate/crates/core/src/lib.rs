//! Simulated 300 mm cryogenic wafer-probing stack for quantum-dot spin-qubit arrays.
//!
//! The crate is organised the way a measurement campaign flows:
//!
//! - [`wafer`] generates synthetic wafers of 12-quantum-dot devices with controllable
//!   disorder and keeps the ground truth for every quantity the pipeline estimates.
//! - [`instrument`] evaluates transport currents, cross-conductance and lock-in
//!   charge-sensing signals for a probed device.
//! - [`tuneup`] runs the automated per-device flow (channel turn-on, threshold
//!   extraction, isolation, density equalisation, barrier-barrier corner fits and
//!   charge-sensing acquisition).
//! - [`analysis`] detects transition curves in charge-sensing scans and extracts
//!   single-electron summaries, scan margins and electron temperature.
//! - [`stats`] aggregates wafer-level statistics (matched pairs, yield, voltage
//!   sharing, addition voltages, mobility, success rate).
//! - [`campaign`] ties everything together: configs, artifact trees, reports and plots.

pub mod analysis;
pub mod campaign;
mod error;
pub mod fit;
pub mod instrument;
pub mod stats;
pub mod tuneup;
pub mod units;
pub mod wafer;

pub use error::{Error, Result};
