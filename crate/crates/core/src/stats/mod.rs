//! Wafer-level statistics over device records.

mod histogram;
mod matched;
mod mobility;
mod one_electron;
mod sharing;
mod success;
mod yields;

pub use histogram::Histogram;
pub use matched::{matched_pair_sigma, per_gate_std, sample_std, MatchedPairResult, PairSamples, MIN_PAIR_SAMPLES};
pub use mobility::{gate_overdrive, mobility_estimate, overestimate_factor, DEFAULT_DENSITY_CM2};
pub use one_electron::{
    mirror_dot_pairs, one_electron_statistics, variation_ratio, MetricStats, OneElectronReport, Ratio, DEFAULT_BINS,
};
pub use sharing::{count_single, optimal_common_voltage, share_device, voltage_sharing, DeviceSharing, VoltageSharingResult};
pub use success::success_rate;
pub use yields::{device_good, dot_good, gate_good, ohmic_good, yield_rollup, YieldCount, YieldRollup};
