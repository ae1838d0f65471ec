//! Synthetic wafers and their ground truth.

mod layout;
mod spec;
mod truth;

pub use layout::{
    mirror_pairs, ChannelId, ChannelInfo, ChannelKind, DeviceLayout, DotId, DotInfo, GateId, GateInfo,
    GateRole, LayoutKind, OhmicId,
};
pub use spec::{
    yield_fixture_faults, DeviceModel, DisorderModel, FaultRates, InjectedFault, Polynomial2, RoleBaseline,
    WaferSpec, SUPPORTED_BARRIER_DEPTHS_NM, WAFER_RADIUS_MM,
};
pub use truth::{
    die_map, generate_wafer, stream_seed, DeviceTruth, Die, DotGroundTruth, GateCoupling, GateGroundTruth,
    LeverArm, Wafer, CUTOFF_RATE_HZ, WAFER_SCHEMA_VERSION,
};
