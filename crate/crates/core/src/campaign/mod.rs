//! Campaign configs, the on-disk artifact tree, wafer-level reports and plots.

mod analyze;
mod config;
mod render;
mod report;
mod run;

pub use analyze::{analyze_campaign, load_records, load_resolved_config};
pub use config::{load_wafer_spec, read_text, sha256_hex, CampaignConfig, ResolvedConfig};
pub use render::{render_report, RenderFormat, SUPPORTED_FORMATS};
pub use report::{
    build_report, device_label, CampaignReport, DotRow, GateVtStats, MarginSummary, Provenance, ScanFlag,
    REPORT_SCHEMA_VERSION,
};
pub use run::{
    device_dir, report_json, run_campaign, CampaignRun, DeviceFailure, Manifest, RunStatus, CONFIG_FILE,
    GROUND_TRUTH_FILE, MANIFEST_FILE, MANIFEST_SCHEMA_VERSION, RECORD_FILE, REPORT_FILE,
};
