use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{read_text, sha256_hex, CampaignConfig, ResolvedConfig};
use super::report::{build_report, CampaignReport, Provenance};
use crate::instrument::{write_scan, ProbeSession};
use crate::tuneup::{run_device_pipeline, DeviceRecord};
use crate::wafer::{generate_wafer, DeviceTruth, Wafer};
use crate::{Error, Result};

pub const MANIFEST_SCHEMA_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";
pub const CONFIG_FILE: &str = "config.json";
pub const GROUND_TRUTH_FILE: &str = "ground-truth/wafer.json";
pub const REPORT_FILE: &str = "report/report.json";
pub const RECORD_FILE: &str = "record.json";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunStatus {
    Complete,
    Partial,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeviceFailure {
    pub device: String,
    pub message: String,
}

/// The only file of a campaign that carries wall-clock time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub status: RunStatus,
    pub wafer_id: String,
    pub seed: u64,
    pub config_hash: String,
    pub tool_version: String,
    pub started_unix: u64,
    pub finished_unix: u64,
    pub devices_total: usize,
    pub devices_written: usize,
    pub failures: Vec<DeviceFailure>,
    /// sha-256 of every written file, by path relative to the campaign root.
    pub files: BTreeMap<String, String>,
}

impl Manifest {
    pub fn load(root: &Path) -> Result<Self> {
        let path = root.join(MANIFEST_FILE);
        let m: Manifest = serde_json::from_str(&read_text(&path)?).map_err(|source| Error::Json { path, source })?;
        if m.schema_version != MANIFEST_SCHEMA_VERSION {
            return Err(Error::SchemaVersion {
                what: "campaign manifest".into(),
                found: m.schema_version,
                expected: MANIFEST_SCHEMA_VERSION,
            });
        }
        Ok(m)
    }

    /// Checksums of the device records and the report.
    pub fn record_and_report_checksums(&self) -> BTreeMap<&str, &str> {
        self.files
            .iter()
            .filter(|(k, _)| k.ends_with(RECORD_FILE) || k.as_str() == REPORT_FILE)
            .map(|(k, v)| (k.as_str(), v.as_str()))
            .collect()
    }
}

pub struct CampaignRun {
    pub root: PathBuf,
    pub report: CampaignReport,
    pub manifest: Manifest,
}

fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

/// Writes `bytes` under `root` and returns (relative path, checksum).
pub(crate) fn write_file(root: &Path, rel: &str, bytes: &[u8]) -> Result<(String, String)> {
    let path = root.join(rel);
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
    Ok((rel.to_string(), sha256_hex(bytes)))
}

pub fn device_dir(wafer: &Wafer, dev: &DeviceTruth) -> String {
    format!("{}/dev-{}", wafer.dies[dev.die].dir_name(), dev.index)
}

fn run_device(
    wafer: &Wafer,
    dev: &DeviceTruth,
    cfg: &ResolvedConfig,
    root: &Path,
) -> Result<(DeviceRecord, Vec<(String, String)>)> {
    let mut pipeline = cfg.pipeline.clone();
    pipeline.charge_sensing &= dev.index < cfg.sensing_devices_per_die;
    let mut session = ProbeSession::new(wafer, dev.die, dev.index, cfg.instrument.clone())?;
    let run = run_device_pipeline(&mut session, &pipeline);
    let dir = device_dir(wafer, dev);
    let mut files = Vec::with_capacity(run.scans.len() + 1);
    for (r, grid) in run.record.scans.iter().zip(&run.scans) {
        files.push(write_file(root, &format!("{dir}/{}", r.file), write_scan(grid, &wafer.layout).as_bytes())?);
    }
    files.push(write_file(root, &format!("{dir}/{RECORD_FILE}"), run.record.to_json().as_bytes())?);
    Ok((run.record, files))
}

/// Clears the output of an earlier run of the same campaign. A directory
/// without a manifest is left alone.
fn clear_previous(root: &Path) -> Result<()> {
    if !root.join(MANIFEST_FILE).is_file() {
        return Ok(());
    }
    let entries = std::fs::read_dir(root).map_err(|e| Error::io(root, e))?;
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(root, e))?;
        let name = entry.file_name().to_string_lossy().into_owned();
        let ours = name.starts_with("die-")
            || ["ground-truth", "report", MANIFEST_FILE, CONFIG_FILE].contains(&name.as_str());
        if !ours {
            continue;
        }
        let path = entry.path();
        let res = if path.is_dir() {
            std::fs::remove_dir_all(&path)
        } else {
            std::fs::remove_file(&path)
        };
        res.map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}

fn write_manifest(root: &Path, manifest: &Manifest) -> Result<()> {
    let mut text = serde_json::to_string_pretty(manifest).expect("manifest serializes");
    text.push('\n');
    write_file(root, MANIFEST_FILE, text.as_bytes()).map(|_| ())
}

/// Runs every device of the wafer and persists the artifact tree under
/// `{output_dir}/{wafer-id}`.
pub fn run_campaign(cfg: &CampaignConfig) -> Result<CampaignRun> {
    cfg.validate()?;
    let resolved = cfg.resolved()?;
    let wafer = generate_wafer(&resolved.wafer)?;
    let root = cfg.output_dir.join(wafer.id());
    let started = unix_now();
    std::fs::create_dir_all(&root).map_err(|e| Error::io(&root, e))?;
    clear_previous(&root)?;

    let mut files = BTreeMap::new();
    let config_hash = resolved.hash();
    files.extend([
        write_file(&root, CONFIG_FILE, resolved.to_json().as_bytes())?,
        write_file(&root, GROUND_TRUTH_FILE, wafer.to_json().as_bytes())?,
    ]);

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.parallelism)
        .build()
        .map_err(|e| Error::validation(format!("worker pool: {e}")))?;
    let results: Vec<Result<(DeviceRecord, Vec<(String, String)>)>> = pool.install(|| {
        wafer
            .devices
            .par_iter()
            .map(|dev| run_device(&wafer, dev, &resolved, &root))
            .collect()
    });

    let mut records = Vec::with_capacity(results.len());
    let mut failures = Vec::new();
    for (dev, res) in wafer.devices.iter().zip(results) {
        match res {
            Ok((record, written)) => {
                files.extend(written);
                records.push(record);
            }
            Err(e) => failures.push(DeviceFailure {
                device: device_dir(&wafer, dev),
                message: e.to_string(),
            }),
        }
    }

    let mut manifest = Manifest {
        schema_version: MANIFEST_SCHEMA_VERSION,
        status: RunStatus::Complete,
        wafer_id: wafer.id(),
        seed: wafer.spec.seed,
        config_hash: config_hash.clone(),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        started_unix: started,
        finished_unix: 0,
        devices_total: wafer.devices.len(),
        devices_written: records.len(),
        failures,
        files,
    };
    if !manifest.failures.is_empty() {
        manifest.status = RunStatus::Partial;
        manifest.finished_unix = unix_now();
        write_manifest(&root, &manifest)?;
        return Err(Error::Partial {
            manifest: root.join(MANIFEST_FILE),
            failed: manifest.failures.len(),
        });
    }

    let provenance = Provenance::new(config_hash, wafer.id(), wafer.spec.seed);
    let report = build_report(&records, &wafer.layout, provenance, Vec::new());
    let (k, v) = write_file(&root, REPORT_FILE, report_json(&report).as_bytes())?;
    manifest.files.insert(k, v);
    manifest.finished_unix = unix_now();
    write_manifest(&root, &manifest)?;
    Ok(CampaignRun { root, report, manifest })
}

pub fn report_json(report: &CampaignReport) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report serializes");
    s.push('\n');
    s
}
