use std::path::{Path, PathBuf};

use super::config::{read_text, ResolvedConfig};
use super::report::{build_report, device_label, CampaignReport, Provenance, ScanFlag};
use super::run::{CONFIG_FILE, RECORD_FILE};
use crate::analysis::analyze_scan;
use crate::instrument::{parse_scan, ScanKind};
use crate::tuneup::DeviceRecord;
use crate::{Error, Result};

pub fn load_resolved_config(root: &Path) -> Result<ResolvedConfig> {
    let path = root.join(CONFIG_FILE);
    serde_json::from_str(&read_text(&path)?).map_err(|source| Error::Json { path, source })
}

fn sorted_dirs(dir: &Path, prefix: &str) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let path = entry.path();
        if path.is_dir() && entry.file_name().to_string_lossy().starts_with(prefix) {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

/// Every device record under a campaign root, in die-major order.
pub fn load_records(root: &Path) -> Result<Vec<DeviceRecord>> {
    let mut records = Vec::new();
    for die in sorted_dirs(root, "die-")? {
        for dev in sorted_dirs(&die, "dev-")? {
            let path = dev.join(RECORD_FILE);
            records.push(DeviceRecord::from_json(&read_text(&path)?, &path)?);
        }
    }
    records.sort_by_key(|r| (r.identity.die, r.identity.device));
    Ok(records)
}

/// Re-analyzes every stored charge-sensing scan. A scan that cannot be read
/// back is flagged and left out of the statistics.
fn reanalyze(root: &Path, record: &mut DeviceRecord, cfg: &ResolvedConfig, flags: &mut Vec<ScanFlag>) {
    let layout = cfg.wafer.layout.build();
    let label = device_label(record);
    for dot in &mut record.dots {
        let Some(sensing) = dot.sensing.as_mut() else { continue };
        let Some(file) = sensing.scan.clone() else { continue };
        let path = root.join(&label).join(&file);
        let grid = read_text(&path).and_then(|text| parse_scan(&text, &layout)).and_then(|grid| {
            if grid.plan.kind == ScanKind::PlungerVsBarriers {
                Ok(grid)
            } else {
                Err(Error::validation(format!("expected a sensing scan, found {}", grid.plan.kind.as_str())))
            }
        });
        match grid {
            // An analysis error counts as a failed scan, as it does during the run.
            Ok(grid) => sensing.summary = analyze_scan(&grid, &cfg.pipeline.analysis).ok().map(|a| a.summary),
            Err(e) => {
                flags.push(ScanFlag {
                    device: label.clone(),
                    file,
                    message: e.to_string(),
                });
                sensing.scan = None;
                sensing.summary = None;
            }
        }
    }
}

/// Recomputes the campaign report from the files under `root` alone.
pub fn analyze_campaign(root: &Path) -> Result<CampaignReport> {
    let cfg = load_resolved_config(root)?;
    let layout = cfg.wafer.layout.build();
    let mut records = load_records(root)?;
    if records.is_empty() {
        return Err(Error::InsufficientData(format!("no device records under {}", root.display())));
    }
    let mut flags = Vec::new();
    for r in &mut records {
        reanalyze(root, r, &cfg, &mut flags);
    }
    let provenance = Provenance::new(cfg.hash(), cfg.wafer.id(), cfg.wafer.seed);
    Ok(build_report(&records, &layout, provenance, flags))
}
