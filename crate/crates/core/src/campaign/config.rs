use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::instrument::InstrumentConfig;
use crate::tuneup::PipelineConfig;
use crate::wafer::WaferSpec;
use crate::{Error, Result};

/// A measurement campaign. In TOML either `[wafer]` holds the spec inline or
/// `wafer_spec` points at a spec file (TOML or JSON, relative to the config).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CampaignConfig {
    pub wafer: Option<WaferSpec>,
    pub wafer_spec: Option<PathBuf>,
    /// Overrides the wafer spec seed.
    pub seed: Option<u64>,
    pub parallelism: usize,
    pub output_dir: PathBuf,
    /// Devices per die (lowest indices first) that get charge-sensing scans.
    pub sensing_devices_per_die: usize,
    pub pipeline: PipelineConfig,
    pub instrument: InstrumentConfig,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        CampaignConfig {
            wafer: None,
            wafer_spec: None,
            seed: None,
            parallelism: 1,
            output_dir: PathBuf::from("runs"),
            sensing_devices_per_die: 1,
            pipeline: PipelineConfig::default(),
            instrument: InstrumentConfig::default(),
        }
    }
}

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Reads a wafer spec from TOML or JSON, by extension.
pub fn load_wafer_spec(path: &Path) -> Result<WaferSpec> {
    let text = read_text(path)?;
    if path.extension().is_some_and(|e| e == "json") {
        serde_json::from_str(&text).map_err(|e| Error::Json {
            path: path.to_path_buf(),
            source: e,
        })
    } else {
        toml::from_str(&text).map_err(|e| Error::Toml(format!("{}: {e}", path.display())))
    }
}

impl CampaignConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Toml(e.to_string()))
    }

    /// Loads a config file; a relative `wafer_spec` is resolved against the
    /// file's directory and inlined.
    pub fn load(path: &Path) -> Result<Self> {
        let mut cfg = Self::from_toml(&read_text(path)?)
            .map_err(|e| Error::Toml(format!("{}: {e}", path.display())))?;
        if let Some(spec) = cfg.wafer_spec.take() {
            let spec = if spec.is_relative() {
                path.parent().unwrap_or(Path::new(".")).join(spec)
            } else {
                spec
            };
            if cfg.wafer.is_some() {
                return Err(Error::validation("give either [wafer] or wafer_spec, not both"));
            }
            cfg.wafer = Some(load_wafer_spec(&spec)?);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// The wafer spec with the seed override applied.
    pub fn wafer_spec(&self) -> Result<WaferSpec> {
        if self.wafer_spec.is_some() {
            return Err(Error::validation("wafer_spec path not resolved; load the config from its file"));
        }
        let mut spec = self
            .wafer
            .clone()
            .ok_or_else(|| Error::validation("campaign config needs a [wafer] table or wafer_spec"))?;
        if let Some(seed) = self.seed {
            spec.seed = seed;
        }
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.parallelism < 1 {
            return Err(Error::validation("parallelism must be at least 1"));
        }
        self.wafer_spec()?.validate()?;
        self.pipeline.validate()?;
        self.instrument.validate()
    }

    /// Everything that determines the campaign output. Parallelism and the
    /// output location are left out.
    pub fn resolved(&self) -> Result<ResolvedConfig> {
        Ok(ResolvedConfig {
            wafer: self.wafer_spec()?,
            sensing_devices_per_die: self.sensing_devices_per_die,
            pipeline: self.pipeline.clone(),
            instrument: self.instrument.clone(),
        })
    }

    pub fn canonical_json(&self) -> Result<String> {
        Ok(self.resolved()?.to_json())
    }

    pub fn hash(&self) -> Result<String> {
        Ok(self.resolved()?.hash())
    }
}

/// The resolved config stored with a campaign; analysis reads it back.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResolvedConfig {
    pub wafer: WaferSpec,
    pub sensing_devices_per_die: usize,
    pub pipeline: PipelineConfig,
    pub instrument: InstrumentConfig,
}

impl ResolvedConfig {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serializes");
        s.push('\n');
        s
    }

    pub fn hash(&self) -> String {
        sha256_hex(self.to_json().as_bytes())
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}
