use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qdprobe::campaign::{
    analyze_campaign, load_resolved_config, read_text, render_report, report_json, run_campaign, CampaignConfig,
    CampaignReport, REPORT_FILE,
};
use qdprobe::wafer::{generate_wafer, yield_fixture_faults, InjectedFault};
use qdprobe::{Error, Result};

/// Simulated cryogenic wafer prober for quantum-dot arrays.
#[derive(Parser)]
#[command(name = "qdprobe", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Campaign config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Overrides the wafer seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; overrides the config's `output_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a wafer and write its ground truth.
    WaferGen {
        #[command(flatten)]
        common: Common,
    },
    /// Run the tune-up flow on every device and store scans, records and the report.
    CampaignRun {
        #[command(flatten)]
        common: Common,
        /// Worker threads.
        #[arg(long)]
        parallelism: Option<usize>,
        /// Report formats to render after the run.
        #[arg(long, value_delimiter = ',', default_value = "json,csv,svg")]
        format: Vec<String>,
    },
    /// Recompute the report from a stored campaign directory.
    Analyze {
        /// Campaign directory ({out}/{wafer-id}).
        dir: PathBuf,
        /// Where to write the recomputed report; defaults to {dir}/analysis.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render the stored report of a campaign directory.
    Report {
        dir: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "json,csv,svg")]
        format: Vec<String>,
        /// Defaults to {dir}/report.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Add injected faults to a campaign config (test utility).
    FaultInject {
        /// Campaign config to read.
        #[arg(long)]
        config: PathBuf,
        /// Where to write the modified config.
        #[arg(long)]
        out: PathBuf,
        /// Add the scripted nine-sensor-dot fixture.
        #[arg(long)]
        yield_fixture: bool,
        #[arg(long, requires_all = ["die", "device", "target"])]
        kind: Option<FaultKind>,
        #[arg(long)]
        die: Option<usize>,
        #[arg(long)]
        device: Option<usize>,
        /// Ohmic, gate or dot name, depending on the kind.
        #[arg(long)]
        target: Option<String>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum FaultKind {
    DeadOhmic,
    DeadGate,
    LeakyDot,
}

/// A config that cannot be read is a validation failure, not a runtime one.
fn read_config(path: &Path) -> Result<CampaignConfig> {
    CampaignConfig::load(path).map_err(|e| match e {
        Error::Io { .. } | Error::Json { .. } => Error::Validation(e.to_string()),
        e => e,
    })
}

fn load_config(common: &Common) -> Result<CampaignConfig> {
    let mut cfg = read_config(&common.config)?;
    if common.seed.is_some() {
        cfg.seed = common.seed;
    }
    if let Some(out) = &common.out {
        cfg.output_dir = out.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn render_all(report: &CampaignReport, root: &Path, formats: &[String], out: &Path) -> Result<()> {
    // Check every format before writing anything.
    for f in formats {
        f.parse::<qdprobe::campaign::RenderFormat>()?;
    }
    let layout = load_resolved_config(root)?.wafer.layout.build();
    for f in formats {
        for path in render_report(report, &layout, f, out, Some(root))? {
            println!("wrote {}", path.display());
        }
    }
    Ok(())
}

fn print_summary(report: &CampaignReport) {
    println!("devices: {}", report.devices);
    if let Some(y) = &report.yields {
        for (name, c) in [("ohmics", &y.ohmics), ("gates", &y.gates), ("dots", &y.dots), ("devices", &y.devices)] {
            println!("yield {name}: {}/{} ({:.1}%)", c.good, c.total, c.percentage());
        }
    }
    if let Some(r) = report.success_rate {
        println!(
            "charge-sensing success: {}/{} ({:.3})",
            report.scans_successful, report.scans_attempted, r
        );
    }
    for f in &report.scan_flags {
        println!("flagged scan {}/{}: {}", f.device, f.file, f.message);
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::WaferGen { common } => {
            let cfg = load_config(&common)?;
            let wafer = generate_wafer(&cfg.wafer_spec()?)?;
            let path = cfg.output_dir.join(wafer.id()).join(qdprobe::campaign::GROUND_TRUTH_FILE);
            if let Some(dir) = path.parent() {
                std::fs::create_dir_all(dir).map_err(|e| Error::Io {
                    path: dir.to_path_buf(),
                    source: e,
                })?;
            }
            std::fs::write(&path, wafer.to_json()).map_err(|e| Error::Io {
                path: path.clone(),
                source: e,
            })?;
            println!("wafer {}: {} dies, {} devices", wafer.id(), wafer.dies.len(), wafer.devices.len());
            println!("wrote {}", path.display());
        }
        Command::CampaignRun {
            common,
            parallelism,
            format,
        } => {
            let mut cfg = load_config(&common)?;
            if let Some(p) = parallelism {
                cfg.parallelism = p;
            }
            for f in &format {
                f.parse::<qdprobe::campaign::RenderFormat>()?;
            }
            let run = run_campaign(&cfg)?;
            println!("campaign {} written to {}", run.manifest.wafer_id, run.root.display());
            print_summary(&run.report);
            render_all(&run.report, &run.root, &format, &run.root.join("report"))?;
        }
        Command::Analyze { dir, out } => {
            let report = analyze_campaign(&dir)?;
            let out = out.unwrap_or_else(|| dir.join("analysis"));
            std::fs::create_dir_all(&out).map_err(|e| Error::Io {
                path: out.clone(),
                source: e,
            })?;
            let path = out.join("report.json");
            std::fs::write(&path, report_json(&report)).map_err(|e| Error::Io {
                path: path.clone(),
                source: e,
            })?;
            print_summary(&report);
            println!("wrote {}", path.display());
        }
        Command::Report { dir, format, out } => {
            let path = dir.join(REPORT_FILE);
            let report: CampaignReport =
                serde_json::from_str(&read_text(&path)?).map_err(|source| Error::Json { path, source })?;
            if report.schema_version != qdprobe::campaign::REPORT_SCHEMA_VERSION {
                return Err(Error::SchemaVersion {
                    what: "campaign report".into(),
                    found: report.schema_version,
                    expected: qdprobe::campaign::REPORT_SCHEMA_VERSION,
                });
            }
            let out = out.unwrap_or_else(|| dir.join("report"));
            render_all(&report, &dir, &format, &out)?;
        }
        Command::FaultInject {
            config,
            out,
            yield_fixture,
            kind,
            die,
            device,
            target,
        } => {
            let mut cfg = read_config(&config)?;
            let mut spec = cfg.wafer_spec()?;
            if yield_fixture {
                spec.faults.extend(yield_fixture_faults());
            }
            if let (Some(kind), Some(die), Some(device), Some(target)) = (kind, die, device, target) {
                spec.faults.push(match kind {
                    FaultKind::DeadOhmic => InjectedFault::DeadOhmic { die, device, ohmic: target },
                    FaultKind::DeadGate => InjectedFault::DeadGate { die, device, gate: target },
                    FaultKind::LeakyDot => InjectedFault::LeakyDot { die, device, dot: target },
                });
            } else if !yield_fixture {
                return Err(Error::Validation("give --yield-fixture or --kind with --die, --device and --target".into()));
            }
            spec.validate()?;
            cfg.seed = None;
            cfg.wafer = Some(spec);
            let text = toml::to_string(&cfg).map_err(|e| Error::Toml(e.to_string()))?;
            std::fs::write(&out, text).map_err(|e| Error::Io {
                path: out.clone(),
                source: e,
            })?;
            println!("wrote {}", out.display());
        }
    }
    Ok(())
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Partial { .. } => 3,
        Error::Validation(_)
        | Error::Toml(_)
        | Error::UnknownFormat { .. }
        | Error::UnknownGateName(_)
        | Error::SchemaVersion { .. } => 1,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
