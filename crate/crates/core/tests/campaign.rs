use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use qdprobe::campaign::*;
use qdprobe::wafer::DeviceLayout;
use qdprobe::Error;

fn smoke(out: &Path) -> CampaignConfig {
    let mut cfg = CampaignConfig::from_toml(include_str!("../../../configs/smoke.toml")).unwrap();
    cfg.output_dir = out.to_path_buf();
    cfg
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap()
}

/// Every file under `root` with its bytes, keyed by relative path.
fn tree(root: &Path) -> BTreeMap<String, Vec<u8>> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<String, Vec<u8>>) {
        for entry in std::fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                walk(root, &path, out);
            } else {
                let rel = path.strip_prefix(root).unwrap().to_string_lossy().replace('\\', "/");
                out.insert(rel, std::fs::read(&path).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(root, root, &mut out);
    out
}

fn first_sensing_scan(root: &Path) -> (String, PathBuf) {
    let records = load_records(root).unwrap();
    let r = &records[0];
    let file = r
        .dots
        .iter()
        .find_map(|d| d.sensing.as_ref().and_then(|s| s.scan.clone()))
        .expect("smoke device has sensing scans");
    (file.clone(), root.join(device_label(r)).join(file))
}

#[test]
fn smoke_campaign_writes_the_full_tree_quickly() {
    let dir = tempfile::tempdir().unwrap();
    let t = Instant::now();
    let run = run_campaign(&smoke(dir.path())).unwrap();
    let elapsed = t.elapsed().as_secs_f64();
    assert!(elapsed < 5.0, "smoke campaign took {elapsed:.2} s");

    assert_eq!(run.root, dir.path().join("smoke-s1"));
    for f in [MANIFEST_FILE, CONFIG_FILE, GROUND_TRUTH_FILE, REPORT_FILE] {
        assert!(run.root.join(f).is_file(), "{f} missing");
    }
    let m = Manifest::load(&run.root).unwrap();
    assert_eq!(m.status, RunStatus::Complete);
    assert_eq!((m.devices_total, m.devices_written), (1, 1));
    // every file on disk except the manifest itself is checksummed
    let files = tree(&run.root);
    for (rel, bytes) in &files {
        if rel == MANIFEST_FILE {
            continue;
        }
        assert_eq!(m.files.get(rel), Some(&sha256_hex(bytes)), "{rel}");
    }
    assert_eq!(m.files.len(), files.len() - 1);
    assert!(files.keys().any(|k| k.contains("/scans/") && k.ends_with(".csv")));
    assert_eq!(run.report.devices, 1);
    assert_eq!(read(&run.root.join(REPORT_FILE)), report_json(&run.report));
}

#[test]
fn same_config_twice_gives_identical_artifacts() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let ra = run_campaign(&smoke(a.path())).unwrap();
    let rb = run_campaign(&smoke(b.path())).unwrap();
    assert_eq!(ra.manifest.record_and_report_checksums(), rb.manifest.record_and_report_checksums());
    assert_eq!(ra.manifest.files, rb.manifest.files);

    // only the manifest carries timestamps
    let (ta, tb) = (tree(&ra.root), tree(&rb.root));
    for (rel, bytes) in &ta {
        if rel != MANIFEST_FILE {
            assert_eq!(Some(bytes), tb.get(rel), "{rel}");
        }
    }
    let strip = |m: &Manifest| Manifest {
        started_unix: 0,
        finished_unix: 0,
        ..m.clone()
    };
    assert_eq!(
        serde_json::to_string(&strip(&ra.manifest)).unwrap(),
        serde_json::to_string(&strip(&rb.manifest)).unwrap()
    );

    // rerunning into the same directory replaces the earlier output
    let again = run_campaign(&smoke(a.path())).unwrap();
    assert_eq!(again.manifest.files, ra.manifest.files);
}

#[test]
fn stored_campaign_reanalyzes_to_the_run_report() {
    let dir = tempfile::tempdir().unwrap();
    let run = run_campaign(&smoke(dir.path())).unwrap();
    let fresh = analyze_campaign(&run.root).unwrap();
    assert_eq!(report_json(&fresh), report_json(&run.report));

    // the wafer ground truth is not needed for the statistics
    std::fs::remove_dir_all(run.root.join("ground-truth")).unwrap();
    let blind = analyze_campaign(&run.root).unwrap();
    assert_eq!(report_json(&blind), report_json(&run.report));
}

#[test]
fn corrupted_scan_is_flagged_and_the_rest_analyzed() {
    let dir = tempfile::tempdir().unwrap();
    let run = run_campaign(&smoke(dir.path())).unwrap();
    let (file, path) = first_sensing_scan(&run.root);
    let text = read(&path);
    std::fs::write(&path, &text[..text.len() / 2]).unwrap();

    let report = analyze_campaign(&run.root).unwrap();
    assert_eq!(report.scan_flags.len(), 1);
    assert_eq!(report.scan_flags[0].file, file);
    assert_eq!(report.scans_attempted, run.report.scans_attempted - 1);
    assert!(report.scans_successful + 1 >= run.report.scans_successful);
    assert!(report.scans_successful > 0);
    assert!(report.dots.iter().all(|d| d.scan != file));
    // device-level statistics do not depend on the scans
    assert_eq!(report.yields, run.report.yields);
    assert_eq!(report.vt, run.report.vt);
}

#[test]
fn schema_mismatch_is_an_explicit_error() {
    let dir = tempfile::tempdir().unwrap();
    let run = run_campaign(&smoke(dir.path())).unwrap();

    let bump = |path: &Path| {
        let mut v: serde_json::Value = serde_json::from_str(&read(path)).unwrap();
        v["schema_version"] = 99.into();
        std::fs::write(path, serde_json::to_string_pretty(&v).unwrap()).unwrap();
    };
    bump(&run.root.join(MANIFEST_FILE));
    match Manifest::load(&run.root) {
        Err(Error::SchemaVersion { found: 99, .. }) => {}
        other => panic!("expected a schema error, got {:?}", other.map(|m| m.status)),
    }

    let record = run.root.join("die-00-00/dev-0").join(RECORD_FILE);
    bump(&record);
    let err = analyze_campaign(&run.root).unwrap_err();
    assert!(matches!(err, Error::SchemaVersion { found: 99, .. }), "{err}");
    assert!(err.to_string().contains("expected 1"));
}

#[test]
fn render_formats_and_unknown_format() {
    let dir = tempfile::tempdir().unwrap();
    let run = run_campaign(&smoke(dir.path())).unwrap();
    let layout = DeviceLayout::twelve_qd();
    let out = dir.path().join("rendered");
    let svg = render_report(&run.report, &layout, "svg", &out, Some(&run.root)).unwrap();
    assert_eq!(svg.len(), 4);
    for p in &svg {
        let s = read(p);
        assert!(s.starts_with("<svg") || s.starts_with("<?xml"), "{}", p.display());
        assert!(s.trim_end().ends_with("</svg>"));
    }
    let gallery = read(&out.join("sensing-gallery.svg"));
    assert!(gallery.contains("data:image/png;base64,"));
    // one histogram per qubit-channel gate
    let vt = read(&out.join("vt-histograms.svg"));
    let gates = &layout.channels[layout.qubit_channel().unwrap().0].gates;
    assert_eq!(gates.len(), 27);
    for g in gates {
        assert!(vt.contains(&format!(">{} (n=1)<", layout.gate_name(*g))), "{}", layout.gate_name(*g));
    }

    let csv = render_report(&run.report, &layout, "csv", &out, None).unwrap();
    assert_eq!(csv.len(), 5);
    let dots = read(&out.join("dots.csv"));
    assert_eq!(dots.lines().count(), run.report.dots.len() + 1);

    let json = render_report(&run.report, &layout, "json", &out, None).unwrap();
    assert_eq!(read(&json[0]), report_json(&run.report));

    let err = render_report(&run.report, &layout, "pdf", &out, None).unwrap_err();
    let msg = err.to_string();
    assert!(matches!(err, Error::UnknownFormat { .. }));
    for f in SUPPORTED_FORMATS {
        assert!(msg.contains(f), "{msg}");
    }
}

#[test]
fn empty_sections_render_a_note() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = smoke(dir.path());
    cfg.pipeline.charge_sensing = false;
    let run = run_campaign(&cfg).unwrap();
    assert!(run.report.dots.is_empty());
    assert!(run.report.one_electron.is_none());

    let out = dir.path().join("rendered");
    render_report(&run.report, &DeviceLayout::twelve_qd(), "svg", &out, Some(&run.root)).unwrap();
    for f in ["one-electron.svg", "wafer-map.svg", "sensing-gallery.svg"] {
        assert!(read(&out.join(f)).contains("omitted"), "{f}");
    }
    render_report(&run.report, &DeviceLayout::twelve_qd(), "csv", &out, None).unwrap();
    assert_eq!(read(&out.join("dots.csv")).lines().count(), 1);

    // no stored scans: the gallery falls back to a note
    let sensed = run_campaign(&smoke(&dir.path().join("b"))).unwrap();
    render_report(&sensed.report, &DeviceLayout::twelve_qd(), "svg", &out, None).unwrap();
    assert!(read(&out.join("sensing-gallery.svg")).contains("omitted"));
}

#[test]
fn device_failure_leaves_a_partial_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().join("smoke-s1");
    std::fs::create_dir_all(&root).unwrap();
    // a plain file where the device directory should go
    std::fs::write(root.join("die-00-00"), "in the way").unwrap();

    match run_campaign(&smoke(dir.path())) {
        Err(Error::Partial { manifest, failed }) => {
            assert_eq!(failed, 1);
            assert_eq!(manifest, root.join(MANIFEST_FILE));
        }
        other => panic!("expected a partial run, got {:?}", other.map(|r| r.root)),
    }
    let m = Manifest::load(&root).unwrap();
    assert_eq!(m.status, RunStatus::Partial);
    assert_eq!(m.devices_written, 0);
    assert_eq!(m.failures[0].device, "die-00-00/dev-0");
    assert!(!root.join(REPORT_FILE).exists());
    // the blocker was not ours to delete
    assert_eq!(read(&root.join("die-00-00")), "in the way");
}

#[test]
fn invalid_config_is_rejected_before_any_output() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = smoke(dir.path());
    cfg.parallelism = 0;
    assert!(matches!(run_campaign(&cfg), Err(Error::Validation(_))));
    assert!(std::fs::read_dir(dir.path()).unwrap().next().is_none());
    assert!(CampaignConfig::from_toml("output_dir = 3").is_err());
}

const GOLDEN: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/golden");

#[test]
fn golden_fixture_reanalyzes_exactly() {
    let root = Path::new(GOLDEN).join("campaign");
    let expected = read(&Path::new(GOLDEN).join("expected-report.json"));
    let report = analyze_campaign(&root).unwrap();
    assert_eq!(report_json(&report), expected);
}

/// Regenerates the golden fixture: `cargo test --test campaign -- --ignored bless`.
#[test]
#[ignore]
fn bless_golden_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let run = run_campaign(&smoke(dir.path())).unwrap();
    let golden = Path::new(GOLDEN);
    let _ = std::fs::remove_dir_all(golden);
    for (rel, bytes) in tree(&run.root) {
        if rel.starts_with("report/") || rel.starts_with("ground-truth/") || rel == MANIFEST_FILE
            || rel.contains("/scans/barrier-barrier-")
        {
            continue;
        }
        let path = golden.join("campaign").join(rel);
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(path, bytes).unwrap();
    }
    std::fs::write(golden.join("expected-report.json"), report_json(&run.report)).unwrap();
}
