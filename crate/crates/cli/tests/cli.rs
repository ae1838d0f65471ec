use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn qdprobe(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qdprobe"))
        .args(args)
        .current_dir(cwd)
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn smoke_config() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/smoke.toml")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn campaign_run_analyze_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("runs");
    let o = qdprobe(&["campaign-run", "--config", s(&smoke_config()), "--out", s(&out)], dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let root = out.join("smoke-s1");
    assert!(stdout(&o).contains("yield devices: 1/1"));
    for f in ["manifest.json", "report/report.json", "report/dots.csv", "report/vt-histograms.svg"] {
        assert!(root.join(f).is_file(), "{f}");
    }

    let o = qdprobe(&["analyze", s(&root)], dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(
        std::fs::read_to_string(root.join("analysis/report.json")).unwrap(),
        std::fs::read_to_string(root.join("report/report.json")).unwrap()
    );

    let re = dir.path().join("re");
    let o = qdprobe(&["report", s(&root), "--format", "csv", "--out", s(&re)], dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(re.join("yields.csv").is_file());

    let o = qdprobe(&["report", s(&root), "--format", "svg,pdf", "--out", s(&dir.path().join("x"))], dir.path());
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("svg, csv, json"), "{}", stderr(&o));
    assert!(!dir.path().join("x").exists());

    // seed override lands in a different wafer directory
    let o = qdprobe(&["wafer-gen", "--config", s(&smoke_config()), "--out", s(&out), "--seed", "9"], dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(out.join("smoke-s9/ground-truth/wafer.json").is_file());
}

#[test]
fn validation_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let missing = qdprobe(&["campaign-run", "--config", "nope.toml"], dir.path());
    assert_eq!(code(&missing), 1);
    assert!(stderr(&missing).starts_with("error:"));

    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "parallelism = 0\n[wafer]\nname = \"x\"\n").unwrap();
    assert_eq!(code(&qdprobe(&["campaign-run", "--config", s(&bad)], dir.path())), 1);
    std::fs::write(&bad, "this is not toml").unwrap();
    assert_eq!(code(&qdprobe(&["campaign-run", "--config", s(&bad)], dir.path())), 1);

    let o = qdprobe(
        &["campaign-run", "--config", s(&smoke_config()), "--out", s(dir.path()), "--format", "gif"],
        dir.path(),
    );
    assert_eq!(code(&o), 1);
    assert!(!dir.path().join("smoke-s1").exists());

    assert_eq!(code(&qdprobe(&["campaign-run"], dir.path())), 1);
    assert_eq!(code(&qdprobe(&["--help"], dir.path())), 0);
}

#[test]
fn runtime_and_partial_failures() {
    let dir = tempfile::tempdir().unwrap();
    let o = qdprobe(&["analyze", s(&dir.path().join("absent"))], dir.path());
    assert_eq!(code(&o), 2, "{}", stderr(&o));

    let out = dir.path().join("runs");
    std::fs::create_dir_all(out.join("smoke-s1")).unwrap();
    std::fs::write(out.join("smoke-s1/die-00-00"), "blocker").unwrap();
    let o = qdprobe(&["campaign-run", "--config", s(&smoke_config()), "--out", s(&out)], dir.path());
    assert_eq!(code(&o), 3, "{}", stderr(&o));
    let manifest = std::fs::read_to_string(out.join("smoke-s1/manifest.json")).unwrap();
    assert!(manifest.contains("\"partial\"") || manifest.contains("\"Partial\""), "{manifest}");
}

#[test]
fn fault_inject_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("faulty.toml");
    let o = qdprobe(
        &[
            "fault-inject", "--config", s(&smoke_config()), "--out", s(&cfg),
            "--kind", "dead-gate", "--die", "0", "--device", "0", "--target", "P3",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = std::fs::read_to_string(&cfg).unwrap();
    assert!(text.contains("dead-gate") && text.contains("P3"), "{text}");

    let out = dir.path().join("runs");
    let o = qdprobe(&["campaign-run", "--config", s(&cfg), "--out", s(&out), "--format", "json"], dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("yield gates: 43/44"), "{}", stdout(&o));
    assert!(stdout(&o).contains("yield devices: 0/1"));

    let o = qdprobe(
        &[
            "fault-inject", "--config", s(&smoke_config()), "--out", s(&cfg),
            "--kind", "dead-gate", "--die", "0", "--device", "0", "--target", "P99",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 1, "{}", stderr(&o));
    let o = qdprobe(&["fault-inject", "--config", s(&smoke_config()), "--out", s(&cfg)], dir.path());
    assert_eq!(code(&o), 1);

    // the fixture needs the full 58 x 4 wafer
    let full = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/noise-free.toml");
    let o = qdprobe(&["fault-inject", "--config", s(&full), "--out", s(&cfg), "--yield-fixture"], dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(std::fs::read_to_string(&cfg).unwrap().matches("leaky-dot").count(), 9);
    let o = qdprobe(&["fault-inject", "--config", s(&smoke_config()), "--out", s(&cfg), "--yield-fixture"], dir.path());
    assert_eq!(code(&o), 1);
}
