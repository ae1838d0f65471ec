//! One PASS/FAIL line per acceptance criterion. Lines go straight to the
//! process stdout so they show up even when the harness captures output.

mod common;

use std::collections::BTreeMap;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use common::*;
use proptest::test_runner::{Config, TestRunner};
use qdprobe::analysis::*;
use qdprobe::campaign::*;
use qdprobe::instrument::{model::sech2, parse_scan};
use qdprobe::stats::*;
use qdprobe::units::BOLTZMANN_EV;
use qdprobe::wafer::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn verdict(n: u32, ok: bool, detail: String) {
    let line = format!("{} criterion {n}: {detail}\n", if ok { "PASS" } else { "FAIL" });
    let mut out = std::io::stdout().lock();
    out.write_all(line.as_bytes()).unwrap();
    out.flush().unwrap();
    assert!(ok, "criterion {n} failed: {detail}");
}

struct Campaign {
    run: CampaignRun,
    elapsed: Duration,
}

fn run_config(toml: &str, tag: &str, parallelism: usize) -> Campaign {
    let mut cfg = CampaignConfig::from_toml(toml).unwrap();
    cfg.output_dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join("acceptance").join(tag);
    cfg.parallelism = parallelism;
    let t = Instant::now();
    let run = run_campaign(&cfg).unwrap();
    Campaign {
        run,
        elapsed: t.elapsed(),
    }
}

const NOISE_FREE: &str = include_str!("../../../configs/noise-free.toml");
const CALIBRATED: &str = include_str!("../../../configs/calibrated-50nm.toml");

/// Noise-free full wafer, single worker thread.
fn noise_free() -> &'static Campaign {
    static C: OnceLock<Campaign> = OnceLock::new();
    C.get_or_init(|| run_config(NOISE_FREE, "noise-free", 1))
}

/// Calibrated 50 nm wafer with default noise and the scripted fault fixture.
fn calibrated() -> &'static Campaign {
    static C: OnceLock<Campaign> = OnceLock::new();
    C.get_or_init(|| run_config(CALIBRATED, "calibrated", 1))
}

struct OracleTally {
    scored: usize,
    within1: usize,
    within2: usize,
    skipped_no_midline: usize,
}

/// Extracted v1e against the wafer-model transition voltage at the
/// mid-row voltages of each stored scan. Dots whose 1e line does not reach
/// the mid row (tunnel rate below the lock-in frequency there) carry no
/// oracle value and are skipped; `only_successful` restricts to scans the
/// analysis marked successful.
fn v1e_oracle(root: &Path, only_successful: bool) -> OracleTally {
    let wafer = Wafer::from_json(&read_text(&root.join(GROUND_TRUTH_FILE)).unwrap(), Path::new("gt")).unwrap();
    let mut t = OracleTally {
        scored: 0,
        within1: 0,
        within2: 0,
        skipped_no_midline: 0,
    };
    for r in load_records(root).unwrap() {
        let truth = wafer.device(r.identity.die, r.identity.device).unwrap();
        let dir = root.join(device_label(&r));
        for (i, d) in r.dots.iter().enumerate() {
            let Some(s) = &d.sensing else { continue };
            let Some(file) = &s.scan else { continue };
            if !dot_good(&r, i) {
                continue;
            }
            let summary = s.summary.clone().unwrap_or_default();
            if only_successful && !summary.success {
                continue;
            }
            let grid = parse_scan(&read_text(&dir.join(file)).unwrap(), &wafer.layout).unwrap();
            let mut v = vec![0.0; grid.plan.fixed.len()];
            grid.plan.voltages_at((grid.rows() - 1) / 2, 0, &mut v);
            let dot = &truth.dots[i];
            if dot.tunnel_rate(&v) < grid.plan.lockin_frequency {
                t.skipped_no_midline += 1;
                continue;
            }
            t.scored += 1;
            let oracle = dot.transition_voltage_at(1, &v);
            if let Some(v1e) = summary.v1e {
                let steps = (v1e - oracle).abs() / grid.plan.swept.step();
                t.within1 += usize::from(steps <= 1.0);
                t.within2 += usize::from(steps <= 2.0);
            }
        }
    }
    t
}

#[test]
fn criterion_1_oracle_recovery_of_v1e() {
    let nf = noise_free();
    let dots = nf.run.report.scans_attempted;
    let clean = v1e_oracle(&nf.run.root, false);
    let noisy = v1e_oracle(&calibrated().run.root, true);
    let clean_frac = clean.within1 as f64 / clean.scored as f64;
    let noisy_frac = noisy.within2 as f64 / noisy.scored as f64;
    let minutes = nf.elapsed.as_secs_f64() / 60.0;
    let ok = nf.run.report.devices == 232
        && dots == 696
        && clean.scored > 0
        && clean.within1 == clean.scored
        && noisy_frac >= 0.95
        && minutes < 10.0;
    verdict(
        1,
        ok,
        format!(
            "noise-free {}/{} within 1 step ({:.1}%), default noise {}/{} within 2 steps ({:.1}%, need >= 95%); \
             {} + {} dots without a mid-row 1e line skipped; {dots} scans in {minutes:.2} min single-threaded",
            clean.within1,
            clean.scored,
            100.0 * clean_frac,
            noisy.within2,
            noisy.scored,
            100.0 * noisy_frac,
            clean.skipped_no_midline,
            noisy.skipped_no_midline,
        ),
    );
}

#[test]
fn criterion_2_matched_pair_estimator() {
    let t = Instant::now();
    let mut disorder = DisorderModel::calibrated(50);
    disorder.systematic = Polynomial2::edge_to_edge_x(0.2);
    disorder.random_sigma_vt = 0.058;
    let wafer = generate_wafer(&WaferSpec {
        name: "gradient".into(),
        seed: 2024,
        disorder: Some(disorder),
        ..Default::default()
    })
    .unwrap();
    let layout = &wafer.layout;
    let names: Vec<String> = layout.qubit_array().iter().map(|&g| layout.gate_name(g).to_string()).collect();
    let values: Vec<BTreeMap<String, f64>> = wafer
        .devices
        .iter()
        .map(|d| {
            layout
                .qubit_array()
                .iter()
                .map(|&g| (layout.gate_name(g).to_string(), d.gate(g).true_vt))
                .collect()
        })
        .collect();
    let pairs: Vec<(String, String)> = mirror_pairs(layout)
        .unwrap()
        .into_iter()
        .map(|(a, b)| (layout.gate_name(a).to_string(), layout.gate_name(b).to_string()))
        .collect();
    let r = matched_pair_sigma(&values, &pairs).unwrap();
    let per_gate = per_gate_std(&values, &names);
    let pooled = (per_gate.values().map(|s| s * s).sum::<f64>() / per_gate.len() as f64).sqrt();
    let secs = t.elapsed().as_secs_f64();
    let ok = (r.random_sigma - 0.058).abs() <= 0.005 && pooled > 0.063 && secs < 60.0;
    verdict(
        2,
        ok,
        format!(
            "matched-pair sigma {:.1} mV (58 +- 5), pooled per-gate std {:.1} mV (> 63), {} devices, {secs:.1} s",
            1e3 * r.random_sigma,
            1e3 * pooled,
            wafer.devices.len()
        ),
    );
}

#[test]
fn criterion_3_yield_table() {
    let c = calibrated();
    let y = c.run.report.yields.clone().unwrap();
    let records = load_records(&c.run.root).unwrap();
    let bad_dots: Vec<String> = records
        .iter()
        .flat_map(|r| (0..r.dots.len()).filter(move |&i| !dot_good(r, i)).map(move |i| r.dots[i].name.clone()))
        .collect();
    let sensor_side = bad_dots.iter().all(|n| n.starts_with('S'));
    let count = |c: &YieldCount| (c.good, c.total);
    let ok = count(&y.ohmics) == (1624, 1624)
        && count(&y.gates) == (10208, 10208)
        && count(&y.dots) == (3703, 3712)
        && count(&y.devices) == (223, 232)
        && sensor_side;
    verdict(
        3,
        ok,
        format!(
            "ohmics {}/{} ({:.0}%), gates {}/{} ({:.0}%), dots {}/{} ({:.1}%), devices {}/{} ({:.0}%); bad dots {:?}",
            y.ohmics.good,
            y.ohmics.total,
            y.ohmics.percentage(),
            y.gates.good,
            y.gates.total,
            y.gates.percentage(),
            y.dots.good,
            y.dots.total,
            y.dots.percentage(),
            y.devices.good,
            y.devices.total,
            y.devices.percentage(),
            bad_dots
        ),
    );
}

/// Best single-electron count over a 1 mV grid; instances sit on the grid so
/// every breakpoint is a grid voltage.
fn grid_search(points: &[(f64, f64)], top_mv: u32) -> usize {
    (0..=top_mv)
        .map(|k| {
            let v = f64::from(k) * 1e-3;
            points.iter().filter(|&&(a, b)| a <= v && v <= b).count()
        })
        .max()
        .unwrap()
}

#[test]
fn criterion_4_voltage_sharing() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut matched = 0;
    for _ in 0..50 {
        let points: Vec<(f64, f64)> = (0..12)
            .map(|_| {
                let a: u32 = rng.random_range(100..500);
                let add: u32 = rng.random_range(40..120);
                (f64::from(a) * 1e-3, f64::from(a + add) * 1e-3)
            })
            .collect();
        let (_, n) = optimal_common_voltage(&points).unwrap();
        matched += usize::from(n == grid_search(&points, 700));
    }
    let sharing = calibrated().run.report.sharing.clone().unwrap();
    let median = sharing.median_success.unwrap();
    let ok = matched == 50 && (median - 0.63).abs() <= 0.05;
    verdict(
        4,
        ok,
        format!(
            "{matched}/50 random 12-dot instances match the 1 mV grid search; calibrated median success {:.1}% (63 +- 5) over {} devices",
            100.0 * median,
            sharing.devices.len()
        ),
    );
}

fn lockin_trace(te: f64, alpha: f64, noise: f64, rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<f64>) {
    let kt2 = 2.0 * BOLTZMANN_EV * te;
    let n = Normal::new(0.0, noise.max(f64::MIN_POSITIVE)).unwrap();
    let v: Vec<f64> = (0..401).map(|i| 0.48 + 1e-4 * i as f64).collect();
    let y = v
        .iter()
        .map(|x| 0.1 + sech2(alpha * (x - 0.5) / kt2) + if noise > 0.0 { n.sample(rng) } else { 0.0 })
        .collect();
    (v, y)
}

#[test]
fn criterion_5_electron_temperature() {
    let (te, alpha) = (1.6, 0.08);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (v, y) = lockin_trace(te, alpha, 0.0, &mut rng);
    let clean = fit_electron_temperature(&v, &y, alpha, 0.01).unwrap();
    let clean_err = (clean.temperature / te - 1.0).abs();
    // peak-to-noise about 20, as in a typical single lock-in sweep
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let (v, y) = lockin_trace(te, alpha, 0.05, &mut rng);
        let fit = fit_electron_temperature(&v, &y, alpha, 0.01).unwrap();
        worst = worst.max((fit.temperature / te - 1.0).abs());
    }
    let ok = clean_err < 1e-3 && worst < 0.10 && (clean.uncertainty - 0.2).abs() < 0.005;
    verdict(
        5,
        ok,
        format!(
            "noiseless T_e {:.4} K ({:.3}% off), worst of 20 noisy traces {:.1}% off, alpha +-0.01 gives +-{:.3} K",
            clean.temperature,
            100.0 * clean_err,
            100.0 * worst,
            clean.uncertainty
        ),
    );
}

#[test]
fn criterion_6_margin_validation() {
    let m = calibrated().run.report.margin.clone().unwrap();
    let frac = m.fraction();
    let at_boundary = |add: f64| TransitionSummary {
        v1e: Some(0.3),
        v2e: Some(0.3 + add),
        addition_voltage: Some(add),
        scan_margin: Some(0.2),
        success: true,
        ..Default::default()
    };
    let verdicts = validate_margin(&[at_boundary(0.1), at_boundary(0.1), at_boundary(0.1)]).unwrap();
    let strict = verdicts.iter().all(|v| *v == Some(false)) && !margin_passes(0.316, 0.158) && margin_passes(0.3161, 0.158);
    let ok = (frac - 0.98).abs() <= 0.02 && strict;
    verdict(
        6,
        ok,
        format!(
            "{}/{} v1e points pass the 2x median rule ({:.1}%, 98 +- 2); median addition {:.1} mV; exactly 2x fails: {strict}",
            m.passed,
            m.total,
            100.0 * frac,
            1e3 * m.median_addition
        ),
    );
}

#[test]
fn criterion_7_scan_success_rate() {
    let noisy = &calibrated().run.report;
    let clean = &noise_free().run.report;
    let (rn, rc) = (noisy.success_rate.unwrap(), clean.success_rate.unwrap());
    let ok = (rn - 0.91).abs() <= 0.02 && rc == 1.0;
    verdict(
        7,
        ok,
        format!(
            "default noise {}/{} = {rn:.3} (0.91 +- 0.02); noise zeroed {}/{} = {rc:.3}",
            noisy.scans_successful, noisy.scans_attempted, clean.scans_successful, clean.scans_attempted
        ),
    );
}

#[test]
fn criterion_8_transition_analysis_properties() {
    let cases = 1000;
    let mut results = Vec::new();
    let mut run = |name: &str, f: &dyn Fn(&mut TestRunner) -> Result<(), String>| {
        let mut runner = TestRunner::new(Config::with_cases(cases));
        results.push((name.to_string(), f(&mut runner)));
    };
    run("highpass null on constants", &|r| {
        r.run(&(1usize..6, 2usize..50, -10.0f64..10.0, 0.5f64..6.0), |(rows, cols, c, s)| {
            check_constant_null(rows, cols, c, s)
        })
        .map_err(|e| e.to_string())
    });
    run("maxima invariant under a global constant", &|r| {
        r.run(&(dyadic_grid(), -2048i32..2048), |((rows, cols, values), k)| {
            check_constant_invariance(rows, cols, values, f64::from(k) / 256.0)
        })
        .map_err(|e| e.to_string())
    });
    run("summaries follow axis translation", &|r| {
        r.run(&(multi_line_scan(), -0.3f64..0.3, -0.3f64..0.3), |(lines, dp, db)| {
            check_translation(lines, dp, db)
        })
        .map_err(|e| e.to_string())
    });
    run("segments satisfy the chaining criteria", &|r| {
        r.run(&(small_maxima(), -3i32..=0, 0i32..=4, 1usize..6), |(p, lo, w, m)| {
            check_segment_soundness(p, (f64::from(lo), f64::from(lo + w)), m)
        })
        .map_err(|e| e.to_string())
    });
    run("chaining equals brute-force connectivity", &|r| {
        r.run(&(small_maxima(), -3i32..=0, 0i32..=4, 1usize..6), |(p, lo, w, m)| {
            check_chain_equivalence(p, (f64::from(lo), f64::from(lo + w)), m)
        })
        .map_err(|e| e.to_string())
    });
    let failed: Vec<String> = results
        .iter()
        .filter_map(|(n, r)| r.as_ref().err().map(|e| format!("{n}: {e}")))
        .collect();
    verdict(
        8,
        failed.is_empty(),
        if failed.is_empty() {
            format!("{} properties x {cases} randomized cases", results.len())
        } else {
            failed.join("; ")
        },
    );
}

#[test]
fn criterion_9_determinism() {
    let base = calibrated();
    let again = run_config(CALIBRATED, "calibrated-rerun", 3);
    let a = base.run.manifest.record_and_report_checksums();
    let b = again.run.manifest.record_and_report_checksums();
    let smoke = |tag: &str| run_config(include_str!("../../../configs/smoke.toml"), tag, 1).run.manifest;
    let (s1, s2) = (smoke("smoke-a"), smoke("smoke-b"));
    let ok = a == b && a.len() == 233 && s1.record_and_report_checksums() == s2.record_and_report_checksums();
    let root: PathBuf = again.run.root.clone();
    let _ = std::fs::remove_dir_all(root);
    verdict(
        9,
        ok,
        format!(
            "{} record/report checksums identical across 1 and 3 worker threads; smoke config identical on rerun: {}",
            a.len(),
            s1.record_and_report_checksums() == s2.record_and_report_checksums()
        ),
    );
}
