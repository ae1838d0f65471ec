//! Plain-text scan files: `# key: value` header lines, then one
//! comma-separated line per scan row. Floats are written in shortest
//! round-trip form so a file reloads bit-for-bit.

use std::fmt::Write as _;

use super::scan::{Axis, GateRamp, ScanGrid, ScanKind, ScanOrigin, ScanPlan, ScanTarget};
use crate::wafer::DeviceLayout;
use crate::{Error, Result};

pub const SCAN_FORMAT_VERSION: u32 = 1;

pub fn write_scan(grid: &ScanGrid, layout: &DeviceLayout) -> String {
    let plan = &grid.plan;
    let o = &grid.origin;
    let mut s = String::new();
    let dot = |d: crate::wafer::DotId| layout.dots[d.0].name.as_str();
    writeln!(s, "# qdprobe-scan: {SCAN_FORMAT_VERSION}").unwrap();
    writeln!(s, "# wafer: {}", o.wafer).unwrap();
    writeln!(s, "# die: {} {} {}", o.die, o.die_col, o.die_row).unwrap();
    writeln!(s, "# device: {}", o.device).unwrap();
    writeln!(s, "# seed: {}", o.seed).unwrap();
    writeln!(s, "# kind: {}", plan.kind.as_str()).unwrap();
    match plan.target {
        ScanTarget::Dot(d) => writeln!(s, "# target: {}", dot(d)).unwrap(),
        ScanTarget::DotPair(a, b) => writeln!(s, "# target: {} {}", dot(a), dot(b)).unwrap(),
    }
    writeln!(s, "# units: {}", plan.kind.units()).unwrap();
    writeln!(s, "# lockin-frequency: {:e}", plan.lockin_frequency).unwrap();
    writeln!(s, "# bias: {:e}", plan.bias).unwrap();
    for (name, axis) in [("swept", &plan.swept), ("stepped", &plan.stepped)] {
        writeln!(s, "# {name}-points: {}", axis.points).unwrap();
        for r in &axis.ramps {
            writeln!(s, "# {name}: {} {:e} {:e}", layout.gate_name(r.gate), r.start, r.stop).unwrap();
        }
    }
    let fixed: Vec<String> = plan
        .fixed
        .iter()
        .enumerate()
        .map(|(g, v)| format!("{}={:e}", layout.gates[g].name, v))
        .collect();
    writeln!(s, "# fixed: {}", fixed.join(",")).unwrap();
    writeln!(s, "# rows: {}", plan.rows()).unwrap();
    writeln!(s, "# cols: {}", plan.cols()).unwrap();
    for r in 0..grid.rows() {
        let line: Vec<String> = grid.row(r).iter().map(|v| format!("{v:e}")).collect();
        s.push_str(&line.join(","));
        s.push('\n');
    }
    s
}

fn err(line: usize, message: impl Into<String>) -> Error {
    Error::Format {
        what: "scan file",
        line,
        message: message.into(),
    }
}

fn num<T: std::str::FromStr>(text: &str, line: usize) -> Result<T> {
    text.trim()
        .parse()
        .map_err(|_| err(line, format!("bad number `{}`", text.trim())))
}

pub fn parse_scan(text: &str, layout: &DeviceLayout) -> Result<ScanGrid> {
    let mut origin = ScanOrigin::default();
    let mut kind = None;
    let mut target_names: Vec<String> = Vec::new();
    let mut f_lockin = None;
    let mut bias = None;
    let mut swept = Axis { ramps: vec![], points: 0 };
    let mut stepped = Axis { ramps: vec![], points: 0 };
    let mut fixed = None;
    let (mut rows, mut cols) = (None, None);
    let mut version = None;
    let mut values = Vec::new();
    let mut data_rows = 0usize;

    for (i, raw) in text.lines().enumerate() {
        let ln = i + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(h) = line.strip_prefix('#') {
            let (key, val) = h
                .split_once(':')
                .ok_or_else(|| err(ln, "header line without `key: value`"))?;
            let val = val.trim();
            match key.trim() {
                "qdprobe-scan" => version = Some(num::<u32>(val, ln)?),
                "wafer" => origin.wafer = val.to_string(),
                "die" => {
                    let p: Vec<&str> = val.split_whitespace().collect();
                    if p.len() != 3 {
                        return Err(err(ln, "die needs index, column and row"));
                    }
                    origin.die = num(p[0], ln)?;
                    origin.die_col = num(p[1], ln)?;
                    origin.die_row = num(p[2], ln)?;
                }
                "device" => origin.device = num(val, ln)?,
                "seed" => origin.seed = num(val, ln)?,
                "kind" => {
                    kind = Some(ScanKind::parse(val).ok_or_else(|| err(ln, format!("unknown scan kind `{val}`")))?)
                }
                "target" => target_names = val.split_whitespace().map(str::to_string).collect(),
                "units" => {}
                "lockin-frequency" => f_lockin = Some(num(val, ln)?),
                "bias" => bias = Some(num(val, ln)?),
                "swept-points" => swept.points = num(val, ln)?,
                "stepped-points" => stepped.points = num(val, ln)?,
                k @ ("swept" | "stepped") => {
                    let p: Vec<&str> = val.split_whitespace().collect();
                    if p.len() != 3 {
                        return Err(err(ln, "ramp needs gate, start and stop"));
                    }
                    let gate = layout.gate_by_name(p[0]).map_err(|e| err(ln, e.to_string()))?;
                    let ramp = GateRamp {
                        gate,
                        start: num(p[1], ln)?,
                        stop: num(p[2], ln)?,
                    };
                    if k == "swept" {
                        swept.ramps.push(ramp);
                    } else {
                        stepped.ramps.push(ramp);
                    }
                }
                "fixed" => {
                    let mut v = vec![f64::NAN; layout.gates.len()];
                    for item in val.split(',') {
                        let (name, x) = item
                            .split_once('=')
                            .ok_or_else(|| err(ln, format!("bad fixed entry `{item}`")))?;
                        let g = layout.gate_by_name(name.trim()).map_err(|e| err(ln, e.to_string()))?;
                        v[g.0] = num(x, ln)?;
                    }
                    if v.iter().any(|x| x.is_nan()) {
                        return Err(err(ln, "fixed voltages do not cover every gate"));
                    }
                    fixed = Some(v);
                }
                "rows" => rows = Some(num::<usize>(val, ln)?),
                "cols" => cols = Some(num::<usize>(val, ln)?),
                other => return Err(err(ln, format!("unknown header key `{other}`"))),
            }
            continue;
        }
        let ncols = cols.ok_or_else(|| err(ln, "data before `cols` header"))?;
        let before = values.len();
        for cell in line.split(',') {
            let v: f64 = num(cell, ln)?;
            if !v.is_finite() {
                return Err(err(ln, "non-finite value"));
            }
            values.push(v);
        }
        if values.len() - before != ncols {
            return Err(err(ln, format!("expected {ncols} values, found {}", values.len() - before)));
        }
        data_rows += 1;
    }

    let end = text.lines().count();
    match version {
        Some(SCAN_FORMAT_VERSION) => {}
        Some(v) => {
            return Err(Error::SchemaVersion {
                what: "scan file".into(),
                found: v,
                expected: SCAN_FORMAT_VERSION,
            })
        }
        None => return Err(err(1, "missing `qdprobe-scan` version header")),
    }
    let kind = kind.ok_or_else(|| err(end, "missing `kind`"))?;
    let dot = |n: &String| layout.dot_by_name(n).ok_or_else(|| err(end, format!("unknown dot `{n}`")));
    let target = match target_names.as_slice() {
        [a] => ScanTarget::Dot(dot(a)?),
        [a, b] => ScanTarget::DotPair(dot(a)?, dot(b)?),
        _ => return Err(err(end, "target needs one or two dots")),
    };
    let rows = rows.ok_or_else(|| err(end, "missing `rows`"))?;
    let cols = cols.ok_or_else(|| err(end, "missing `cols`"))?;
    if rows != stepped.points || cols != swept.points {
        return Err(err(end, "rows/cols disagree with the axis point counts"));
    }
    if data_rows != rows {
        return Err(err(end, format!("expected {rows} data rows, found {data_rows}")));
    }
    let plan = ScanPlan {
        kind,
        target,
        swept,
        stepped,
        fixed: fixed.ok_or_else(|| err(end, "missing `fixed`"))?,
        lockin_frequency: f_lockin.ok_or_else(|| err(end, "missing `lockin-frequency`"))?,
        bias: bias.ok_or_else(|| err(end, "missing `bias`"))?,
    };
    plan.validate(layout).map_err(|e| err(end, e.to_string()))?;
    Ok(ScanGrid { plan, origin, values })
}
