//! Static report files: SVG figures, CSV tables and the JSON report.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use base64::Engine as _;

use super::config::read_text;
use super::report::{CampaignReport, DotRow};
use super::run::report_json;
use crate::instrument::{parse_scan, ScanGrid};
use crate::stats::Histogram;
use crate::wafer::{ChannelKind, DeviceLayout};
use crate::{Error, Result};

pub const SUPPORTED_FORMATS: [&str; 3] = ["svg", "csv", "json"];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RenderFormat {
    Svg,
    Csv,
    Json,
}

impl FromStr for RenderFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "svg" => Ok(RenderFormat::Svg),
            "csv" => Ok(RenderFormat::Csv),
            "json" => Ok(RenderFormat::Json),
            _ => Err(Error::UnknownFormat {
                given: s.to_string(),
                supported: SUPPORTED_FORMATS.to_vec(),
            }),
        }
    }
}

/// Writes the report in `format` under `out_dir`. The scan gallery needs the
/// campaign root holding the stored scans; without it the gallery is left
/// out with a note.
pub fn render_report(
    report: &CampaignReport,
    layout: &DeviceLayout,
    format: &str,
    out_dir: &Path,
    scans_root: Option<&Path>,
) -> Result<Vec<PathBuf>> {
    let format: RenderFormat = format.parse()?;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let files: Vec<(&str, String)> = match format {
        RenderFormat::Json => vec![("report.json", report_json(report))],
        RenderFormat::Csv => vec![
            ("dots.csv", dots_csv(&report.dots)),
            ("vt.csv", vt_csv(report)),
            ("yields.csv", yields_csv(report)),
            ("sharing.csv", sharing_csv(report)),
            ("scan-flags.csv", flags_csv(report)),
        ],
        RenderFormat::Svg => vec![
            ("vt-histograms.svg", vt_panel(report, layout)),
            ("one-electron.svg", one_electron_panel(report)),
            ("wafer-map.svg", wafer_map(&report.dots)),
            ("sensing-gallery.svg", gallery(&report.dots, layout, scans_root)?),
        ],
    };
    let mut written = Vec::with_capacity(files.len());
    for (name, text) in files {
        let path = out_dir.join(name);
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x}")).unwrap_or_default()
}

fn dots_csv(dots: &[DotRow]) -> String {
    let mut s = String::from(
        "device,die,die_col,die_row,device_index,dot,scan,success,v1e,v2e,addition_voltage,cutoff_pb_difference,scan_margin\n",
    );
    for d in dots {
        let m = &d.summary;
        writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            d.device,
            d.die,
            d.die_col,
            d.die_row,
            d.device_index,
            d.dot,
            d.scan,
            m.success,
            opt(m.v1e),
            opt(m.v2e),
            opt(m.addition_voltage),
            opt(m.cutoff_pb_difference),
            opt(m.scan_margin)
        )
        .unwrap();
    }
    s
}

fn vt_csv(report: &CampaignReport) -> String {
    let mut s = String::from("gate,role,n,mean,std\n");
    for g in &report.vt {
        let role = serde_json::to_value(g.role).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default();
        writeln!(s, "{},{},{},{},{}", g.gate, role, g.stats.n, opt(g.stats.mean), opt(g.stats.std)).unwrap();
    }
    s
}

fn yields_csv(report: &CampaignReport) -> String {
    let mut s = String::from("category,good,total,percent\n");
    if let Some(y) = &report.yields {
        for (name, c) in [("ohmics", &y.ohmics), ("gates", &y.gates), ("dots", &y.dots), ("devices", &y.devices)] {
            writeln!(s, "{name},{},{},{}", c.good, c.total, c.percentage()).unwrap();
        }
    }
    s
}

fn sharing_csv(report: &CampaignReport) -> String {
    let mut s = String::from("device,common_voltage,zero,one,many,excluded,success\n");
    if let Some(sh) = &report.sharing {
        for d in &sh.devices {
            writeln!(
                s,
                "{},{},{},{},{},{},{}",
                d.device,
                d.common_voltage,
                d.zero,
                d.one,
                d.many,
                d.excluded,
                d.success()
            )
            .unwrap();
        }
    }
    s
}

fn csv_field(text: &str) -> String {
    format!("\"{}\"", text.replace('"', "\"\""))
}

fn flags_csv(report: &CampaignReport) -> String {
    let mut s = String::from("device,file,message\n");
    for f in &report.scan_flags {
        writeln!(s, "{},{},{}", f.device, f.file, csv_field(&f.message)).unwrap();
    }
    s
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn svg_open(w: f64, h: f64) -> String {
    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif">"#
    )
    .unwrap();
    writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#).unwrap();
    s
}

fn text(s: &mut String, x: f64, y: f64, size: f64, anchor: &str, body: &str) {
    writeln!(
        s,
        r#"<text x="{x:.1}" y="{y:.1}" font-size="{size}" text-anchor="{anchor}">{}</text>"#,
        escape(body)
    )
    .unwrap();
}

fn note_svg(title: &str, note: &str) -> String {
    let mut s = svg_open(480.0, 80.0);
    text(&mut s, 10.0, 24.0, 14.0, "start", title);
    text(&mut s, 10.0, 54.0, 12.0, "start", note);
    s.push_str("</svg>\n");
    s
}

/// Bar histogram inside the box (x, y, w, h); values are multiplied by
/// `scale` for the axis labels.
fn histogram(s: &mut String, x: f64, y: f64, w: f64, h: f64, title: &str, hist: &Histogram, scale: f64) {
    text(s, x + w / 2.0, y + 12.0, 11.0, "middle", title);
    let (px, py, pw, ph) = (x + 6.0, y + 18.0, w - 12.0, h - 36.0);
    writeln!(s, r#"<rect x="{px:.1}" y="{py:.1}" width="{pw:.1}" height="{ph:.1}" fill="none" stroke="black" stroke-width="0.5"/>"#).unwrap();
    let max = hist.counts.iter().copied().max().unwrap_or(0);
    if max == 0 {
        text(s, px + pw / 2.0, py + ph / 2.0, 10.0, "middle", "no data");
        return;
    }
    let bw = pw / hist.counts.len() as f64;
    for (i, &c) in hist.counts.iter().enumerate() {
        let bh = ph * c as f64 / max as f64;
        writeln!(
            s,
            r##"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="#3b6ea5"/>"##,
            px + i as f64 * bw,
            py + ph - bh,
            bw,
            bh
        )
        .unwrap();
    }
    let lo = hist.edges.first().copied().unwrap_or(0.0) * scale;
    let hi = hist.edges.last().copied().unwrap_or(0.0) * scale;
    text(s, px, py + ph + 11.0, 9.0, "start", &format!("{lo:.0}"));
    text(s, px + pw, py + ph + 11.0, 9.0, "end", &format!("{hi:.0}"));
}

/// One histogram per gate of the qubit channel.
fn vt_panel(report: &CampaignReport, layout: &DeviceLayout) -> String {
    let title = "Threshold voltage per gate (mV)";
    let Some(channel) = layout.channels.iter().find(|c| c.kind == ChannelKind::Qubit) else {
        return note_svg(title, "layout has no qubit channel; panel omitted");
    };
    let gates: Vec<_> = channel
        .gates
        .iter()
        .filter_map(|&g| report.vt.iter().find(|v| v.gate == layout.gate_name(g)))
        .filter(|v| v.stats.n > 0)
        .collect();
    if gates.is_empty() {
        return note_svg(title, "no threshold voltages recorded; panel omitted");
    }
    let (cols, cw, ch) = (9, 150.0, 110.0);
    let rows = gates.len().div_ceil(cols);
    let mut s = svg_open(cols as f64 * cw, rows as f64 * ch + 30.0);
    text(&mut s, 10.0, 20.0, 14.0, "start", title);
    for (i, g) in gates.iter().enumerate() {
        let (x, y) = ((i % cols) as f64 * cw, 30.0 + (i / cols) as f64 * ch);
        histogram(&mut s, x, y, cw, ch, &format!("{} (n={})", g.gate, g.stats.n), &g.stats.histogram, 1e3);
    }
    s.push_str("</svg>\n");
    s
}

fn one_electron_panel(report: &CampaignReport) -> String {
    let title = "Single-electron statistics (mV)";
    let Some(oe) = &report.one_electron else {
        return note_svg(title, "no charge-sensing summaries; panel omitted");
    };
    let panels = [
        ("1e voltage", &oe.v1e),
        ("addition voltage", &oe.addition_voltage),
        ("cutoff minus plunger-barrier", &oe.cutoff_pb_difference),
    ];
    let (cw, ch) = (240.0, 180.0);
    let mut s = svg_open(3.0 * cw, ch + 50.0);
    text(&mut s, 10.0, 20.0, 14.0, "start", title);
    for (i, (name, m)) in panels.iter().enumerate() {
        histogram(&mut s, i as f64 * cw, 30.0, cw, ch, &format!("{name} (n={})", m.n), &m.histogram, 1e3);
    }
    if let Some(r) = &oe.variation_ratio {
        text(
            &mut s,
            10.0,
            ch + 44.0,
            11.0,
            "start",
            &format!("matched-pair 1e variation / mean addition voltage = {:.2} ± {:.2}", r.value, r.uncertainty),
        );
    }
    s.push_str("</svg>\n");
    s
}

/// White to blue over [0, 1].
fn shade(f: f64) -> String {
    let f = f.clamp(0.0, 1.0);
    let c = |w: f64, b: f64| (w + (b - w) * f).round() as u8;
    format!("#{:02x}{:02x}{:02x}", c(255.0, 30.0), c(255.0, 80.0), c(255.0, 160.0))
}

type DieKey = (u32, u32);

fn by_die(dots: &[DotRow]) -> BTreeMap<DieKey, Vec<&DotRow>> {
    let mut m: BTreeMap<DieKey, Vec<&DotRow>> = BTreeMap::new();
    for d in dots {
        m.entry((d.die_col, d.die_row)).or_default().push(d);
    }
    m
}

/// Per-die scan success fraction and mean 1e voltage.
fn wafer_map(dots: &[DotRow]) -> String {
    let title = "Charge-sensing success by die";
    if dots.is_empty() {
        return note_svg(title, "no charge-sensing scans; map omitted");
    }
    let dies = by_die(dots);
    let max_col = dies.keys().map(|k| k.0).max().unwrap_or(0);
    let max_row = dies.keys().map(|k| k.1).max().unwrap_or(0);
    let cell = 56.0;
    let mut s = svg_open((max_col + 1) as f64 * cell + 20.0, (max_row + 1) as f64 * cell + 50.0);
    text(&mut s, 10.0, 20.0, 14.0, "start", title);
    for ((col, row), rows) in &dies {
        let ok = rows.iter().filter(|d| d.summary.success).count();
        let frac = ok as f64 / rows.len() as f64;
        let v1e: Vec<f64> = rows.iter().filter_map(|d| d.summary.v1e).collect();
        let x = 10.0 + *col as f64 * cell;
        let y = 30.0 + (max_row - row) as f64 * cell;
        writeln!(
            s,
            r#"<rect x="{x:.1}" y="{y:.1}" width="{:.1}" height="{:.1}" fill="{}" stroke="gray" stroke-width="0.5"/>"#,
            cell - 2.0,
            cell - 2.0,
            shade(frac)
        )
        .unwrap();
        text(&mut s, x + cell / 2.0 - 1.0, y + 22.0, 11.0, "middle", &format!("{ok}/{}", rows.len()));
        if !v1e.is_empty() {
            let mean = v1e.iter().sum::<f64>() / v1e.len() as f64;
            text(&mut s, x + cell / 2.0 - 1.0, y + 38.0, 9.0, "middle", &format!("{:.0} mV", mean * 1e3));
        }
    }
    s.push_str("</svg>\n");
    s
}

fn encode_png(grid: &ScanGrid) -> Result<Vec<u8>> {
    let (rows, cols) = (grid.rows(), grid.cols());
    let lo = grid.values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = grid.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = if hi > lo { hi - lo } else { 1.0 };
    let mut pixels = Vec::with_capacity(rows * cols);
    // First stepped value at the bottom.
    for r in (0..rows).rev() {
        pixels.extend(grid.row(r).iter().map(|&v| (255.0 * (v - lo) / span).round() as u8));
    }
    let mut buf = Vec::new();
    let png_err = |e: png::EncodingError| Error::io("<png>", std::io::Error::other(e));
    {
        let mut enc = png::Encoder::new(&mut buf, cols as u32, rows as u32);
        enc.set_color(png::ColorType::Grayscale);
        enc.set_depth(png::BitDepth::Eight);
        let mut w = enc.write_header().map_err(png_err)?;
        w.write_image_data(&pixels).map_err(png_err)?;
        w.finish().map_err(png_err)?;
    }
    Ok(buf)
}

/// Sensing scans as tiles, grouped by device, with each die's devices placed
/// at the die's position on the wafer.
fn gallery(dots: &[DotRow], layout: &DeviceLayout, scans_root: Option<&Path>) -> Result<String> {
    let title = "Charge-sensing scans by wafer location";
    let Some(root) = scans_root else {
        return Ok(note_svg(title, "stored scans not available; gallery omitted"));
    };
    if dots.is_empty() {
        return Ok(note_svg(title, "no charge-sensing scans; gallery omitted"));
    }
    let dies = by_die(dots);
    let (tw, th, gap, per_row) = (50.0, 22.0, 2.0, 6usize);
    let block_w = per_row as f64 * (tw + gap);
    let device_h = |n: usize| n.div_ceil(per_row) as f64 * (th + gap) + 12.0;
    let mut cell_h: f64 = 0.0;
    for rows in dies.values() {
        let mut per_dev: BTreeMap<usize, usize> = BTreeMap::new();
        for d in rows {
            *per_dev.entry(d.device_index).or_default() += 1;
        }
        cell_h = cell_h.max(per_dev.values().map(|&n| device_h(n)).sum());
    }
    let (cell_w, cell_h) = (block_w + 12.0, cell_h + 8.0);
    let max_col = dies.keys().map(|k| k.0).max().unwrap_or(0);
    let max_row = dies.keys().map(|k| k.1).max().unwrap_or(0);
    let mut s = svg_open((max_col + 1) as f64 * cell_w + 20.0, (max_row + 1) as f64 * cell_h + 40.0);
    text(&mut s, 10.0, 20.0, 14.0, "start", title);
    let b64 = base64::engine::general_purpose::STANDARD;
    for ((col, row), rows) in &dies {
        let x0 = 10.0 + *col as f64 * cell_w;
        let mut y = 30.0 + (max_row - row) as f64 * cell_h;
        writeln!(
            s,
            r#"<rect x="{x0:.1}" y="{y:.1}" width="{:.1}" height="{:.1}" fill="none" stroke="gray" stroke-width="0.5"/>"#,
            cell_w - 4.0,
            cell_h - 4.0
        )
        .unwrap();
        let mut devices: BTreeMap<usize, Vec<&DotRow>> = BTreeMap::new();
        for d in rows {
            devices.entry(d.device_index).or_default().push(d);
        }
        for tiles in devices.values() {
            text(&mut s, x0 + 2.0, y + 10.0, 9.0, "start", &tiles[0].device);
            for (i, d) in tiles.iter().enumerate() {
                let tx = x0 + 2.0 + (i % per_row) as f64 * (tw + gap);
                let ty = y + 12.0 + (i / per_row) as f64 * (th + gap);
                let path = root.join(&d.device).join(&d.scan);
                match read_text(&path).and_then(|t| parse_scan(&t, layout)) {
                    Ok(grid) => {
                        let png = encode_png(&grid)?;
                        writeln!(
                            s,
                            r#"<image x="{tx:.1}" y="{ty:.1}" width="{tw}" height="{th}" preserveAspectRatio="none" href="data:image/png;base64,{}"><title>{} {}</title></image>"#,
                            b64.encode(png),
                            escape(&d.device),
                            escape(&d.dot)
                        )
                        .unwrap();
                    }
                    Err(_) => {
                        writeln!(s, r#"<rect x="{tx:.1}" y="{ty:.1}" width="{tw}" height="{th}" fill="lightgray"/>"#).unwrap();
                        text(&mut s, tx + tw / 2.0, ty + th / 2.0 + 3.0, 7.0, "middle", "unreadable");
                    }
                }
            }
            y += device_h(tiles.len());
        }
    }
    s.push_str("</svg>\n");
    Ok(s)
}
