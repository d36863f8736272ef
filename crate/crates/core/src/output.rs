//! CSV tables and SVG line plots.
//!
//! Every number is written with six decimals so repeated runs produce
//! byte-identical files.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::Path;

use crate::analysis::{LocalNadir, Metrics, SweepResult};
use crate::error::{Error, Result};
use crate::sim::Trace;

pub const TRACE_HEADER: [&str; 7] = [
    "t_s",
    "freq_hz",
    "rocof_hz_s",
    "es_power_mw",
    "es_soc_mws",
    "mech_mw",
    "load_fraction",
];

pub const METRICS_HEADER: [&str; 12] = [
    "nadir_hz",
    "nadir_time_s",
    "first_nadir_hz",
    "first_nadir_time_s",
    "second_nadir_hz",
    "second_nadir_time_s",
    "settling_hz",
    "settling_window_truncated",
    "min_rocof_hz_s",
    "energy_used_mws",
    "peak_power_mw",
    "ufls_triggered",
];

/// Largest number of vertices drawn per polyline.
pub const MAX_PLOT_POINTS: usize = 2000;

/// Fixed six-decimal rendering; negative zero prints as zero.
pub fn fmt6(v: f64) -> String {
    let s = format!("{v:.6}");
    if s == "-0.000000" {
        "0.000000".to_string()
    } else {
        s
    }
}

fn nadir_fields(n: Option<LocalNadir>) -> [String; 2] {
    match n {
        Some(n) => [fmt6(n.hz), fmt6(n.time_s)],
        None => [String::new(), String::new()],
    }
}

pub fn write_trace_csv<W: Write>(trace: &Trace, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRACE_HEADER)?;
    for i in 0..trace.len() {
        w.write_record([
            fmt6(trace.t_s[i]),
            fmt6(trace.freq_hz[i]),
            fmt6(trace.rocof_hz_per_s[i]),
            fmt6(trace.es_power_mw(i)),
            fmt6(trace.es_soc_mws(i)),
            fmt6(trace.mech_power_mw[i]),
            fmt6(trace.load_fraction[i]),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// One metrics row, in [`METRICS_HEADER`] order.
pub fn metrics_record(m: &Metrics) -> Vec<String> {
    let [f_hz, f_t] = nadir_fields(m.first_nadir);
    let [s_hz, s_t] = nadir_fields(m.second_nadir);
    vec![
        fmt6(m.nadir_hz),
        fmt6(m.nadir_time_s),
        f_hz,
        f_t,
        s_hz,
        s_t,
        fmt6(m.settling_hz),
        m.settling_window_truncated.to_string(),
        fmt6(m.min_rocof_hz_per_s),
        fmt6(m.energy_used_mws),
        fmt6(m.peak_power_mw),
        m.ufls_triggered.to_string(),
    ]
}

pub fn write_metrics_csv<W: Write>(metrics: &Metrics, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(METRICS_HEADER)?;
    w.write_record(metrics_record(metrics))?;
    w.flush()?;
    Ok(())
}

/// One row per sweep point; the highest-nadir row has `is_argmax = true`.
pub fn write_sweep_csv<W: Write>(sweep: &SweepResult, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec![sweep.parameter.column()];
    header.extend(METRICS_HEADER);
    header.extend(["nadir_is_second", "is_argmax"]);
    w.write_record(&header)?;
    let argmax = sweep.argmax();
    for (i, p) in sweep.points.iter().enumerate() {
        let mut row = vec![fmt6(p.value)];
        row.extend(metrics_record(&p.metrics));
        row.push(p.metrics.nadir_is_second().to_string());
        row.push((Some(i) == argmax).to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn write_file(path: &Path, f: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<()> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    fs::write(path, buf)?;
    Ok(())
}

pub fn write_trace_file(trace: &Trace, path: &Path) -> Result<()> {
    write_file(path, |b| write_trace_csv(trace, b))
}

pub fn write_metrics_file(metrics: &Metrics, path: &Path) -> Result<()> {
    write_file(path, |b| write_metrics_csv(metrics, b))
}

pub fn write_sweep_file(sweep: &SweepResult, path: &Path) -> Result<()> {
    write_file(path, |b| write_sweep_csv(sweep, b))
}

/// One line of a plot.
#[derive(Debug, Clone, Copy)]
pub struct Series<'a> {
    pub x: &'a [f64],
    pub y: &'a [f64],
}

/// Indices kept when drawing `n` points with at most `max` vertices.
///
/// Points are split into `max / 2` equal buckets and each bucket keeps its
/// minimum and maximum in time order, so dips and peaks survive.
pub fn decimate(y: &[f64], max: usize) -> Vec<usize> {
    let n = y.len();
    if n <= max {
        return (0..n).collect();
    }
    let buckets = (max / 2).max(1);
    let mut keep = Vec::with_capacity(2 * buckets);
    for b in 0..buckets {
        let lo = b * n / buckets;
        let hi = ((b + 1) * n / buckets).max(lo + 1);
        let (mut imin, mut imax) = (lo, lo);
        for i in lo..hi {
            if y[i] < y[imin] {
                imin = i;
            }
            if y[i] > y[imax] {
                imax = i;
            }
        }
        keep.push(imin.min(imax));
        if imin != imax {
            keep.push(imin.max(imax));
        }
    }
    keep
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];
const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 480.0;
const MARGIN_L: f64 = 80.0;
const MARGIN_R: f64 = 170.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 60.0;

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn padded_range(lo: f64, hi: f64) -> (f64, f64) {
    if hi > lo {
        (lo, hi)
    } else {
        let pad = if lo == 0.0 { 1.0 } else { lo.abs() * 1e-3 };
        (lo - pad, hi + pad)
    }
}

/// Render a self-contained SVG line plot with linear axes and a legend.
pub fn render_svg(title: &str, x_label: &str, y_label: &str, series: &[Series], labels: &[&str]) -> Result<String> {
    if series.is_empty() || series.iter().any(|s| s.x.is_empty()) {
        return Err(Error::EmptySeries);
    }
    if labels.len() != series.len() {
        return Err(Error::field("labels", "one label per series required"));
    }
    if series.iter().any(|s| s.x.len() != s.y.len()) {
        return Err(Error::field("series", "x and y lengths differ"));
    }
    let finite = |v: &&f64| v.is_finite();
    let xs = series.iter().flat_map(|s| s.x.iter()).filter(finite);
    let ys = series.iter().flat_map(|s| s.y.iter()).filter(finite);
    let (x0, x1) = padded_range(
        xs.clone().fold(f64::INFINITY, |a, &b| a.min(b)),
        xs.fold(f64::NEG_INFINITY, |a, &b| a.max(b)),
    );
    let (y0, y1) = padded_range(
        ys.clone().fold(f64::INFINITY, |a, &b| a.min(b)),
        ys.fold(f64::NEG_INFINITY, |a, &b| a.max(b)),
    );
    if !(x0.is_finite() && y0.is_finite()) {
        return Err(Error::NumericDomain("series has no finite points".into()));
    }
    let pw = WIDTH - MARGIN_L - MARGIN_R;
    let ph = HEIGHT - MARGIN_T - MARGIN_B;
    let sx = |x: f64| MARGIN_L + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| MARGIN_T + (y1 - y) / (y1 - y0) * ph;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
        MARGIN_L + pw / 2.0,
        xml_escape(title)
    );
    let _ = writeln!(
        svg,
        r#"<rect x="{MARGIN_L}" y="{MARGIN_T}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    for k in 0..=5 {
        let fx = x0 + (x1 - x0) * k as f64 / 5.0;
        let fy = y0 + (y1 - y0) * k as f64 / 5.0;
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            sx(fx),
            MARGIN_T + ph + 18.0,
            tick(fx, x1 - x0)
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
            MARGIN_L - 6.0,
            sy(fy) + 4.0,
            tick(fy, y1 - y0)
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
        MARGIN_L + pw / 2.0,
        HEIGHT - 16.0,
        xml_escape(x_label)
    );
    let _ = writeln!(
        svg,
        r#"<text x="18" y="{:.1}" text-anchor="middle" transform="rotate(-90 18 {:.1})">{}</text>"#,
        MARGIN_T + ph / 2.0,
        MARGIN_T + ph / 2.0,
        xml_escape(y_label)
    );

    for (k, (s, label)) in series.iter().zip(labels).enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let mut pts = String::new();
        for i in decimate(s.y, MAX_PLOT_POINTS) {
            if s.x[i].is_finite() && s.y[i].is_finite() {
                let _ = write!(pts, "{:.2},{:.2} ", sx(s.x[i]), sy(s.y[i]));
            }
        }
        let _ = writeln!(
            svg,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            pts.trim_end()
        );
        let ly = MARGIN_T + 16.0 + 20.0 * k as f64;
        let lx = WIDTH - MARGIN_R + 12.0;
        let _ = writeln!(
            svg,
            r#"<line x1="{lx}" y1="{ly}" x2="{:.1}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{:.1}" y="{:.1}">{}</text>"#,
            lx + 24.0,
            lx + 30.0,
            ly + 4.0,
            xml_escape(label)
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

fn tick(v: f64, span: f64) -> String {
    let decimals = if span >= 100.0 {
        0
    } else if span >= 1.0 {
        2
    } else {
        3
    };
    format!("{v:.decimals$}")
}

/// Write [`render_svg`] output to `path`.
pub fn emit_svg_plot(
    path: &Path,
    title: &str,
    x_label: &str,
    y_label: &str,
    series: &[Series],
    labels: &[&str],
) -> Result<()> {
    fs::write(path, render_svg(title, x_label, y_label, series, labels)?)?;
    Ok(())
}
