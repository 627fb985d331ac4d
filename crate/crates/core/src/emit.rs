//! Record output: CSV, JSON summary and an SVG chart.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde_json::Value;

use crate::error::{Error, Result};
use crate::experiment::RunRecord;

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |source| Error::Csv { context: path.to_path_buf(), source }
}

/// Writes one row per record. An empty list is an error and creates no file.
pub fn write_csv(records: &[RunRecord], path: &Path) -> Result<()> {
    if records.is_empty() {
        return Err(Error::EmptyRecords);
    }
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    for r in records {
        w.serialize(r).map_err(csv_err(path))?;
    }
    w.flush().map_err(|source| Error::Io { context: path.to_path_buf(), source })
}

pub fn read_csv(path: &Path) -> Result<Vec<RunRecord>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    r.deserialize().map(|row| row.map_err(csv_err(path))).collect()
}

pub fn write_json(value: &Value, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n").map_err(|source| Error::Io { context: path.to_path_buf(), source })
}

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const MARGIN: f64 = 60.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

struct Point {
    x: f64,
    mean: f64,
    err: f64,
}

/// Replicate mean of `value` against `log2 N` with ±1 standard error bars,
/// one polyline per ordering.
pub fn render_svg(records: &[RunRecord]) -> Result<String> {
    if records.is_empty() {
        return Err(Error::EmptyRecords);
    }
    let mut groups: BTreeMap<&str, BTreeMap<usize, Vec<&RunRecord>>> = BTreeMap::new();
    for r in records {
        groups.entry(&r.ordering).or_default().entry(r.n).or_default().push(r);
    }
    let series: Vec<(&str, Vec<Point>)> = groups
        .iter()
        .map(|(name, by_n)| {
            let pts = by_n
                .iter()
                .map(|(&n, rs)| {
                    let k = rs.len() as f64;
                    let mean = rs.iter().map(|r| r.value).sum::<f64>() / k;
                    let err = if rs.len() > 1 {
                        (rs.iter().map(|r| (r.value - mean).powi(2)).sum::<f64>() / (k - 1.0) / k).sqrt()
                    } else {
                        rs[0].stderr
                    };
                    Point { x: (n.max(1) as f64).log2(), mean, err: if err.is_finite() { err } else { 0.0 } }
                })
                .collect();
            (*name, pts)
        })
        .collect();

    let all = series.iter().flat_map(|s| s.1.iter());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for p in all {
        x0 = x0.min(p.x);
        x1 = x1.max(p.x);
        y0 = y0.min(p.mean - p.err);
        y1 = y1.max(p.mean + p.err);
    }
    if !(y0.is_finite() && y1.is_finite()) {
        return Err(Error::InvalidArgument("records contain non-finite values".into()));
    }
    if x1 - x0 < 1e-9 {
        x0 -= 0.5;
        x1 += 0.5;
    }
    let pad = ((y1 - y0) * 0.05).max(1e-9 * y1.abs().max(1.0));
    y0 -= pad;
    y1 += pad;
    let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
    let sy = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);

    let title = format!("{} / {} ({:?})", records[0].experiment.name(), records[0].system.name(), records[0].kind);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{title}</text>"#, WIDTH / 2.0);
    let (bx, by) = (HEIGHT - MARGIN, MARGIN);
    let _ = writeln!(
        s,
        r#"<path d="M{MARGIN} {by} V{bx} H{}" fill="none" stroke="black"/>"#,
        WIDTH - MARGIN
    );
    let mut tick = x0.ceil();
    while tick <= x1 + 1e-9 {
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">2^{tick}</text>"#,
            sx(tick),
            bx + 18.0
        );
        tick += 1.0;
    }
    for i in 0..=4 {
        let y = y0 + (y1 - y0) * i as f64 / 4.0;
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{y:.4}</text>"#, MARGIN - 6.0, sy(y) + 4.0);
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">N</text>"#, WIDTH / 2.0, HEIGHT - 16.0);

    for (i, (name, pts)) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let line: Vec<String> = pts.iter().map(|p| format!("{:.2},{:.2}", sx(p.x), sy(p.mean))).collect();
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            line.join(" ")
        );
        for p in pts {
            let (x, lo, hi) = (sx(p.x), sy(p.mean - p.err), sy(p.mean + p.err));
            let _ = writeln!(
                s,
                r#"<path d="M{x:.2} {lo:.2} V{hi:.2} M{:.2} {lo:.2} H{:.2} M{:.2} {hi:.2} H{:.2}" stroke="{color}"/>"#,
                x - 4.0,
                x + 4.0,
                x - 4.0,
                x + 4.0
            );
            let _ = writeln!(s, r#"<circle cx="{x:.2}" cy="{:.2}" r="3" fill="{color}"/>"#, sy(p.mean));
        }
        let ly = MARGIN + 16.0 * i as f64;
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{ly:.1}" fill="{color}" text-anchor="end">{name}</text>"#,
            WIDTH - MARGIN - 4.0
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

pub fn write_svg(records: &[RunRecord], path: &Path) -> Result<()> {
    let svg = render_svg(records)?;
    std::fs::write(path, svg).map_err(|source| Error::Io { context: path.to_path_buf(), source })
}
