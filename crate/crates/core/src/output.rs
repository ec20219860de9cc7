//! CSV, JSON and SVG writers. Numbers are written with 17 significant digits
//! so files reproduce bit-for-bit.

use std::fmt::Write as _;
use std::io;
use std::path::Path;

use num_complex::Complex64;
use serde::Serialize;

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<f64>]) -> io::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(row.iter().map(|v| fmt_f64(*v)))?;
    }
    w.flush()
}

/// `x, re, im, abs2` rows.
pub fn write_density_csv(path: &Path, xs: &[f64], values: &[Complex64]) -> io::Result<()> {
    let rows: Vec<Vec<f64>> = xs
        .iter()
        .zip(values)
        .map(|(x, v)| vec![*x, v.re, v.im, v.norm_sqr()])
        .collect();
    write_csv(path, &["x", "re", "im", "abs2"], &rows)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> io::Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(io::Error::other)?;
    text.push('\n');
    std::fs::write(path, text)
}

/// Single-frame line plot of a density with the two walls marked.
pub fn density_svg(title: &str, xs: &[f64], density: &[f64], walls: (f64, f64)) -> String {
    const W: f64 = 640.0;
    const H: f64 = 360.0;
    const PAD: f64 = 40.0;
    let span = (walls.1 - walls.0).abs().max(f64::MIN_POSITIVE);
    let x_lo = walls.0 - 0.05 * span;
    let x_hi = walls.1 + 0.05 * span;
    let y_hi = density.iter().cloned().fold(0.0, f64::max).max(f64::MIN_POSITIVE) * 1.1;
    let px = |x: f64| PAD + (x - x_lo) / (x_hi - x_lo) * (W - 2.0 * PAD);
    let py = |y: f64| H - PAD - y / y_hi * (H - 2.0 * PAD);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{PAD}" y="24" font-family="sans-serif" font-size="14">{}</text>"#,
        escape(title)
    );
    let _ = writeln!(
        s,
        r#"<line x1="{PAD}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="black"/>"#,
        H - PAD,
        W - PAD,
        H - PAD
    );
    for wall in [walls.0, walls.1] {
        let _ = writeln!(
            s,
            r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="gray" stroke-width="3"/>"#,
            PAD,
            H - PAD,
            x = px(wall)
        );
    }
    let points: Vec<String> = xs
        .iter()
        .zip(density)
        .map(|(x, y)| format!("{:.2},{:.2}", px(*x), py(*y)))
        .collect();
    let _ = writeln!(
        s,
        r#"<polyline fill="none" stroke="steelblue" stroke-width="1.5" points="{}"/>"#,
        points.join(" ")
    );
    let _ = writeln!(
        s,
        r#"<text x="{PAD}" y="{:.2}" font-family="sans-serif" font-size="11">x in [{:.4}, {:.4}], max |psi|^2 = {:.4}</text>"#,
        H - 12.0,
        walls.0,
        walls.1,
        y_hi / 1.1
    );
    s.push_str("</svg>\n");
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
