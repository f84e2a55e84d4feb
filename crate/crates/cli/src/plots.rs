//! Self-contained SVG charts.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use hardy_tower::asymptotics::delta_exponent;
use hardy_tower::closed_forms::ProblemParams;
use hardy_tower::shooting::{ContinuationRecord, RadialSolution};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 440.0;
const MARGIN: (f64, f64, f64, f64) = (70.0, 20.0, 30.0, 55.0);
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub markers: bool,
    pub dashed: bool,
}

/// A chart over already-transformed coordinates.
#[derive(Debug, Clone)]
pub struct Chart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
}

fn bounds(series: &[Series]) -> Option<(f64, f64, f64, f64)> {
    let pts = series.iter().flat_map(|s| &s.points).filter(|(x, y)| x.is_finite() && y.is_finite());
    let mut b: Option<(f64, f64, f64, f64)> = None;
    for &(x, y) in pts {
        b = Some(match b {
            None => (x, x, y, y),
            Some((x0, x1, y0, y1)) => (x0.min(x), x1.max(x), y0.min(y), y1.max(y)),
        });
    }
    b.map(|(x0, x1, y0, y1)| {
        let pad = |a: f64, b: f64| if b > a { 0.04 * (b - a) } else { 0.5 };
        let (px, py) = (pad(x0, x1), pad(y0, y1));
        (x0 - px, x1 + px, y0 - py, y1 + py)
    })
}

fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = hi - lo;
    let raw = span / 6.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag);
    let mut t = (lo / step).ceil() * step;
    let mut out = Vec::new();
    while t <= hi + 1e-9 * span {
        out.push(if t.abs() < 1e-12 * step { 0.0 } else { t });
        t += step;
    }
    out
}

impl Chart {
    /// `None` when no series has a finite point.
    pub fn render(&self) -> Option<String> {
        let (x0, x1, y0, y1) = bounds(&self.series)?;
        let (ml, mr, mt, mb) = MARGIN;
        let pw = WIDTH - ml - mr;
        let ph = HEIGHT - mt - mb;
        let sx = |x: f64| ml + (x - x0) / (x1 - x0) * pw;
        let sy = |y: f64| mt + (y1 - y) / (y1 - y0) * ph;
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(s, r#"<text x="{}" y="18" text-anchor="middle" font-size="14">{}</text>"#, WIDTH / 2.0, escape(&self.title));
        let _ = writeln!(s, r##"<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" stroke="#333"/>"##);
        for t in ticks(x0, x1) {
            let x = sx(t);
            let _ = writeln!(s, r##"<line x1="{x:.2}" y1="{}" x2="{x:.2}" y2="{}" stroke="#ddd"/>"##, mt, mt + ph);
            let _ = writeln!(s, r#"<text x="{x:.2}" y="{}" text-anchor="middle">{}</text>"#, mt + ph + 16.0, label(t));
        }
        for t in ticks(y0, y1) {
            let y = sy(t);
            let _ = writeln!(s, r##"<line x1="{ml}" y1="{y:.2}" x2="{}" y2="{y:.2}" stroke="#ddd"/>"##, ml + pw);
            let _ = writeln!(s, r#"<text x="{}" y="{:.2}" text-anchor="end">{}</text>"#, ml - 6.0, y + 4.0, label(t));
        }
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, ml + pw / 2.0, HEIGHT - 12.0, escape(&self.x_label));
        let _ = writeln!(
            s,
            r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
            mt + ph / 2.0,
            mt + ph / 2.0,
            escape(&self.y_label)
        );
        for (i, ser) in self.series.iter().enumerate() {
            let color = COLORS[i % COLORS.len()];
            let pts: Vec<String> = ser
                .points
                .iter()
                .filter(|(x, y)| x.is_finite() && y.is_finite())
                .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
                .collect();
            if ser.markers {
                for p in &pts {
                    let (cx, cy) = p.split_once(',').unwrap_or(("0", "0"));
                    let _ = writeln!(s, r#"<circle cx="{cx}" cy="{cy}" r="3" fill="{color}"/>"#);
                }
            } else {
                let dash = if ser.dashed { r#" stroke-dasharray="6 4""# } else { "" };
                let _ = writeln!(
                    s,
                    r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"{dash}/>"#,
                    pts.join(" ")
                );
            }
            let ly = mt + 14.0 + 16.0 * i as f64;
            let _ = writeln!(s, r#"<text x="{}" y="{ly:.2}" fill="{color}">{}</text>"#, ml + 8.0, escape(&ser.label));
        }
        s.push_str("</svg>\n");
        Some(s)
    }
}

fn label(t: f64) -> String {
    let r = format!("{t:.6}");
    let r = r.trim_end_matches('0').trim_end_matches('.');
    if r == "-0" { "0".into() } else { r.into() }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// `log10 δ_j` against `log10 ε_v` with guides of the predicted slopes.
pub fn rates_chart(record: &ContinuationRecord) -> Option<Chart> {
    if record.entries.len() < 2 {
        return None;
    }
    let d = ProblemParams::new(record.n, record.gamma, 0.0).ok()?.exponents().ok()?;
    let mut series = Vec::new();
    for j in 0..record.k {
        let pts: Vec<(f64, f64)> = record
            .entries
            .iter()
            .map(|e| (e.eps_v.log10(), e.deltas[j].log10()))
            .collect();
        if let Ok(slope) = delta_exponent(record.k, j + 1, &d) {
            let &(ax, ay) = pts.last()?;
            let bx = pts[0].0;
            series.push(Series {
                label: format!("slope {slope:.4}"),
                points: vec![(ax, ay), (bx, ay + slope * (bx - ax))],
                markers: false,
                dashed: true,
            });
        }
        series.push(Series {
            label: format!("delta_{}", j + 1),
            points: pts,
            markers: true,
            dashed: false,
        });
    }
    Some(Chart {
        title: format!("N = {}, gamma = {}, k = {}", record.n, record.gamma, record.k),
        x_label: "log10 eps_v".into(),
        y_label: "log10 delta_j".into(),
        series,
    })
}

/// `sign(v) log10(1 + |v|)` against `log10 r`.
pub fn profile_chart(sol: &RadialSolution) -> Option<Chart> {
    let tr = &sol.trace;
    let pts: Vec<(f64, f64)> = tr
        .r
        .iter()
        .zip(&tr.v)
        .filter(|(r, _)| **r > 0.0)
        .map(|(r, v)| (r.log10(), v.signum() * v.abs().ln_1p() / std::f64::consts::LN_10))
        .collect();
    if pts.is_empty() {
        return None;
    }
    Some(Chart {
        title: format!("N = {}, eps = {:e}, k = {}", sol.params.n, sol.params.epsilon, sol.k),
        x_label: "log10 r".into(),
        y_label: "sign(v) log10(1 + |v|)".into(),
        series: vec![Series { label: "v".into(), points: pts, markers: false, dashed: false }],
    })
}

fn write_chart(path: PathBuf, chart: Option<Chart>) -> Result<Option<PathBuf>> {
    match chart.and_then(|c| c.render()) {
        Some(svg) => {
            std::fs::write(&path, svg).with_context(|| format!("writing {}", path.display()))?;
            Ok(Some(path))
        }
        None => Ok(None),
    }
}

/// Rates chart plus one profile chart per solution. An empty record writes
/// nothing.
pub fn emit_plots(dir: &Path, record: &ContinuationRecord, solutions: &[RadialSolution]) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    if record.entries.is_empty() && solutions.is_empty() {
        eprintln!("warning: empty record, no plots written");
        return Ok(out);
    }
    out.extend(write_chart(dir.join("rates.svg"), rates_chart(record))?);
    for (i, sol) in solutions.iter().enumerate() {
        out.extend(write_chart(dir.join(format!("profile_{i:03}.svg")), profile_chart(sol))?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_chart_renders_nothing() {
        let c = Chart { title: "t".into(), x_label: "x".into(), y_label: "y".into(), series: vec![] };
        assert!(c.render().is_none());
    }

    #[test]
    fn chart_is_wellformed_svg() {
        let c = Chart {
            title: "a < b".into(),
            x_label: "x".into(),
            y_label: "y".into(),
            series: vec![Series { label: "s".into(), points: vec![(0.0, 1.0), (1.0, 2.0)], markers: true, dashed: false }],
        };
        let svg = c.render().unwrap();
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert!(svg.contains("a &lt; b"));
        assert_eq!(svg.matches("<circle").count(), 2);
    }

    #[test]
    fn ticks_cover_the_range() {
        let t = ticks(-4.2, -0.9);
        assert!(t.first().unwrap() >= &-4.2 && t.last().unwrap() <= &-0.9);
        assert!(t.len() >= 3);
    }
}
