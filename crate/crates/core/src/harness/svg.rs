//! Deterministic SVG line charts for ablation curves.
//!
//! No external renderer: the chart is assembled as a string with fixed
//! formatting (`{:.2}` pixel coordinates), so the same inputs always produce
//! byte-identical output.

use std::fmt::Write as _;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const LEFT: f64 = 62.0;
const RIGHT: f64 = 620.0;
const TOP: f64 = 46.0;
const BOTTOM: f64 = 352.0;

/// Fixed palette; series take colors round-robin.
const PALETTE: [&str; 6] = ["#1f6fb2", "#d1495b", "#2e8b57", "#b8860b", "#6a4fa3", "#444444"];

/// One plotted family: a named config with one polyline per seed.
/// The mean over seeds is drawn bold; individual seeds are drawn faint.
#[derive(Debug, Clone)]
pub struct Series {
    pub name: String,
    /// Per seed: (iteration, value) samples, assumed sorted by iteration.
    pub per_seed: Vec<Vec<(f64, f64)>>,
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Mean of the per-seed values at each iteration that any seed reports,
/// sorted by iteration.
fn mean_curve(per_seed: &[Vec<(f64, f64)>]) -> Vec<(f64, f64)> {
    let mut acc: std::collections::BTreeMap<u64, (f64, usize)> = std::collections::BTreeMap::new();
    for seed in per_seed {
        for &(x, y) in seed {
            let e = acc.entry(x.to_bits()).or_insert((0.0, 0));
            e.0 += y;
            e.1 += 1;
        }
    }
    acc.into_iter().map(|(xb, (sum, n))| (f64::from_bits(xb), sum / n as f64)).collect()
}

fn polyline(out: &mut String, pts: &[(f64, f64)], color: &str, width: f64, opacity: f64) {
    if pts.is_empty() {
        return;
    }
    let coords: Vec<String> = pts.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
    let _ = writeln!(
        out,
        r#"  <polyline fill="none" stroke="{color}" stroke-width="{width}" stroke-opacity="{opacity}" points="{}"/>"#,
        coords.join(" ")
    );
}

/// Renders a line chart of `series` with y fixed to [0, 1] and x spanning
/// the iteration range present in the data.
pub fn render_chart(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let mut xmin = f64::INFINITY;
    let mut xmax = f64::NEG_INFINITY;
    for s in series {
        for seed in &s.per_seed {
            for &(x, _) in seed {
                xmin = xmin.min(x);
                xmax = xmax.max(x);
            }
        }
    }
    if !xmin.is_finite() || !xmax.is_finite() {
        xmin = 0.0;
        xmax = 1.0;
    }
    if xmax <= xmin {
        xmax = xmin + 1.0;
    }
    let sx = |x: f64| LEFT + (x - xmin) / (xmax - xmin) * (RIGHT - LEFT);
    let sy = |y: f64| BOTTOM - y.clamp(0.0, 1.0) * (BOTTOM - TOP);

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(out, r#"  <rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"  <text x="{:.2}" y="22" font-family="monospace" font-size="14" text-anchor="middle">{}</text>"#,
        (LEFT + RIGHT) / 2.0,
        esc(title)
    );

    // Horizontal grid + y ticks every 0.2.
    for i in 0..=5 {
        let v = i as f64 * 0.2;
        let y = sy(v);
        let _ = writeln!(
            out,
            r##"  <line x1="{LEFT:.2}" y1="{y:.2}" x2="{RIGHT:.2}" y2="{y:.2}" stroke="#dddddd" stroke-width="1"/>"##
        );
        let _ = writeln!(
            out,
            r#"  <text x="{:.2}" y="{:.2}" font-family="monospace" font-size="11" text-anchor="end">{v:.1}</text>"#,
            LEFT - 8.0,
            y + 4.0
        );
    }
    // X ticks: five evenly spaced positions.
    for i in 0..=4 {
        let v = xmin + (xmax - xmin) * i as f64 / 4.0;
        let x = sx(v);
        let _ = writeln!(
            out,
            r##"  <line x1="{x:.2}" y1="{BOTTOM:.2}" x2="{x:.2}" y2="{:.2}" stroke="#888888" stroke-width="1"/>"##,
            BOTTOM + 5.0
        );
        let _ = writeln!(
            out,
            r#"  <text x="{x:.2}" y="{:.2}" font-family="monospace" font-size="11" text-anchor="middle">{:.0}</text>"#,
            BOTTOM + 18.0,
            v
        );
    }
    // Axes.
    let _ = writeln!(
        out,
        r##"  <line x1="{LEFT:.2}" y1="{TOP:.2}" x2="{LEFT:.2}" y2="{BOTTOM:.2}" stroke="#222222" stroke-width="1.5"/>"##
    );
    let _ = writeln!(
        out,
        r##"  <line x1="{LEFT:.2}" y1="{BOTTOM:.2}" x2="{RIGHT:.2}" y2="{BOTTOM:.2}" stroke="#222222" stroke-width="1.5"/>"##
    );
    // Axis labels.
    let _ = writeln!(
        out,
        r#"  <text x="{:.2}" y="{:.2}" font-family="monospace" font-size="12" text-anchor="middle">{}</text>"#,
        (LEFT + RIGHT) / 2.0,
        BOTTOM + 36.0,
        esc(x_label)
    );
    let _ = writeln!(
        out,
        r#"  <text x="16" y="{:.2}" font-family="monospace" font-size="12" text-anchor="middle" transform="rotate(-90 16 {:.2})">{}</text>"#,
        (TOP + BOTTOM) / 2.0,
        (TOP + BOTTOM) / 2.0,
        esc(y_label)
    );

    // Curves: faint per-seed lines underneath, bold mean on top.
    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        for seed in &s.per_seed {
            let pts: Vec<(f64, f64)> = seed.iter().map(|&(x, y)| (sx(x), sy(y))).collect();
            polyline(&mut out, &pts, color, 1.0, 0.25);
        }
        let mean: Vec<(f64, f64)> =
            mean_curve(&s.per_seed).iter().map(|&(x, y)| (sx(x), sy(y))).collect();
        polyline(&mut out, &mean, color, 2.0, 1.0);
    }

    // Legend, top-right inside the plot.
    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let y = TOP + 14.0 + 16.0 * i as f64;
        let _ = writeln!(
            out,
            r#"  <line x1="{:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="{color}" stroke-width="2"/>"#,
            RIGHT - 150.0,
            RIGHT - 122.0
        );
        let _ = writeln!(
            out,
            r#"  <text x="{:.2}" y="{:.2}" font-family="monospace" font-size="11">{}</text>"#,
            RIGHT - 116.0,
            y + 4.0,
            esc(&s.name)
        );
    }

    let _ = writeln!(out, "</svg>");
    out
}
