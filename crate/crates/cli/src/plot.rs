//! Standalone SVG line plot of loss curves.

use std::fmt::Write as _;
use std::path::Path;

use crate::output::CURVES_HEADER;
use crate::CliError;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 500.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 200.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 50.0;
const COLORS: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Series {
    Loss,
    Gap,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub structure: String,
    pub points: Vec<(f64, f64)>,
}

/// Reads a curves file, keeping structures in order of first appearance.
pub fn read_curves(path: &Path, series: Series) -> Result<Vec<Curve>, CliError> {
    let bad = |msg: String| CliError::config(format!("{}: {msg}", path.display()));
    let mut reader = csv::Reader::from_path(path).map_err(|e| bad(e.to_string()))?;
    let header = reader.headers().map_err(|e| bad(e.to_string()))?.clone();
    if header.iter().ne(CURVES_HEADER) {
        return Err(bad(format!(
            "expected header `{}`, found `{}`",
            CURVES_HEADER.join(","),
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut curves: Vec<Curve> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 2;
        let record = record.map_err(|e| bad(e.to_string()))?;
        let field = |k: usize| record.get(k).unwrap_or_default();
        let step: f64 = field(1)
            .parse::<u64>()
            .map_err(|_| bad(format!("line {line}: invalid step `{}`", field(1))))? as f64;
        let column = match series {
            Series::Loss => 2,
            Series::Gap => 3,
        };
        let value = if field(column).is_empty() && series == Series::Gap {
            None
        } else {
            Some(
                field(column)
                    .parse::<f64>()
                    .map_err(|_| bad(format!("line {line}: invalid number `{}`", field(column))))?,
            )
        };
        field(2)
            .parse::<f64>()
            .map_err(|_| bad(format!("line {line}: invalid loss `{}`", field(2))))?;
        let name = field(0);
        let index = match curves.iter().position(|c| c.structure == name) {
            Some(k) => k,
            None => {
                curves.push(Curve {
                    structure: name.to_string(),
                    points: Vec::new(),
                });
                curves.len() - 1
            }
        };
        if let Some(v) = value {
            curves[index].points.push((step, v));
        }
    }
    if curves.is_empty() {
        return Err(bad("no data rows".into()));
    }
    Ok(curves)
}

/// Drops nonpositive values for a log axis; returns the number dropped per curve.
pub fn drop_nonpositive(curves: &mut [Curve]) -> Vec<usize> {
    curves
        .iter_mut()
        .map(|c| {
            let before = c.points.len();
            c.points.retain(|&(_, v)| v > 0.0);
            before - c.points.len()
        })
        .collect()
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn tick_label(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e4 || v.abs() < 1e-2) {
        format!("{v:.1e}")
    } else {
        format!("{}", (v * 1e3).round() / 1e3)
    }
}

/// Renders one polyline per nonempty curve plus a legend.
pub fn render_svg(curves: &[Curve], logy: bool, y_label: &str) -> Result<String, CliError> {
    let transform = |v: f64| if logy { v.log10() } else { v };
    let all = || curves.iter().flat_map(|c| c.points.iter());
    if all().next().is_none() {
        return Err(CliError::config("nothing to plot"));
    }
    let (mut x0, mut x1) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in all() {
        let ty = transform(y);
        if !ty.is_finite() {
            return Err(CliError::config(format!("non-finite value {y} at step {x}")));
        }
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(ty);
        y1 = y1.max(ty);
    }
    if x1 == x0 {
        x1 = x0 + 1.0;
    }
    if y1 == y0 {
        y0 -= 0.5;
        y1 += 0.5;
    }
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * plot_w;
    let sy = |y: f64| TOP + (1.0 - (y - y0) / (y1 - y0)) * plot_h;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<rect x="{LEFT}" y="{TOP}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>"#
    );
    for k in 0..=4 {
        let f = f64::from(k) / 4.0;
        let (xv, yv) = (x0 + f * (x1 - x0), y0 + f * (y1 - y0));
        let label = if logy { format!("1e{yv:.2}") } else { tick_label(yv) };
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            sx(xv),
            HEIGHT - BOTTOM + 18.0,
            tick_label(xv)
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            LEFT - 6.0,
            sy(yv) + 4.0,
            escape(&label)
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">step</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 12.0
    );
    let y_title = if logy { format!("{y_label} (log10)") } else { y_label.to_string() };
    let _ = writeln!(
        svg,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">{}</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0,
        escape(&y_title)
    );

    for (i, curve) in curves.iter().enumerate() {
        if curve.points.is_empty() {
            continue;
        }
        let color = COLORS[i % COLORS.len()];
        let mut pts = String::new();
        for &(x, y) in &curve.points {
            let _ = write!(pts, "{:.2},{:.2} ", sx(x), sy(transform(y)));
        }
        let _ = writeln!(
            svg,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            pts.trim_end()
        );
        let ly = TOP + 16.0 + 18.0 * i as f64;
        let lx = WIDTH - RIGHT + 12.0;
        let _ = writeln!(
            svg,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#,
            lx + 24.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}">{}</text>"#,
            lx + 30.0,
            ly + 4.0,
            escape(&curve.structure)
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}
