//! Log-log error plots as plain SVG.

use std::fmt::Write as _;
use std::path::Path;

use crate::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub h: Vec<f64>,
    pub err: Vec<f64>,
}

const COLORS: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf",
];
const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 220.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;

/// Least-squares slope of `log err` against `log h`.
pub fn fitted_slope(h: &[f64], err: &[f64]) -> Option<f64> {
    if h.len() != err.len() || h.len() < 2 {
        return None;
    }
    let xs: Vec<f64> = h.iter().map(|v| v.ln()).collect();
    let ys: Vec<f64> = err.iter().map(|v| v.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

fn check(series: &[Series]) -> Result<(), CliError> {
    if series.is_empty() {
        return Err(CliError::Failure("plot: no series".into()));
    }
    for s in series {
        if s.h.is_empty() || s.h.len() != s.err.len() {
            return Err(CliError::Failure(format!(
                "plot: series '{}' is empty or ragged",
                s.label
            )));
        }
        if s.h.iter().chain(&s.err).any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(CliError::Failure(format!(
                "plot: series '{}' has non-positive values",
                s.label
            )));
        }
    }
    Ok(())
}

fn decade_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    let (lo, hi) = (lo.log10().floor(), hi.log10().ceil());
    if hi > lo {
        (lo, hi)
    } else {
        (lo, lo + 1.0)
    }
}

/// Renders the series into an SVG document.
pub fn render_svg(title: &str, series: &[Series]) -> Result<String, CliError> {
    check(series)?;
    let (hx0, hx1) = decade_range(series.iter().flat_map(|s| s.h.iter().copied()));
    let (ey0, ey1) = decade_range(series.iter().flat_map(|s| s.err.iter().copied()));
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let px = |h: f64| LEFT + (h.log10() - hx0) / (hx1 - hx0) * pw;
    let py = |e: f64| TOP + (ey1 - e.log10()) / (ey1 - ey0) * ph;

    let mut out = String::new();
    let w = &mut out;
    writeln!(w, r#"<?xml version="1.0" encoding="UTF-8"?>"#).unwrap();
    writeln!(
        w,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    )
    .unwrap();
    writeln!(w, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#).unwrap();
    writeln!(
        w,
        r#"<text x="{:.2}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
        LEFT + pw / 2.0,
        escape(title)
    )
    .unwrap();

    for d in (hx0 as i32)..=(hx1 as i32) {
        let x = px(10f64.powi(d));
        writeln!(
            w,
            r##"<line x1="{x:.2}" y1="{TOP:.2}" x2="{x:.2}" y2="{:.2}" stroke="#dddddd"/>"##,
            TOP + ph
        )
        .unwrap();
        writeln!(
            w,
            r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">1e{d}</text>"#,
            TOP + ph + 18.0
        )
        .unwrap();
    }
    for d in (ey0 as i32)..=(ey1 as i32) {
        let y = py(10f64.powi(d));
        writeln!(
            w,
            r##"<line x1="{LEFT:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#dddddd"/>"##,
            LEFT + pw
        )
        .unwrap();
        writeln!(
            w,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">1e{d}</text>"#,
            LEFT - 6.0,
            y + 4.0
        )
        .unwrap();
    }
    writeln!(
        w,
        r#"<rect x="{LEFT:.2}" y="{TOP:.2}" width="{pw:.2}" height="{ph:.2}" fill="none" stroke="black"/>"#
    )
    .unwrap();
    writeln!(
        w,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">h</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 16.0
    )
    .unwrap();
    writeln!(
        w,
        r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">error</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0
    )
    .unwrap();

    // Slope guides anchored at the finest point of the first series.
    let first = &series[0];
    let (i_min, _) = first
        .h
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |a, (i, &h)| if h < a.1 { (i, h) } else { a });
    let (h_a, e_a) = (first.h[i_min], first.err[i_min] * 0.5);
    let h_b = 10f64.powf(hx1).min(h_a * 10f64.powf((hx1 - hx0).min(1.5)));
    let mut legend = Vec::new();
    for (p, dash) in [(1.0, "6,4"), (2.0, "2,3")] {
        let e_b = e_a * (h_b / h_a).powf(p);
        writeln!(
            w,
            r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="gray" stroke-dasharray="{dash}"/>"#,
            px(h_a),
            py(e_a),
            px(h_b),
            py(e_b)
        )
        .unwrap();
        legend.push((format!("h^{p:.0} guide"), "gray", Some(dash)));
    }

    for (i, s) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let pts: Vec<String> =
            s.h.iter()
                .zip(&s.err)
                .map(|(&h, &e)| format!("{:.2},{:.2}", px(h), py(e)))
                .collect();
        writeln!(
            w,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            pts.join(" ")
        )
        .unwrap();
        for (&h, &e) in s.h.iter().zip(&s.err) {
            writeln!(
                w,
                r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#,
                px(h),
                py(e)
            )
            .unwrap();
        }
        let label = match fitted_slope(&s.h, &s.err) {
            Some(k) => format!("{} (slope {k:.2})", s.label),
            None => format!("{} (slope n/a)", s.label),
        };
        legend.push((label, color, None));
    }
    for (i, (label, color, dash)) in legend.iter().enumerate() {
        let y = TOP + 10.0 + 18.0 * i as f64;
        let x = WIDTH - RIGHT + 16.0;
        let dash = dash.map(|d| format!(r#" stroke-dasharray="{d}""#)).unwrap_or_default();
        writeln!(
            w,
            r#"<line x1="{x:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="{color}" stroke-width="2"{dash}/>"#,
            x + 24.0
        )
        .unwrap();
        writeln!(
            w,
            r#"<text x="{:.2}" y="{:.2}">{}</text>"#,
            x + 30.0,
            y + 4.0,
            escape(label)
        )
        .unwrap();
    }
    writeln!(w, "</svg>").unwrap();
    Ok(out)
}

/// Writes the plot; nothing is written when the input is rejected.
pub fn write_svg_plot(path: &Path, title: &str, series: &[Series]) -> Result<(), CliError> {
    let svg = render_svg(title, series)?;
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Failure(format!("{}: {e}", dir.display())))?;
    }
    std::fs::write(path, svg).map_err(|e| CliError::Failure(format!("{}: {e}", path.display())))
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
