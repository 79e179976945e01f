//! A plain SVG chart of `tv_mean` against depth.

use std::fmt::Write as _;

use crate::scan::ScanResult;

const WIDTH: f64 = 760.0;
const HEIGHT: f64 = 480.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 200.0;
const MARGIN_TOP: f64 = 30.0;
const MARGIN_BOTTOM: f64 = 55.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2",
];

/// Rows grouped by `(β, degree)` in order of first appearance, each sorted by depth.
pub fn series(rows: &[ScanResult]) -> Vec<((f64, f64), Vec<ScanResult>)> {
    let mut out: Vec<((f64, f64), Vec<ScanResult>)> = Vec::new();
    for r in rows {
        let key = (r.beta, r.degree);
        match out.iter_mut().find(|(k, _)| k.0.to_bits() == key.0.to_bits() && k.1.to_bits() == key.1.to_bits()) {
            Some((_, v)) => v.push(*r),
            None => out.push((key, vec![*r])),
        }
    }
    for (_, v) in &mut out {
        v.sort_by_key(|r| r.h);
    }
    out
}

fn finite_or(x: f64, fallback: f64) -> f64 {
    if x.is_finite() {
        x
    } else {
        fallback
    }
}

fn label(x: f64) -> String {
    let s = format!("{x:.4}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

/// Renders the chart. The y axis spans `[0, 1]`, widened if a bar pokes out.
pub fn render_svg(rows: &[ScanResult]) -> String {
    let groups = series(rows);
    let h_min = rows.iter().map(|r| r.h).min().unwrap_or(0) as f64;
    let mut h_max = rows.iter().map(|r| r.h).max().unwrap_or(1) as f64;
    if h_max <= h_min {
        h_max = h_min + 1.0;
    }
    let y_max = rows
        .iter()
        .map(|r| finite_or(r.tv_mean, 0.0) + finite_or(r.tv_stderr, 0.0))
        .fold(1.0, f64::max);
    let y_min = rows
        .iter()
        .map(|r| finite_or(r.tv_mean, 0.0) - finite_or(r.tv_stderr, 0.0))
        .fold(0.0, f64::min);
    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let sx = |h: f64| MARGIN_LEFT + (h - h_min) / (h_max - h_min) * plot_w;
    let sy = |y: f64| MARGIN_TOP + (1.0 - (y - y_min) / (y_max - y_min)) * plot_h;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let (x0, x1, y0, y1) = (sx(h_min), sx(h_max), sy(y_min), sy(y_max));
    let _ = writeln!(svg, r#"<g class="axes" stroke="black">"#);
    let _ = writeln!(svg, r#"<line x1="{x0:.2}" y1="{y0:.2}" x2="{x1:.2}" y2="{y0:.2}"/>"#);
    let _ = writeln!(svg, r#"<line x1="{x0:.2}" y1="{y0:.2}" x2="{x0:.2}" y2="{y1:.2}"/>"#);
    let mut depths: Vec<usize> = rows.iter().map(|r| r.h).collect();
    depths.sort_unstable();
    depths.dedup();
    for &h in &depths {
        let x = sx(h as f64);
        let _ = writeln!(svg, r#"<line x1="{x:.2}" y1="{y0:.2}" x2="{x:.2}" y2="{:.2}"/>"#, y0 + 5.0);
        let _ = writeln!(
            svg,
            r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle" stroke="none">{h}</text>"#,
            y0 + 18.0
        );
    }
    for k in 0..=5 {
        let y = y_min + (y_max - y_min) * k as f64 / 5.0;
        let py = sy(y);
        let _ = writeln!(svg, r#"<line x1="{:.2}" y1="{py:.2}" x2="{x0:.2}" y2="{py:.2}"/>"#, x0 - 5.0);
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end" stroke="none">{}</text>"#,
            x0 - 8.0,
            py + 4.0,
            label(y)
        );
    }
    let _ = writeln!(svg, "</g>");
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">depth h</text>"#,
        MARGIN_LEFT + plot_w / 2.0,
        HEIGHT - 12.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">mean TV</text>"#,
        MARGIN_TOP + plot_h / 2.0,
        MARGIN_TOP + plot_h / 2.0
    );

    for (i, ((beta, degree), pts)) in groups.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let _ = writeln!(
            svg,
            r#"<g class="series" data-beta="{beta}" data-degree="{degree}" stroke="{color}" fill="{color}">"#
        );
        let finite: Vec<&ScanResult> = pts.iter().filter(|r| r.tv_mean.is_finite()).collect();
        if finite.len() > 1 {
            let path: Vec<String> = finite
                .iter()
                .map(|r| format!("{:.2},{:.2}", sx(r.h as f64), sy(r.tv_mean)))
                .collect();
            let _ = writeln!(svg, r#"<polyline fill="none" stroke-width="1.5" points="{}"/>"#, path.join(" "));
        }
        for r in &finite {
            let (x, y) = (sx(r.h as f64), sy(r.tv_mean));
            if r.tv_stderr.is_finite() && r.tv_stderr > 0.0 {
                let (lo, hi) = (sy(r.tv_mean - r.tv_stderr), sy(r.tv_mean + r.tv_stderr));
                let _ = writeln!(svg, r#"<line class="errorbar" x1="{x:.2}" y1="{lo:.2}" x2="{x:.2}" y2="{hi:.2}"/>"#);
            }
            let _ = writeln!(svg, r#"<circle class="point" cx="{x:.2}" cy="{y:.2}" r="3"/>"#);
        }
        let ly = MARGIN_TOP + 10.0 + 18.0 * i as f64;
        let lx = WIDTH - MARGIN_RIGHT + 15.0;
        let _ = writeln!(svg, r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke-width="2"/>"#, lx + 20.0);
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" stroke="none" fill="black">β={} d={}</text>"#,
            lx + 26.0,
            ly + 4.0,
            label(*beta),
            label(*degree)
        );
        let _ = writeln!(svg, "</g>");
    }
    svg.push_str("</svg>\n");
    svg
}
