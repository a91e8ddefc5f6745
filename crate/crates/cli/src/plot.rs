//! Static SVG line charts.

use std::fmt::Write as _;

pub const GRADUATED_COLOR: &str = "#1f77b4";
pub const RETIRED_COLOR: &str = "#d62728";

#[derive(Debug, Clone, PartialEq)]
pub struct Line {
    pub label: String,
    pub color: String,
    /// (x, y, standard error); the error band is drawn where present.
    pub points: Vec<(f64, f64, Option<f64>)>,
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn bounds(lines: &[Line]) -> (f64, f64, f64, f64) {
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for l in lines {
        for &(x, y, se) in &l.points {
            let e = se.unwrap_or(0.0);
            x0 = x0.min(x);
            x1 = x1.max(x);
            y0 = y0.min(y - e);
            y1 = y1.max(y + e);
        }
    }
    if !x0.is_finite() {
        return (0.0, 1.0, 0.0, 1.0);
    }
    if x1 - x0 < 1e-12 {
        x1 = x0 + 1.0;
    }
    if y1 - y0 < 1e-12 {
        y0 -= 0.5;
        y1 += 0.5;
    }
    (x0, x1, y0, y1)
}

/// One framed chart at (`ox`, `oy`) of size `w` × `h`.
fn panel(out: &mut String, ox: f64, oy: f64, w: f64, h: f64, title: &str, lines: &[Line]) {
    let (l, r, t, b) = (48.0, 12.0, 26.0, 28.0);
    let (pw, ph) = (w - l - r, h - t - b);
    let (x0, x1, y0, y1) = bounds(lines);
    let sx = |x: f64| ox + l + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| oy + t + (1.0 - (y - y0) / (y1 - y0)) * ph;
    writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" font-size="13" text-anchor="middle">{}</text>"#,
        ox + w / 2.0,
        oy + 16.0,
        esc(title)
    )
    .unwrap();
    writeln!(
        out,
        r##"<rect x="{:.1}" y="{:.1}" width="{pw:.1}" height="{ph:.1}" fill="none" stroke="#888"/>"##,
        ox + l,
        oy + t
    )
    .unwrap();
    for (v, y) in [(y0, sy(y0)), (y1, sy(y1))] {
        writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" font-size="10" text-anchor="end">{v:.3}</text>"#,
            ox + l - 4.0,
            y + 3.0
        )
        .unwrap();
    }
    for (v, x) in [(x0, sx(x0)), (x1, sx(x1))] {
        writeln!(
            out,
            r#"<text x="{x:.1}" y="{:.1}" font-size="10" text-anchor="middle">{v:.0}</text>"#,
            oy + h - b + 14.0
        )
        .unwrap();
    }
    if y0 < 0.0 && y1 > 0.0 {
        writeln!(
            out,
            r##"<line x1="{:.1}" y1="{z:.1}" x2="{:.1}" y2="{z:.1}" stroke="#bbb" stroke-dasharray="3,3"/>"##,
            ox + l,
            ox + l + pw,
            z = sy(0.0)
        )
        .unwrap();
    }
    for line in lines {
        let band: Vec<(f64, f64, f64)> = line.points.iter().filter_map(|&(x, y, se)| se.map(|e| (x, y, e))).collect();
        if band.len() >= 2 {
            let mut d = String::new();
            for (i, &(x, y, e)) in band.iter().enumerate() {
                write!(d, "{}{:.2},{:.2} ", if i == 0 { "M" } else { "L" }, sx(x), sy(y + e)).unwrap();
            }
            for &(x, y, e) in band.iter().rev() {
                write!(d, "L{:.2},{:.2} ", sx(x), sy(y - e)).unwrap();
            }
            writeln!(out, r#"<path d="{}Z" fill="{}" fill-opacity="0.2" stroke="none"/>"#, d, line.color).unwrap();
        }
        let pts: Vec<String> = line
            .points
            .iter()
            .map(|&(x, y, _)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        writeln!(
            out,
            r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="1.5"><title>{}</title></polyline>"#,
            pts.join(" "),
            line.color,
            esc(&line.label)
        )
        .unwrap();
    }
}

fn legend(out: &mut String, x: f64, y: f64, lines: &[Line]) {
    let mut seen = Vec::new();
    for l in lines {
        if seen.contains(&(&l.label, &l.color)) {
            continue;
        }
        seen.push((&l.label, &l.color));
        let yy = y + 14.0 * (seen.len() - 1) as f64;
        writeln!(
            out,
            r#"<rect x="{x:.1}" y="{:.1}" width="10" height="10" fill="{}"/><text x="{:.1}" y="{:.1}" font-size="11">{}</text>"#,
            yy - 9.0,
            l.color,
            x + 14.0,
            yy,
            esc(&l.label)
        )
        .unwrap();
    }
}

fn open(w: f64, h: f64, meta: &str) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w:.0}\" height=\"{h:.0}\" viewBox=\"0 0 {w:.0} {h:.0}\" font-family=\"sans-serif\">\n<metadata>{}</metadata>\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n",
        esc(meta)
    )
}

pub fn line_chart(title: &str, lines: &[Line], meta: &str) -> String {
    let (w, h) = (560.0, 340.0);
    let mut out = open(w, h + 40.0, meta);
    panel(&mut out, 0.0, 0.0, w, h, title, lines);
    legend(&mut out, 60.0, h + 18.0, lines);
    out.push_str("</svg>\n");
    out
}

/// Grid of charts sharing one legend.
pub fn small_multiples(panels: &[(String, Vec<Line>)], cols: usize, meta: &str) -> String {
    let (cw, ch) = (300.0, 200.0);
    let cols = cols.max(1);
    let rows = panels.len().div_ceil(cols).max(1);
    let (w, h) = (cw * cols as f64, ch * rows as f64 + 40.0);
    let mut out = open(w, h, meta);
    for (i, (title, lines)) in panels.iter().enumerate() {
        let (c, r) = (i % cols, i / cols);
        panel(&mut out, c as f64 * cw, r as f64 * ch, cw, ch, title, lines);
    }
    let all: Vec<Line> = panels.iter().flat_map(|p| p.1.clone()).collect();
    legend(&mut out, 60.0, h - 22.0, &all);
    out.push_str("</svg>\n");
    out
}
