//! Minimal SVG figures: contour maps and the two-panel Weyl figure.

use std::fmt::Write as _;

use pspec_core::lab::WeylExperimentReport;
use pspec_core::pseudospectrum::ContourSet;
use pspec_core::{Complex64, ComplexGrid};

const PANEL: f64 = 420.0;
const MARGIN: f64 = 60.0;
const TICKS: usize = 5;
const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf"];

/// Data-to-pixel map for one panel.
struct Panel {
    x0: f64,
    y0: f64,
    xr: (f64, f64),
    yr: (f64, f64),
}

impl Panel {
    fn px(&self, x: f64) -> f64 {
        self.x0 + (x - self.xr.0) / (self.xr.1 - self.xr.0) * PANEL
    }

    fn py(&self, y: f64) -> f64 {
        self.y0 + PANEL - (y - self.yr.0) / (self.yr.1 - self.yr.0) * PANEL
    }

    fn axes(&self, out: &mut String, title: &str, xlabel: &str, ylabel: &str) {
        let (x0, y0) = (self.x0, self.y0);
        let _ = writeln!(out, r#"<rect x="{x0:.2}" y="{y0:.2}" width="{PANEL:.2}" height="{PANEL:.2}" fill="none" stroke="black"/>"#);
        for k in 0..=TICKS {
            let f = k as f64 / TICKS as f64;
            let xv = self.xr.0 + f * (self.xr.1 - self.xr.0);
            let yv = self.yr.0 + f * (self.yr.1 - self.yr.0);
            let (xp, yp) = (self.px(xv), self.py(yv));
            let base = y0 + PANEL;
            let _ = writeln!(out, r#"<line x1="{xp:.2}" y1="{base:.2}" x2="{xp:.2}" y2="{:.2}" stroke="black"/>"#, base + 5.0);
            let _ = writeln!(out, r#"<text x="{xp:.2}" y="{:.2}" font-size="11" text-anchor="middle">{}</text>"#, base + 18.0, tick(xv));
            let _ = writeln!(out, r#"<line x1="{:.2}" y1="{yp:.2}" x2="{x0:.2}" y2="{yp:.2}" stroke="black"/>"#, x0 - 5.0);
            let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}" font-size="11" text-anchor="end">{}</text>"#, x0 - 8.0, yp + 4.0, tick(yv));
        }
        let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}" font-size="14" text-anchor="middle">{}</text>"#, x0 + PANEL / 2.0, y0 - 12.0, escape(title));
        let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}" font-size="12" text-anchor="middle">{}</text>"#, x0 + PANEL / 2.0, y0 + PANEL + 38.0, escape(xlabel));
        let (lx, ly) = (x0 - 45.0, y0 + PANEL / 2.0);
        let _ = writeln!(out, r#"<text x="{lx:.2}" y="{ly:.2}" font-size="12" text-anchor="middle" transform="rotate(-90 {lx:.2} {ly:.2})">{}</text>"#, escape(ylabel));
    }
}

fn tick(v: f64) -> String {
    let v = if v.abs() < 1e-12 { 0.0 } else { v };
    if v != 0.0 && (v.abs() >= 1e4 || v.abs() < 1e-2) { format!("{v:.1e}") } else { format!("{v:.3}") }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn document(width: f64, height: f64, body: &str) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width:.0}\" height=\"{height:.0}\" viewBox=\"0 0 {width:.0} {height:.0}\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n{body}</svg>\n"
    )
}

fn provenance(out: &mut String, config: &str) {
    let _ = writeln!(out, "<metadata>{}</metadata>", escape(config));
}

/// One `<path>` per polyline, tagged with its level; axes only when empty.
pub fn contours_svg(set: &ContourSet, grid: &ComplexGrid, title: &str, config: &str) -> String {
    let p = Panel { x0: MARGIN, y0: MARGIN, xr: (grid.re_min, grid.re_max), yr: (grid.im_min, grid.im_max) };
    let mut body = String::new();
    provenance(&mut body, config);
    p.axes(&mut body, title, "Re z", "Im z");
    for (k, level) in set.levels.iter().enumerate() {
        let colour = PALETTE[k % PALETTE.len()];
        for line in &level.polylines {
            let mut d = String::new();
            for (m, z) in line.points.iter().enumerate() {
                let _ = write!(d, "{}{:.2},{:.2} ", if m == 0 { "M" } else { "L" }, p.px(z.re), p.py(z.im));
            }
            if line.closed {
                d.push('Z');
            }
            let _ = writeln!(
                body,
                r#"<path class="contour" data-level="{:e}" d="{}" fill="none" stroke="{colour}" stroke-width="1.2"/>"#,
                level.level,
                d.trim_end()
            );
        }
        let ly = MARGIN + 16.0 * k as f64;
        let lx = MARGIN + PANEL + 15.0;
        let _ = writeln!(body, r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{colour}" stroke-width="2"/>"#, lx + 20.0);
        let _ = writeln!(body, r#"<text x="{:.2}" y="{:.2}" font-size="11">ε = {:e}</text>"#, lx + 25.0, ly + 4.0, level.level);
    }
    document(2.0 * MARGIN + PANEL + 110.0, 2.0 * MARGIN + PANEL, &body)
}

fn padded(lo: f64, hi: f64) -> (f64, f64) {
    let span = (hi - lo).max(1e-12);
    (lo - 0.05 * span, hi + 0.05 * span)
}

/// Left: eigenvalues of every draw with the Γ box. Right: integrated density
/// against the Weyl curve.
pub fn weyl_svg(report: &WeylExperimentReport, config: &str) -> String {
    let g = report.gamma;
    let all: Vec<Complex64> = report.eigenvalues.iter().flatten().copied().collect();
    let (mut re_lo, mut re_hi, mut im_lo, mut im_hi) = (g.re_min, g.re_max, g.im_min, g.im_max);
    for z in &all {
        re_lo = re_lo.min(z.re);
        re_hi = re_hi.max(z.re);
        im_lo = im_lo.min(z.im);
        im_hi = im_hi.max(z.im);
    }
    let left = Panel { x0: MARGIN, y0: MARGIN, xr: padded(re_lo, re_hi), yr: padded(im_lo, im_hi) };
    let mut body = String::new();
    provenance(&mut body, config);
    left.axes(&mut body, &format!("spectrum of P + δQ, {} draws", report.eigenvalues.len()), "Re λ", "Im λ");
    for z in &all {
        let _ = writeln!(body, r##"<circle cx="{:.2}" cy="{:.2}" r="1.2" fill="#1f77b4"/>"##, left.px(z.re), left.py(z.im));
    }
    let (bx, by) = (left.px(g.re_min), left.py(g.im_max));
    let _ = writeln!(
        body,
        r##"<rect class="gamma" x="{bx:.2}" y="{by:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="#d62728" stroke-dasharray="5,3"/>"##,
        left.px(g.re_max) - bx,
        left.py(g.im_min) - by
    );

    let d = &report.density;
    let ymax = d.empirical.iter().chain(&d.weyl).copied().fold(1.0, f64::max);
    let right = Panel { x0: 2.0 * MARGIN + PANEL + 20.0, y0: MARGIN, xr: (d.im_min, *d.b.last().unwrap_or(&d.im_min) + 1e-12), yr: (0.0, 1.05 * ymax) };
    right.axes(&mut body, "integrated density of eigenvalues", "b", "count in Re ∈ window, Im ≤ b");
    for (series, colour, label, class) in [(&d.empirical, "#1f77b4", "experiment", "empirical"), (&d.weyl, "#d62728", "Weyl law", "weyl")] {
        let mut path = String::new();
        for (m, (b, v)) in d.b.iter().zip(series.iter()).enumerate() {
            let _ = write!(path, "{}{:.2},{:.2} ", if m == 0 { "M" } else { "L" }, right.px(*b), right.py(*v));
        }
        let _ = writeln!(body, r#"<path class="{class}" d="{}" fill="none" stroke="{colour}" stroke-width="1.5"/>"#, path.trim_end());
        let k = if class == "weyl" { 1.0 } else { 0.0 };
        let (lx, ly) = (right.x0 + 15.0, right.y0 + 15.0 + 16.0 * k);
        let _ = writeln!(body, r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{colour}" stroke-width="2"/>"#, lx + 20.0);
        let _ = writeln!(body, r#"<text x="{:.2}" y="{:.2}" font-size="11">{label}</text>"#, lx + 25.0, ly + 4.0);
    }
    document(3.0 * MARGIN + 2.0 * PANEL + 40.0, 2.0 * MARGIN + PANEL, &body)
}
