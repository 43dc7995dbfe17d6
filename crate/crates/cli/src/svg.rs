//! Self-contained SVG plots of root reports and trajectories.
//!
//! Complex roots cluster within `|ε| ≪ 1` of their window centre, and that
//! radius shrinks by orders of magnitude from one window to the next, so
//! each window gets its own panel and scale. Real roots and roots without a
//! window label share an overview panel. Every root is drawn exactly once as
//! an element with `class="root"`.

use std::collections::BTreeMap;
use std::fmt::Write;

use num_complex::Complex64;
use stargraph::asymptotics::{branch_exponent, half_integer};
use stargraph::secular::window_center;

use crate::report::{number, RootEntry, RootReport};
use crate::trajectory::Trajectory;

const PANEL_W: f64 = 340.0;
const PANEL_H: f64 = 300.0;
const MARGIN_L: f64 = 62.0;
const MARGIN_R: f64 = 14.0;
const MARGIN_T: f64 = 30.0;
const MARGIN_B: f64 = 44.0;
const COLUMNS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Overlay {
    #[default]
    None,
    /// Circle of the first-order radius `|β/((M+½)π)|^{1+2/p}` around each window centre.
    AsymptoticCircles,
}

/// Radius and centre of the first-order circle for window `m`.
pub fn asymptotic_circle(q: usize, beta: Complex64, m: u64) -> Option<(f64, f64)> {
    if q < 3 {
        return None;
    }
    let radius = (beta.norm() / half_integer(m)).powf(branch_exponent(q - 2));
    Some((radius, window_center(m as i64)))
}

/// Maps a data rectangle onto the plotting area of one panel.
struct Frame {
    x0: f64,
    y0: f64,
    re: (f64, f64),
    im: (f64, f64),
}

impl Frame {
    fn plot_w() -> f64 {
        PANEL_W - MARGIN_L - MARGIN_R
    }

    fn plot_h() -> f64 {
        PANEL_H - MARGIN_T - MARGIN_B
    }

    fn x(&self, re: f64) -> f64 {
        self.x0 + MARGIN_L + (re - self.re.0) / (self.re.1 - self.re.0) * Self::plot_w()
    }

    fn y(&self, im: f64) -> f64 {
        self.y0 + MARGIN_T + (self.im.1 - im) / (self.im.1 - self.im.0) * Self::plot_h()
    }

    fn scale_x(&self) -> f64 {
        Self::plot_w() / (self.re.1 - self.re.0)
    }

    fn scale_y(&self) -> f64 {
        Self::plot_h() / (self.im.1 - self.im.0)
    }
}

fn padded(lo: f64, hi: f64) -> (f64, f64) {
    if !(hi > lo) {
        let half = if lo.abs() > 0.0 { 0.5 * lo.abs() } else { 1.0 };
        return (lo - half, hi + half);
    }
    let pad = 0.08 * (hi - lo);
    (lo - pad, hi + pad)
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn panel_origin(index: usize) -> (f64, f64) {
    ((index % COLUMNS) as f64 * PANEL_W, (index / COLUMNS) as f64 * PANEL_H)
}

fn draw_axes(out: &mut String, f: &Frame, title: &str, re_ticks: [String; 2], im_ticks: [String; 2]) {
    let (left, right) = (f.x0 + MARGIN_L, f.x0 + PANEL_W - MARGIN_R);
    let (top, bottom) = (f.y0 + MARGIN_T, f.y0 + PANEL_H - MARGIN_B);
    let _ = writeln!(
        out,
        r##"<g class="panel"><rect class="frame" x="{left:.2}" y="{top:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="#444"/>"##,
        right - left,
        bottom - top
    );
    let _ = writeln!(
        out,
        r#"<text class="panel-title" x="{:.2}" y="{:.2}" text-anchor="middle" font-size="12">{}</text>"#,
        (left + right) / 2.0,
        f.y0 + 18.0,
        esc(title)
    );
    let _ = writeln!(
        out,
        r#"<text class="axis-label" x="{:.2}" y="{:.2}" text-anchor="middle" font-size="12">Re κ</text>"#,
        (left + right) / 2.0,
        bottom + 34.0
    );
    let _ = writeln!(
        out,
        r#"<text class="axis-label" x="{:.2}" y="{:.2}" text-anchor="middle" font-size="12" transform="rotate(-90 {:.2} {:.2})">Im κ</text>"#,
        f.x0 + 14.0,
        (top + bottom) / 2.0,
        f.x0 + 14.0,
        (top + bottom) / 2.0
    );
    for (x, anchor, label) in [(left, "start", &re_ticks[0]), (right, "end", &re_ticks[1])] {
        let _ = writeln!(
            out,
            r#"<text class="tick" x="{x:.2}" y="{:.2}" text-anchor="{anchor}" font-size="9">{}</text>"#,
            bottom + 14.0,
            esc(label)
        );
    }
    for (y, label) in [(bottom, &im_ticks[0]), (top + 8.0, &im_ticks[1])] {
        let _ = writeln!(
            out,
            r#"<text class="tick" x="{:.2}" y="{y:.2}" text-anchor="end" font-size="9">{}</text>"#,
            left - 3.0,
            esc(label)
        );
    }
    if f.im.0 < 0.0 && f.im.1 > 0.0 {
        let y = f.y(0.0);
        let _ = writeln!(
            out,
            r##"<line class="real-axis" x1="{left:.2}" y1="{y:.2}" x2="{right:.2}" y2="{y:.2}" stroke="#bbb" stroke-dasharray="3 3"/>"##
        );
    }
    out.push_str("</g>\n");
}

fn marker(out: &mut String, f: &Frame, r: &RootEntry) {
    let m = r.m.map(|m| m.to_string()).unwrap_or_default();
    let n = r.n.map(|n| n.to_string()).unwrap_or_default();
    let _ = writeln!(
        out,
        r##"<circle class="root" cx="{:.3}" cy="{:.3}" r="3" fill="#c0392b" data-kappa-re="{}" data-kappa-im="{}" data-m="{m}" data-n="{n}"/>"##,
        f.x(r.kappa_re),
        f.y(r.kappa_im),
        number(r.kappa_re),
        number(r.kappa_im),
    );
}

fn svg_document(panels: usize, body: &str) -> String {
    let cols = panels.clamp(1, COLUMNS);
    let rows = panels.div_ceil(COLUMNS).max(1);
    format!(
        concat!(
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif">"#,
            "\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n{body}</svg>\n"
        ),
        w = cols as f64 * PANEL_W,
        h = rows as f64 * PANEL_H,
        body = body
    )
}

/// Renders a root report: one overview panel (if needed) plus one panel per window.
pub fn render_report(report: &RootReport, overlay: Overlay) -> String {
    let beta = report.model.beta();
    let mut windows: BTreeMap<u64, Vec<&RootEntry>> = BTreeMap::new();
    let mut loose: Vec<&RootEntry> = Vec::new();
    for r in &report.roots {
        match r.m {
            Some(m) => windows.entry(m).or_default().push(r),
            None => loose.push(r),
        }
    }

    let mut body = String::new();
    let mut panel = 0usize;
    if !loose.is_empty() || windows.is_empty() {
        let (x0, y0) = panel_origin(panel);
        let (re_lo, re_hi) = loose
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), r| (a.min(r.kappa_re), b.max(r.kappa_re)));
        let (im_lo, im_hi) = loose
            .iter()
            .fold((0.0f64, 0.0f64), |(a, b), r| (a.min(r.kappa_im), b.max(r.kappa_im)));
        let re = if loose.is_empty() { (0.0, 1.0) } else { padded(re_lo, re_hi) };
        let im = padded(im_lo, im_hi);
        let f = Frame { x0, y0, re, im };
        draw_axes(
            &mut body,
            &f,
            "spectrum",
            [format!("{:.4}", re.0), format!("{:.4}", re.1)],
            [format!("{:.3e}", im.0), format!("{:.3e}", im.1)],
        );
        for r in &loose {
            marker(&mut body, &f, r);
        }
        panel += 1;
    }

    for (&m, roots) in &windows {
        let (x0, y0) = panel_origin(panel);
        let center = window_center(m as i64);
        let circle = match overlay {
            Overlay::AsymptoticCircles => asymptotic_circle(report.model.q, beta, m),
            Overlay::None => None,
        };
        let mut extent = roots
            .iter()
            .map(|r| (r.kappa() - Complex64::new(center, 0.0)).norm())
            .fold(0.0f64, f64::max);
        if let Some((radius, _)) = circle {
            extent = extent.max(radius);
        }
        if !(extent > 0.0) {
            extent = 1e-6;
        }
        extent *= 1.25;
        let aspect = Frame::plot_w() / Frame::plot_h();
        let f = Frame {
            x0,
            y0,
            // Equal scales on both axes, so circles stay circular.
            re: (center - extent * aspect, center + extent * aspect),
            im: (-extent, extent),
        };
        draw_axes(
            &mut body,
            &f,
            &format!("M = {m}, centre {center:.6}"),
            [format!("{:+.2e}", -extent * aspect), format!("{:+.2e}", extent * aspect)],
            [format!("{:+.2e}", -extent), format!("{:+.2e}", extent)],
        );
        if let Some((radius, c)) = circle {
            let _ = writeln!(
                body,
                r##"<ellipse class="asymptotic-circle" cx="{:.3}" cy="{:.3}" rx="{:.3}" ry="{:.3}" fill="none" stroke="#2471a3" stroke-dasharray="4 2" data-m="{m}" data-center="{}" data-radius="{}"/>"##,
                f.x(c),
                f.y(0.0),
                radius * f.scale_x(),
                radius * f.scale_y(),
                number(c),
                number(radius),
            );
        }
        for r in roots {
            marker(&mut body, &f, r);
        }
        panel += 1;
    }
    svg_document(panel, &body)
}

/// Renders every trajectory path as a polyline in one κ-plane panel.
pub fn render_trajectory(traj: &Trajectory) -> String {
    let pts = traj.paths.iter().flat_map(|p| p.kappa.iter());
    let (mut re_lo, mut re_hi, mut im_lo, mut im_hi) =
        (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for k in pts {
        re_lo = re_lo.min(k[0]);
        re_hi = re_hi.max(k[0]);
        im_lo = im_lo.min(k[1]);
        im_hi = im_hi.max(k[1]);
    }
    let (re, im) = if re_lo.is_finite() {
        (padded(re_lo, re_hi), padded(im_lo, im_hi))
    } else {
        ((0.0, 1.0), (-1.0, 1.0))
    };
    let f = Frame { x0: 0.0, y0: 0.0, re, im };
    let mut body = String::new();
    draw_axes(
        &mut body,
        &f,
        &format!("{} β samples", traj.beta_samples.len()),
        [format!("{:.6}", re.0), format!("{:.6}", re.1)],
        [format!("{:.3e}", im.0), format!("{:.3e}", im.1)],
    );
    for p in &traj.paths {
        let points: Vec<String> = p
            .kappa
            .iter()
            .map(|k| format!("{:.3},{:.3}", f.x(k[0]), f.y(k[1])))
            .collect();
        let _ = writeln!(
            body,
            r##"<polyline class="path" data-path="{}" points="{}" fill="none" stroke="#1e8449"/>"##,
            p.id,
            points.join(" ")
        );
        if let Some(k) = p.kappa.first() {
            let _ = writeln!(
                body,
                r##"<circle class="path-start" cx="{:.3}" cy="{:.3}" r="2.5" fill="#1e8449"/>"##,
                f.x(k[0]),
                f.y(k[1])
            );
        }
    }
    svg_document(1, &body)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circle_for_q4_window_10() {
        let (r, c) = asymptotic_circle(4, Complex64::new(1.0, 0.0), 10).unwrap();
        assert!((r / 9.190132572936e-4 - 1.0).abs() < 1e-6, "{r}");
        assert_eq!(c, 21.0 * std::f64::consts::PI / 2.0);
        assert!(asymptotic_circle(2, Complex64::new(1.0, 0.0), 10).is_none());
    }
}
