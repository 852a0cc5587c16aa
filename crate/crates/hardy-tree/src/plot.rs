//! Minimal SVG line plots of scan and spectrum tables.

use std::fmt::Write as _;

#[derive(Debug, Clone, PartialEq)]
pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub points: Vec<(f64, f64)>,
    /// Drawn as a horizontal line.
    pub target: f64,
}

const W: f64 = 640.0;
const H: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;

struct Axis {
    log: bool,
    lo: f64,
    hi: f64,
}

impl Axis {
    fn fit(values: impl Iterator<Item = f64> + Clone, log: bool) -> Axis {
        let tr = |x: f64| if log { x.log10() } else { x };
        let lo = values.clone().map(tr).fold(f64::INFINITY, f64::min);
        let hi = values.map(tr).fold(f64::NEG_INFINITY, f64::max);
        let pad = if hi - lo > 1e-12 { 0.05 * (hi - lo) } else if log { 0.5 } else { lo.abs().max(1.0) * 0.5 };
        Axis { log, lo: lo - pad, hi: hi + pad }
    }

    fn frac(&self, x: f64) -> f64 {
        let x = if self.log { x.log10() } else { x };
        (x - self.lo) / (self.hi - self.lo)
    }

    fn label(&self, f: f64) -> f64 {
        let x = self.lo + f * (self.hi - self.lo);
        if self.log {
            10f64.powf(x)
        } else {
            x
        }
    }
}

/// Log-log when every value is positive; a nonpositive `y` switches the `y` axis to linear.
/// Returns `None` for an empty table.
pub fn render_svg(plot: &Plot) -> Option<String> {
    let pts: Vec<(f64, f64)> = plot.points.iter().copied().filter(|(x, y)| x.is_finite() && y.is_finite()).collect();
    if pts.is_empty() {
        return None;
    }
    let log_x = pts.iter().all(|p| p.0 > 0.0);
    let log_y = plot.target > 0.0 && pts.iter().all(|p| p.1 > 0.0);
    let ys = pts.iter().map(|p| p.1).chain(plot.target.is_finite().then_some(plot.target));
    let ax = Axis::fit(pts.iter().map(|p| p.0), log_x);
    let ay = Axis::fit(ys, log_y);
    let pw = W - LEFT - RIGHT;
    let ph = H - TOP - BOTTOM;
    let sx = |x: f64| LEFT + ax.frac(x) * pw;
    let sy = |y: f64| TOP + (1.0 - ay.frac(y)) * ph;

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#);
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="24" font-size="16" text-anchor="middle">{}</text>"#, W / 2.0, escape(&plot.title));
    let _ = writeln!(
        s,
        r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    for i in 0..=4 {
        let f = i as f64 / 4.0;
        let x = LEFT + f * pw;
        let y = TOP + (1.0 - f) * ph;
        let _ = writeln!(s, r#"<text x="{x:.1}" y="{:.1}" font-size="11" text-anchor="middle">{:.3e}</text>"#, H - BOTTOM + 16.0, ax.label(f));
        let _ = writeln!(s, r#"<text x="{:.1}" y="{y:.1}" font-size="11" text-anchor="end">{:.3e}</text>"#, LEFT - 6.0, ay.label(f));
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" font-size="13" text-anchor="middle">{}</text>"#, LEFT + pw / 2.0, H - 10.0, escape(&plot.x_label));
    let _ = writeln!(
        s,
        r#"<text x="16" y="{}" font-size="13" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0,
        escape(&plot.y_label)
    );
    if plot.target.is_finite() && (!log_y || plot.target > 0.0) {
        let y = sy(plot.target);
        let _ = writeln!(s, r#"<line x1="{LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="red" stroke-dasharray="6 4"/>"#, LEFT + pw);
    }
    let path: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
    if pts.len() > 1 {
        let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="steelblue" stroke-width="1.5"/>"#, path.join(" "));
    }
    for &(x, y) in &pts {
        let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="steelblue"/>"#, sx(x), sy(y));
    }
    s.push_str("</svg>\n");
    Some(s)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
