//! Minimal deterministic SVG ribbon plots on a log-scaled sample-size axis.

use std::fmt::Write;

use super::format::fmt_g_precision;
use super::RibbonBand;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 160.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;

pub const PALETTE: [&str; 4] = ["#4a90d9", "#555555", "#c0392b", "#27ae60"];

#[derive(Debug, Clone)]
pub struct Series<'a> {
    pub label: String,
    pub color: &'static str,
    /// Bands sorted by `n`.
    pub bands: Vec<&'a RibbonBand>,
}

#[derive(Debug, Clone)]
pub struct Plot<'a> {
    pub title: String,
    pub y_label: String,
    /// Fixed vertical range; derived from the data when `None`.
    pub y_range: Option<(f64, f64)>,
    pub series: Vec<Series<'a>>,
}

struct Frame {
    lx0: f64,
    lx1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn x(&self, n: f64) -> f64 {
        let t = if self.lx1 > self.lx0 {
            (n.log10() - self.lx0) / (self.lx1 - self.lx0)
        } else {
            0.5
        };
        LEFT + t * (WIDTH - LEFT - RIGHT)
    }

    fn y(&self, v: f64) -> f64 {
        let t = (v.clamp(self.y0, self.y1) - self.y0) / (self.y1 - self.y0);
        HEIGHT - BOTTOM - t * (HEIGHT - TOP - BOTTOM)
    }
}

fn points(frame: &Frame, pts: impl Iterator<Item = (f64, f64)>) -> String {
    let mut s = String::new();
    for (i, (n, v)) in pts.enumerate() {
        if i > 0 {
            s.push(' ');
        }
        write!(s, "{:.2},{:.2}", frame.x(n), frame.y(v)).unwrap();
    }
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Renders the plot: for each series an outer min–max band, an inner
/// q25–q75 band and the median polyline.
pub fn render(plot: &Plot) -> String {
    let bands = plot.series.iter().flat_map(|s| s.bands.iter());
    let (mut nmin, mut nmax) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut vmin, mut vmax) = (f64::INFINITY, f64::NEG_INFINITY);
    for b in bands {
        nmin = nmin.min(b.n as f64);
        nmax = nmax.max(b.n as f64);
        vmin = vmin.min(b.min);
        vmax = vmax.max(b.max);
    }
    if !nmin.is_finite() {
        (nmin, nmax, vmin, vmax) = (1.0, 10.0, 0.0, 1.0);
    }
    let (y0, y1) = plot.y_range.unwrap_or_else(|| {
        let pad = if vmax > vmin { 0.05 * (vmax - vmin) } else { 0.5 };
        (vmin - pad, vmax + pad)
    });
    let frame = Frame {
        lx0: nmin.log10(),
        lx1: nmax.log10(),
        y0,
        y1,
    };

    let mut out = String::new();
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
    )
    .unwrap();
    writeln!(out, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#).unwrap();
    writeln!(
        out,
        r#"<text x="{:.2}" y="22" text-anchor="middle" font-size="13">{}</text>"#,
        (LEFT + WIDTH - RIGHT) / 2.0,
        escape(&plot.title)
    )
    .unwrap();

    // Axes
    let (bx, by) = (LEFT, HEIGHT - BOTTOM);
    let (ex, ey) = (WIDTH - RIGHT, TOP);
    writeln!(
        out,
        r#"<path d="M{bx:.2},{ey:.2} L{bx:.2},{by:.2} L{ex:.2},{by:.2}" fill="none" stroke="black"/>"#
    )
    .unwrap();
    let mut decade = nmin.log10().floor() as i32;
    while (decade as f64) <= nmax.log10() + 1e-9 {
        let n = 10f64.powi(decade);
        if n >= nmin * (1.0 - 1e-9) {
            let x = frame.x(n);
            writeln!(
                out,
                r#"<line x1="{x:.2}" y1="{by:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
                by + 5.0,
                by + 18.0,
                fmt_g_precision(n, 6)
            )
            .unwrap();
        }
        decade += 1;
    }
    for i in 0..=4 {
        let v = y0 + (y1 - y0) * i as f64 / 4.0;
        let y = frame.y(v);
        writeln!(
            out,
            r#"<line x1="{:.2}" y1="{y:.2}" x2="{bx:.2}" y2="{y:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            bx - 5.0,
            bx - 8.0,
            y + 4.0,
            fmt_g_precision(v, 3)
        )
        .unwrap();
    }
    writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">n (log scale)</text>"#,
        (LEFT + WIDTH - RIGHT) / 2.0,
        HEIGHT - 12.0
    )
    .unwrap();
    writeln!(
        out,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">{}</text>"#,
        (TOP + HEIGHT - BOTTOM) / 2.0,
        (TOP + HEIGHT - BOTTOM) / 2.0,
        escape(&plot.y_label)
    )
    .unwrap();

    for (k, s) in plot.series.iter().enumerate() {
        let b = &s.bands;
        let n = |b: &&RibbonBand| b.n as f64;
        let outer = points(
            &frame,
            b.iter().map(|b| (n(b), b.max)).chain(b.iter().rev().map(|b| (n(b), b.min))),
        );
        let inner = points(
            &frame,
            b.iter().map(|b| (n(b), b.q75)).chain(b.iter().rev().map(|b| (n(b), b.q25))),
        );
        let median = points(&frame, b.iter().map(|b| (n(b), b.q50)));
        writeln!(out, r#"<polygon points="{outer}" fill="{}" fill-opacity="0.18" stroke="none"/>"#, s.color).unwrap();
        writeln!(out, r#"<polygon points="{inner}" fill="{}" fill-opacity="0.35" stroke="none"/>"#, s.color).unwrap();
        writeln!(out, r#"<polyline points="{median}" fill="none" stroke="{}" stroke-width="1.5"/>"#, s.color).unwrap();
        let ly = TOP + 10.0 + 18.0 * k as f64;
        writeln!(
            out,
            r#"<rect x="{:.2}" y="{:.2}" width="12" height="12" fill="{}" fill-opacity="0.5"/><text x="{:.2}" y="{:.2}">{}</text>"#,
            WIDTH - RIGHT + 12.0,
            ly - 10.0,
            s.color,
            WIDTH - RIGHT + 30.0,
            ly,
            escape(&s.label)
        )
        .unwrap();
    }
    out.push_str("</svg>\n");
    out
}
