//! SVG rendering of a certificate.
//!
//! The viewBox is the outer rectangle and a single group flips the y axis,
//! so every `<rect>` carries the certificate coordinates verbatim.

use std::fmt::Write;

use crate::certificate::Certificate;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvgOptions {
    /// Pixel width of the longer side.
    pub pixels: u32,
    pub residuals: bool,
    /// Stroke width in screen pixels.
    pub stroke: f64,
}

impl Default for SvgOptions {
    fn default() -> Self {
        Self {
            pixels: 800,
            residuals: true,
            stroke: 0.5,
        }
    }
}

/// Colour of square `n` in `[lo, hi)`: blue for the first index, red for
/// the last.
pub fn ramp(n: u64, lo: u64, hi: u64) -> String {
    let span = hi.saturating_sub(lo).saturating_sub(1).max(1) as f64;
    let f = (n.saturating_sub(lo) as f64 / span).clamp(0.0, 1.0);
    format!("hsl({:.1},70%,55%)", 230.0 * (1.0 - f))
}

pub fn render(cert: &Certificate, opts: &SvgOptions) -> String {
    let o = cert.outer;
    let (w, h) = (o.dx(), o.dy());
    let longer = w.max(h);
    let (pw, ph) = (
        (f64::from(opts.pixels) * w / longer).round().max(1.0),
        (f64::from(opts.pixels) * h / longer).round().max(1.0),
    );
    let mut s = String::with_capacity(120 * (cert.squares.len() + cert.residuals.len()) + 512);
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{pw}" height="{ph}" viewBox="{} {} {} {}">"#,
        o.x0, o.y0, w, h
    );
    let _ = writeln!(
        s,
        r#"<g transform="matrix(1 0 0 -1 0 {})" stroke-width="{}" vector-effect="non-scaling-stroke">"#,
        o.y0 + o.y1,
        opts.stroke
    );
    let _ = writeln!(
        s,
        r##"<rect class="outer" x="{}" y="{}" width="{}" height="{}" fill="none" stroke="#000" vector-effect="non-scaling-stroke"/>"##,
        o.x0, o.y0, w, h
    );
    let (lo, hi) = cert.n_range;
    for sq in &cert.squares {
        let _ = writeln!(
            s,
            r#"<rect class="square" data-n="{}" x="{}" y="{}" width="{}" height="{}" fill="{}"/>"#,
            sq.n,
            sq.x,
            sq.y,
            sq.side,
            sq.side,
            ramp(sq.n, lo, hi)
        );
    }
    if opts.residuals {
        for r in &cert.residuals {
            let tag = serde_json::to_value(r.tag)
                .ok()
                .and_then(|v| v.as_str().map(str::to_owned))
                .unwrap_or_default();
            let _ = writeln!(
                s,
                r##"<rect class="residual" data-tag="{tag}" x="{}" y="{}" width="{}" height="{}" fill="none" stroke="#333" vector-effect="non-scaling-stroke"/>"##,
                r.x0,
                r.y0,
                r.x1 - r.x0,
                r.y1 - r.y0
            );
        }
    }
    s.push_str("</g>\n</svg>\n");
    s
}
