use std::fmt::Write;

use crate::output::CompassRecord;

const SIZE: f64 = 320.0;
const RADIUS: f64 = 120.0;

/// Point at compass angle `deg` (counterclockwise from east) and radius `r`.
fn polar(deg: f64, r: f64) -> (f64, f64) {
    let c = SIZE / 2.0;
    let t = deg.to_radians();
    (c + r * t.cos(), c - r * t.sin())
}

fn wedge(start: f64, end: f64, r: f64) -> String {
    let c = SIZE / 2.0;
    let (x0, y0) = polar(start, r);
    let (x1, y1) = polar(end, r);
    let large = u8::from(end - start > 180.0);
    // sweep flag 0 runs counterclockwise on screen
    format!("M{c:.2},{c:.2} L{x0:.2},{y0:.2} A{r:.2},{r:.2} 0 {large} 0 {x1:.2},{y1:.2} Z")
}

fn arrow(out: &mut String, deg: f64, len: f64, color: &str, width: f64) {
    let c = SIZE / 2.0;
    let (x, y) = polar(deg, len);
    let (lx, ly) = polar(deg + 160.0, 10.0);
    let (rx, ry) = polar(deg - 160.0, 10.0);
    let _ = writeln!(
        out,
        r#"<line x1="{c:.2}" y1="{c:.2}" x2="{x:.2}" y2="{y:.2}" stroke="{color}" stroke-width="{width}"/>"#
    );
    let _ = writeln!(
        out,
        r#"<polygon points="{x:.2},{y:.2} {:.2},{:.2} {:.2},{:.2}" fill="{color}"/>"#,
        x + lx - c,
        y + ly - c,
        x + rx - c,
        y + ry - c
    );
}

/// Polar bar chart of one compass: one wedge per sector scaled by its
/// probability, the true direction in red and the peak in black.
pub fn render_compass(rec: &CompassRecord) -> String {
    let k = rec.probs.len().max(1);
    let width = 360.0 / k as f64;
    let max = rec.probs.iter().copied().fold(0.0_f64, f64::max);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{h}" viewBox="0 0 {SIZE} {h}">"#,
        h = SIZE + 40.0
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let c = SIZE / 2.0;
    for frac in [0.5, 1.0] {
        let _ = writeln!(
            s,
            r##"<circle cx="{c}" cy="{c}" r="{:.2}" fill="none" stroke="#cccccc"/>"##,
            RADIUS * frac
        );
    }
    for (i, p) in rec.probs.iter().enumerate() {
        let r = if max > 0.0 { RADIUS * p / max } else { 0.0 };
        let start = i as f64 * width - width / 2.0;
        let fill = if i == rec.peak_index { "#4a78c2" } else { "#9bb7e0" };
        let _ = writeln!(
            s,
            r##"<path d="{}" fill="{fill}" stroke="#ffffff" stroke-width="1"><title>sector {i}: {p:.4}</title></path>"##,
            wedge(start, start + width, r)
        );
    }
    arrow(&mut s, rec.peak_angle_deg, RADIUS * 0.9, "black", 2.0);
    arrow(&mut s, rec.true_angle_deg, RADIUS + 14.0, "red", 2.5);
    let _ = writeln!(
        s,
        r#"<text x="{c}" y="{:.0}" font-family="sans-serif" font-size="13" text-anchor="middle">{} {}  DAE {:.1}°{}</text>"#,
        SIZE + 24.0,
        xml_escape(&rec.method),
        xml_escape(&rec.sample_id),
        rec.dae,
        if rec.degenerate { " (uniform)" } else { "" }
    );
    s.push_str("</svg>\n");
    s
}

fn xml_escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
