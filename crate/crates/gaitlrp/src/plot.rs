//! Static SVG figures: mean signal with a ±1 SD band whose fill color encodes
//! mean relevance on a diverging scale (blue = against, yellow = in favor,
//! neutral gray at zero).

use std::fmt::Write as _;

pub const NEGATIVE_COLOR: (u8, u8, u8) = (33, 102, 172); // blue
pub const NEUTRAL_COLOR: (u8, u8, u8) = (247, 247, 247); // light gray
pub const POSITIVE_COLOR: (u8, u8, u8) = (253, 209, 7); // yellow

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 360.0;
const MARGIN: f64 = 40.0;

fn lerp_channel(a: u8, b: u8, t: f64) -> u8 {
    (a as f64 + (b as f64 - a as f64) * t).round() as u8
}

/// Diverging color for a relevance value scaled into [-1, 1].
pub fn diverging_color(scaled: f64) -> (u8, u8, u8) {
    let s = scaled.clamp(-1.0, 1.0);
    if s >= 0.0 {
        (
            lerp_channel(NEUTRAL_COLOR.0, POSITIVE_COLOR.0, s),
            lerp_channel(NEUTRAL_COLOR.1, POSITIVE_COLOR.1, s),
            lerp_channel(NEUTRAL_COLOR.2, POSITIVE_COLOR.2, s),
        )
    } else {
        (
            lerp_channel(NEUTRAL_COLOR.0, NEGATIVE_COLOR.0, -s),
            lerp_channel(NEUTRAL_COLOR.1, NEGATIVE_COLOR.1, -s),
            lerp_channel(NEUTRAL_COLOR.2, NEGATIVE_COLOR.2, -s),
        )
    }
}

fn hex(c: (u8, u8, u8)) -> String {
    format!("#{:02x}{:02x}{:02x}", c.0, c.1, c.2)
}

struct Frame {
    x0: f64,
    y_lo: f64,
    y_hi: f64,
    n: usize,
}

impl Frame {
    fn new(lo: f64, hi: f64, n: usize) -> Frame {
        let pad = 0.05 * (hi - lo).max(1e-9);
        Frame {
            x0: MARGIN,
            y_lo: lo - pad,
            y_hi: hi + pad,
            n,
        }
    }

    fn x(&self, i: usize) -> f64 {
        self.x0 + (WIDTH - 2.0 * MARGIN) * i as f64 / (self.n - 1).max(1) as f64
    }

    fn y(&self, v: f64) -> f64 {
        let t = (v - self.y_lo) / (self.y_hi - self.y_lo);
        HEIGHT - MARGIN - t * (HEIGHT - 2.0 * MARGIN)
    }
}

fn svg_open(out: &mut String, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(
        out,
        r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="14">{}</text>"#,
        MARGIN,
        MARGIN * 0.6,
        title
    );
}

fn polyline(out: &mut String, frame: &Frame, curve: &[f64], color: &str, width: f64) {
    let points: Vec<String> = curve
        .iter()
        .enumerate()
        .map(|(i, &v)| format!("{:.2},{:.2}", frame.x(i), frame.y(v)))
        .collect();
    let _ = writeln!(
        out,
        r#"<polyline fill="none" stroke="{}" stroke-width="{}" points="{}"/>"#,
        color,
        width,
        points.join(" ")
    );
}

/// One class/channel panel: ±1 SD band per time segment colored by mean
/// relevance, mean-signal line on top. Colors are scaled by the panel's
/// maximum absolute relevance; an all-zero panel renders the neutral color.
pub fn class_panel_svg(mean: &[f64], sd: &[f64], relevance: &[f64], title: &str) -> String {
    let lo = mean
        .iter()
        .zip(sd)
        .map(|(m, s)| m - s)
        .fold(f64::INFINITY, f64::min);
    let hi = mean
        .iter()
        .zip(sd)
        .map(|(m, s)| m + s)
        .fold(f64::NEG_INFINITY, f64::max);
    let frame = Frame::new(lo, hi, mean.len());
    let max_abs = relevance.iter().fold(0.0f64, |a, r| a.max(r.abs()));

    let mut out = String::new();
    svg_open(&mut out, title);
    for i in 0..mean.len().saturating_sub(1) {
        let scaled = if max_abs == 0.0 { 0.0 } else { relevance[i] / max_abs };
        let color = hex(diverging_color(scaled));
        let _ = writeln!(
            out,
            r#"<polygon fill="{}" stroke="none" points="{:.2},{:.2} {:.2},{:.2} {:.2},{:.2} {:.2},{:.2}"/>"#,
            color,
            frame.x(i),
            frame.y(mean[i] - sd[i]),
            frame.x(i + 1),
            frame.y(mean[i + 1] - sd[i + 1]),
            frame.x(i + 1),
            frame.y(mean[i + 1] + sd[i + 1]),
            frame.x(i),
            frame.y(mean[i] + sd[i]),
        );
    }
    polyline(&mut out, &frame, mean, "#333333", 1.5);
    out.push_str("</svg>\n");
    out
}

/// Total-relevance panel: one labeled line per channel.
pub fn total_relevance_svg(curves: &[Vec<f64>], labels: &[String]) -> String {
    let palette = ["#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02"];
    let hi = curves
        .iter()
        .flatten()
        .fold(f64::NEG_INFINITY, |a, &v| a.max(v))
        .max(1e-12);
    let n = curves.first().map(|c| c.len()).unwrap_or(0);
    let frame = Frame::new(0.0, hi, n);

    let mut out = String::new();
    svg_open(&mut out, "total relevance");
    for (ch, curve) in curves.iter().enumerate() {
        let color = palette[ch % palette.len()];
        polyline(&mut out, &frame, curve, color, 1.5);
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11" fill="{}">{}</text>"#,
            WIDTH - MARGIN * 2.5,
            MARGIN + 14.0 * ch as f64,
            color,
            labels.get(ch).map(String::as_str).unwrap_or("")
        );
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scale_endpoints_and_midpoint() {
        assert_eq!(diverging_color(1.0), POSITIVE_COLOR);
        assert_eq!(diverging_color(-1.0), NEGATIVE_COLOR);
        assert_eq!(diverging_color(0.0), NEUTRAL_COLOR);
    }

    #[test]
    fn zero_relevance_renders_neutral_band() {
        let mean = vec![0.0, 1.0, 0.0];
        let sd = vec![0.1, 0.1, 0.1];
        let rel = vec![0.0, 0.0, 0.0];
        let svg = class_panel_svg(&mean, &sd, &rel, "t");
        assert!(svg.contains(&hex(NEUTRAL_COLOR)));
        assert!(!svg.contains(&hex(POSITIVE_COLOR)));
    }

    #[test]
    fn max_relevance_segment_gets_positive_endpoint() {
        let mean = vec![0.0, 1.0, 0.0];
        let sd = vec![0.1, 0.1, 0.1];
        let rel = vec![0.5, 0.2, 0.0];
        let svg = class_panel_svg(&mean, &sd, &rel, "t");
        // segment at the max-relevance time point is drawn in the scale's
        // positive endpoint color
        assert!(svg.contains(&hex(POSITIVE_COLOR)));
    }

    #[test]
    fn total_panel_draws_each_channel() {
        let curves = vec![vec![0.0, 0.5, 0.2]; 6];
        let labels: Vec<String> = (0..6).map(|i| format!("ch{i}")).collect();
        let svg = total_relevance_svg(&curves, &labels);
        assert_eq!(svg.matches("<polyline").count(), 6);
    }
}
