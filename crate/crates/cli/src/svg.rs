//! Hand-emitted SVG: heat maps, ROC curves and score scatters.
//!
//! Heat maps draw one unit square per cell with a fixed diverging ramp:
//! `#2166ac` (most negative) through white (zero) to `#b2182b` (most
//! positive), scaled by the largest absolute value in the plane.

use std::fmt::Write;

use prnu_core::Plane;

const NEG: [f64; 3] = [33.0, 102.0, 172.0];
const POS: [f64; 3] = [178.0, 24.0, 43.0];
const PALETTE: [&str; 8] = [
    "#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02", "#a6761d", "#666666",
];

/// Ramp color of `v` given the largest magnitude `scale`.
pub fn ramp(v: f64, scale: f64) -> String {
    let t = if scale > 0.0 && v.is_finite() {
        (v / scale).clamp(-1.0, 1.0)
    } else {
        0.0
    };
    let end = if t < 0.0 { NEG } else { POS };
    let a = t.abs();
    let c = |i: usize| (255.0 + (end[i] - 255.0) * a).round() as u8;
    format!("#{:02x}{:02x}{:02x}", c(0), c(1), c(2))
}

pub fn heatmap(p: &Plane) -> String {
    let scale = p
        .values()
        .iter()
        .filter(|v| v.is_finite())
        .fold(0.0f64, |m, v| m.max(v.abs()));
    heatmap_scaled(p, scale)
}

/// Heat map with an explicit ramp scale; larger magnitudes saturate.
pub fn heatmap_scaled(p: &Plane, scale: f64) -> String {
    let (h, w) = p.dims();
    let mut s = String::with_capacity(h * w * 56 + 200);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" shape-rendering="crispEdges">"#
    );
    for r in 0..h {
        for c in 0..w {
            let _ = writeln!(
                s,
                r#"<rect x="{c}" y="{r}" width="1" height="1" fill="{}"/>"#,
                ramp(p.get(r, c), scale)
            );
        }
    }
    s.push_str("</svg>\n");
    s
}

const SIZE: f64 = 400.0;
const MARGIN: f64 = 40.0;

fn frame(title: &str) -> String {
    let total = SIZE + 2.0 * MARGIN;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{total}" height="{total}" viewBox="0 0 {total} {total}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        s,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{SIZE}" height="{SIZE}" fill="none" stroke="black"/>"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{MARGIN}" y="{}">{title}</text>"#,
        MARGIN - 10.0
    );
    s
}

/// ROC curve from `(fpr, tpr)` points in curve order.
pub fn roc_curve(points: &[(f64, f64)], auc: f64) -> String {
    let mut s = frame(&format!("ROC (AUC {auc:.4})"));
    let xy = |f: f64, t: f64| (MARGIN + f * SIZE, MARGIN + (1.0 - t) * SIZE);
    let (x0, y0) = xy(0.0, 0.0);
    let (x1, y1) = xy(1.0, 1.0);
    let _ = writeln!(
        s,
        r#"<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y1}" stroke="gray" stroke-dasharray="4"/>"#
    );
    let pts: Vec<String> = points
        .iter()
        .map(|&(f, t)| {
            let (x, y) = xy(f, t);
            format!("{x:.3},{y:.3}")
        })
        .collect();
    let _ = writeln!(
        s,
        r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="2"/>"#,
        pts.join(" "),
        PALETTE[0]
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}">FPR</text>"#,
        MARGIN + SIZE / 2.0,
        MARGIN + SIZE + 30.0
    );
    let _ = writeln!(s, r#"<text x="5" y="{}">TPR</text>"#, MARGIN + SIZE / 2.0);
    s.push_str("</svg>\n");
    s
}

fn symlog(v: f64) -> f64 {
    v.signum() * (1.0 + v.abs()).log10()
}

/// Scores on a signed log axis, one color per group, with a line at `tau`.
pub fn scatter(points: &[(String, f64)], tau: f64) -> String {
    let mut groups: Vec<&str> = Vec::new();
    for (g, _) in points {
        if !groups.contains(&g.as_str()) {
            groups.push(g);
        }
    }
    let ys: Vec<f64> = points
        .iter()
        .map(|p| symlog(p.1))
        .chain([symlog(tau), 0.0])
        .collect();
    let lo = ys.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = ys.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = if hi > lo { hi - lo } else { 1.0 };
    let y = |v: f64| MARGIN + (1.0 - (symlog(v) - lo) / span) * SIZE;
    let n = points.len().max(1) as f64;

    let mut s = frame("PCE by group (signed log scale)");
    let ty = y(tau);
    let _ = writeln!(
        s,
        r#"<line x1="{MARGIN}" y1="{ty:.3}" x2="{}" y2="{ty:.3}" stroke="gray" stroke-dasharray="4"/>"#,
        MARGIN + SIZE
    );
    for (i, (g, v)) in points.iter().enumerate() {
        let k = groups.iter().position(|x| x == g).unwrap_or(0);
        let x = MARGIN + (i as f64 + 0.5) / n * SIZE;
        let _ = writeln!(
            s,
            r#"<circle cx="{x:.3}" cy="{:.3}" r="3" fill="{}"/>"#,
            y(*v),
            PALETTE[k % PALETTE.len()]
        );
    }
    for (k, g) in groups.iter().enumerate() {
        let ly = MARGIN + 15.0 + 15.0 * k as f64;
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{ly}" fill="{}">{}</text>"#,
            MARGIN + 10.0,
            PALETTE[k % PALETTE.len()],
            escape(g)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}
