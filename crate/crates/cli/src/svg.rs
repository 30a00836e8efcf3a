//! Self-contained SVG: one panel per window, data with error bars and the
//! fitted sinusoid.

use std::fmt::Write as _;

use cqed_core::{FitReport, RunDataset};

const PANEL_W: f64 = 260.0;
const PANEL_H: f64 = 220.0;
const MARGIN: f64 = 40.0;

pub fn beat_plot(data: &RunDataset, fit: Option<&FitReport>, delta: f64) -> String {
    let ids = data.window_ids();
    let width = MARGIN + ids.len().max(1) as f64 * (PANEL_W + MARGIN);
    let height = PANEL_H + 2.0 * MARGIN;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);

    for (k, &id) in ids.iter().enumerate() {
        let pts: Vec<_> = data.points.iter().filter(|p| p.window == id && p.p_e.is_finite()).collect();
        let x0 = MARGIN + k as f64 * (PANEL_W + MARGIN);
        let y0 = MARGIN;
        let (t_lo, t_hi) = pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.t), b.max(p.t)));
        if !t_lo.is_finite() {
            continue;
        }
        let span = (t_hi - t_lo).max(1e-9);
        let px = |t: f64| x0 + (t - t_lo) / span * PANEL_W;
        let py = |p: f64| y0 + (1.0 - p.clamp(-0.05, 1.05)) * PANEL_H;

        let _ = writeln!(
            s,
            r#"<rect x="{x0:.1}" y="{y0:.1}" width="{PANEL_W}" height="{PANEL_H}" fill="none" stroke="black"/>"#
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">T (μs), window {id}</text>"#,
            x0 + PANEL_W / 2.0,
            y0 + PANEL_H + 28.0
        );
        for (t, anchor) in [(t_lo, "start"), (t_hi, "end")] {
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="{anchor}">{:.0}</text>"#,
                px(t),
                y0 + PANEL_H + 14.0,
                t * 1e6
            );
        }
        if k == 0 {
            for p in [0.0, 0.5, 1.0] {
                let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{p}</text>"#, x0 - 4.0, py(p) + 4.0);
            }
        }
        for p in &pts {
            let (x, y) = (px(p.t), py(p.p_e));
            if p.stderr.is_finite() {
                let _ = writeln!(
                    s,
                    r##"<line x1="{x:.1}" y1="{:.1}" x2="{x:.1}" y2="{:.1}" stroke="#888"/>"##,
                    py(p.p_e - p.stderr),
                    py(p.p_e + p.stderr)
                );
            }
            let _ = writeln!(s, r##"<circle cx="{x:.1}" cy="{y:.1}" r="2" fill="#1f4e9c"/>"##);
        }
        if let Some(fit) = fit {
            let curve: Vec<String> = (0..=200)
                .filter_map(|j| {
                    let t = t_lo + span * j as f64 / 200.0;
                    fit.model(id, t, delta).map(|p| format!("{:.1},{:.1}", px(t), py(p)))
                })
                .collect();
            if !curve.is_empty() {
                let _ = writeln!(
                    s,
                    r##"<polyline points="{}" fill="none" stroke="#c0392b" stroke-width="1.5"/>"##,
                    curve.join(" ")
                );
            }
        }
    }
    s.push_str("</svg>\n");
    s
}
