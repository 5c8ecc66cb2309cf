//! Minimal standalone SVG line charts for power curves.

use std::fmt::Write;

use super::power::{PowerTable, TestName};

/// Colors for successive δ (or c) values.
pub const PALETTE: [&str; 6] = ["#1f4e9c", "#2e8b3a", "#8b5a2b", "#c0392b", "#7b3f9e", "#444444"];

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub color: String,
    pub dashed: bool,
    pub points: Vec<(f64, f64)>,
}

const W: f64 = 640.0;
const H: f64 = 420.0;
const LEFT: f64 = 60.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 50.0;

fn ticks(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect()
}

/// Line chart with y fixed to `[0, 1]`.
pub fn line_chart(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let xs = series.iter().flat_map(|s| s.points.iter().map(|p| p.0));
    let (mut x_lo, mut x_hi) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
    if !x_lo.is_finite() {
        (x_lo, x_hi) = (0.0, 1.0);
    }
    if x_hi <= x_lo {
        x_hi = x_lo + 1.0;
    }
    let pw = W - LEFT - RIGHT;
    let ph = H - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - x_lo) / (x_hi - x_lo) * pw;
    let sy = |y: f64| TOP + (1.0 - y.clamp(0.0, 1.0)) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="18" text-anchor="middle" font-size="14">{}</text>"#, LEFT + pw / 2.0, escape(title));
    let _ = writeln!(
        s,
        r##"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="#000"/>"##
    );
    for y in ticks(0.0, 1.0, 5) {
        let py = sy(y);
        let _ = writeln!(
            s,
            r##"<line x1="{LEFT}" y1="{py:.2}" x2="{:.2}" y2="{py:.2}" stroke="#ddd"/><text x="{:.2}" y="{:.2}" text-anchor="end">{y:.1}</text>"##,
            LEFT + pw,
            LEFT - 6.0,
            py + 4.0
        );
    }
    for x in ticks(x_lo, x_hi, 5) {
        let px = sx(x);
        let _ = writeln!(
            s,
            r#"<text x="{px:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            TOP + ph + 18.0,
            fmt_tick(x)
        );
    }
    let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, LEFT + pw / 2.0, H - 10.0, escape(x_label));
    let _ = writeln!(
        s,
        r#"<text transform="translate(16 {:.2}) rotate(-90)" text-anchor="middle">{}</text>"#,
        TOP + ph / 2.0,
        escape(y_label)
    );
    for (i, ser) in series.iter().enumerate() {
        let pts: Vec<String> = ser.points.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
        let dash = if ser.dashed { r#" stroke-dasharray="6 4""# } else { "" };
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="1.8"{dash}/>"#,
            pts.join(" "),
            ser.color
        );
        let ly = TOP + 10.0 + 18.0 * i as f64;
        let lx = W - RIGHT + 12.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{}" stroke-width="1.8"{dash}/><text x="{}" y="{}">{}</text>"#,
            lx + 26.0,
            ser.color,
            lx + 32.0,
            ly + 4.0,
            escape(&ser.label)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn fmt_tick(x: f64) -> String {
    if (x - x.round()).abs() < 1e-9 {
        format!("{}", x.round())
    } else {
        format!("{x:.1}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Rejection rate against `c`, one color per δ, WZ solid and EMW dashed.
pub fn power_vs_c(table: &PowerTable, title: &str) -> String {
    let mut deltas: Vec<f64> = table.rows.iter().filter_map(|r| r.delta).collect();
    deltas.sort_by(f64::total_cmp);
    deltas.dedup();
    let mut series = Vec::new();
    for (i, &d) in deltas.iter().enumerate() {
        for test in [TestName::Wz, TestName::Emw] {
            let points = table
                .rows
                .iter()
                .filter(|r| r.test == test && r.delta == Some(d))
                .map(|r| (r.c, r.rejection_rate))
                .collect();
            series.push(Series {
                label: format!("{test} δ={d}"),
                color: PALETTE[i % PALETTE.len()].to_string(),
                dashed: test == TestName::Emw,
                points,
            });
        }
    }
    line_chart(title, "c", "rejection rate", &series)
}

/// Rejection rate against `b`, one color per `c`.
pub fn power_vs_b(table: &PowerTable, title: &str) -> String {
    let mut cs: Vec<f64> = table.rows.iter().map(|r| r.c).collect();
    cs.sort_by(|a, b| b.total_cmp(a));
    cs.dedup();
    let mut series = Vec::new();
    for (i, &c) in cs.iter().enumerate() {
        for test in [TestName::Wz, TestName::Emw] {
            let points = table
                .rows
                .iter()
                .filter(|r| r.test == test && r.c == c)
                .map(|r| (r.b, r.rejection_rate))
                .collect();
            series.push(Series {
                label: format!("{test} c={c}"),
                color: PALETTE[i % PALETTE.len()].to_string(),
                dashed: test == TestName::Emw,
                points,
            });
        }
    }
    line_chart(title, "b", "rejection rate", &series)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chart_has_one_polyline_per_series() {
        let s = vec![
            Series {
                label: "a<b".into(),
                color: PALETTE[0].into(),
                dashed: false,
                points: vec![(0.0, 0.1), (-10.0, 0.5)],
            },
            Series {
                label: "c".into(),
                color: PALETTE[1].into(),
                dashed: true,
                points: vec![(0.0, 0.2), (-10.0, 0.6)],
            },
        ];
        let svg = line_chart("t", "c", "p", &s);
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert_eq!(svg.matches("stroke-dasharray").count(), 2);
        assert!(svg.contains("a&lt;b"));
        assert!(svg.trim_end().ends_with("</svg>"));
    }
}
