//! Minimal static line charts.

use std::fmt::Write;

const W: f64 = 640.0;
const H: f64 = 400.0;
const PAD: f64 = 50.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

/// One named series of y values at x = 0, 1, 2, ...
pub struct Series<'a> {
    pub name: &'a str,
    pub values: &'a [f64],
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Render `series` as polylines sharing one pair of axes.
pub fn line_chart(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let x_max = series.iter().map(|s| s.values.len().saturating_sub(1)).max().unwrap_or(0).max(1) as f64;
    let y_max = series.iter().flat_map(|s| s.values.iter().copied()).fold(0.0f64, f64::max).max(1e-9);
    let sx = |x: f64| PAD + x / x_max * (W - 2.0 * PAD);
    let sy = |y: f64| H - PAD - y / y_max * (H - 2.0 * PAD);

    let mut out = String::new();
    let _ = writeln!(out, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#, W / 2.0, esc(title));
    let _ = writeln!(
        out,
        r#"<path d="M{PAD},{PAD} V{} H{}" fill="none" stroke="black"/>"#,
        H - PAD,
        W - PAD
    );
    let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, W / 2.0, H - 12.0, esc(x_label));
    let _ = writeln!(
        out,
        r#"<text x="14" y="{}" text-anchor="middle" transform="rotate(-90 14 {})">{}</text>"#,
        H / 2.0,
        H / 2.0,
        esc(y_label)
    );
    for k in 0..=4 {
        let y = y_max * k as f64 / 4.0;
        let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="end">{:.1}</text>"#, PAD - 4.0, sy(y) + 4.0, y);
        let x = x_max * k as f64 / 4.0;
        let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="middle">{:.0}</text>"#, sx(x), H - PAD + 16.0, x);
    }
    for (i, s) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let pts: Vec<String> =
            s.values.iter().enumerate().map(|(x, &y)| format!("{:.1},{:.1}", sx(x as f64), sy(y))).collect();
        let _ = writeln!(out, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#, pts.join(" "));
        let ly = PAD + 16.0 * i as f64;
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{ly}" fill="{color}" text-anchor="end">{}</text>"#,
            W - PAD,
            esc(s.name)
        );
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_each_series() {
        let a = [3.0, 2.0, 0.0];
        let b = [3.0, 1.0];
        let svg = line_chart("CP", "iteration", "CP", &[Series { name: "lns2", values: &a }, Series { name: "x<y", values: &b }]);
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains("x&lt;y"));
        assert!(svg.ends_with("</svg>\n"));
    }
}
