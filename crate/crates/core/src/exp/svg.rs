//! Minimal SVG line charts: axes, series, legend. No dependencies.

pub struct Series {
    pub label: String,
    /// (x, y) points, plotted in order.
    pub points: Vec<(f64, f64)>,
}

const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf",
];

/// Render a line chart. `y_range` clamps the vertical axis (useful for
/// error rates in [0, 1]); pass `None` to fit.
pub fn line_chart(
    title: &str,
    x_label: &str,
    y_label: &str,
    series: &[Series],
    y_range: Option<(f64, f64)>,
) -> String {
    let (w, h) = (640.0, 420.0);
    let (ml, mr, mt, mb) = (60.0, 20.0, 36.0, 48.0);
    let plot_w = w - ml - mr;
    let plot_h = h - mt - mb;

    let xs: Vec<f64> = series
        .iter()
        .flat_map(|s| s.points.iter().map(|p| p.0))
        .collect();
    let ys: Vec<f64> = series
        .iter()
        .flat_map(|s| s.points.iter().map(|p| p.1))
        .collect();
    let (x0, x1) = bounds(&xs, (0.0, 1.0));
    let (y0, y1) = y_range.unwrap_or_else(|| bounds(&ys, (0.0, 1.0)));

    let sx = move |x: f64| ml + (x - x0) / (x1 - x0).max(1e-12) * plot_w;
    let sy = move |y: f64| mt + plot_h - (y - y0) / (y1 - y0).max(1e-12) * plot_h;

    let mut out = String::new();
    out.push_str(&format!(
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    ));
    out.push_str(r#"<rect width="100%" height="100%" fill="white"/>"#);
    out.push_str(&format!(
        r#"<text x="{:.1}" y="22" font-family="sans-serif" font-size="15" text-anchor="middle">{}</text>"#,
        w / 2.0,
        escape(title)
    ));
    // axes
    out.push_str(&format!(
        r#"<line x1="{ml}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="black"/>"#,
        mt + plot_h,
        ml + plot_w,
        mt + plot_h
    ));
    out.push_str(&format!(
        r#"<line x1="{ml}" y1="{mt}" x2="{ml}" y2="{:.1}" stroke="black"/>"#,
        mt + plot_h
    ));
    // ticks: 5 per axis
    for i in 0..=4 {
        let fx = x0 + (x1 - x0) * i as f64 / 4.0;
        let px = sx(fx);
        out.push_str(&format!(
            r#"<line x1="{px:.1}" y1="{:.1}" x2="{px:.1}" y2="{:.1}" stroke="black"/>"#,
            mt + plot_h,
            mt + plot_h + 5.0
        ));
        out.push_str(&format!(
            r#"<text x="{px:.1}" y="{:.1}" font-family="sans-serif" font-size="11" text-anchor="middle">{}</text>"#,
            mt + plot_h + 18.0,
            trim_num(fx)
        ));
        let fy = y0 + (y1 - y0) * i as f64 / 4.0;
        let py = sy(fy);
        out.push_str(&format!(
            r#"<line x1="{:.1}" y1="{py:.1}" x2="{ml}" y2="{py:.1}" stroke="black"/>"#,
            ml - 5.0
        ));
        out.push_str(&format!(
            r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="11" text-anchor="end">{}</text>"#,
            ml - 8.0,
            py + 4.0,
            trim_num(fy)
        ));
    }
    out.push_str(&format!(
        r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="12" text-anchor="middle">{}</text>"#,
        ml + plot_w / 2.0,
        h - 10.0,
        escape(x_label)
    ));
    out.push_str(&format!(
        r#"<text x="16" y="{:.1}" font-family="sans-serif" font-size="12" text-anchor="middle" transform="rotate(-90 16 {:.1})">{}</text>"#,
        mt + plot_h / 2.0,
        mt + plot_h / 2.0,
        escape(y_label)
    ));
    // series
    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts: Vec<String> = s
            .points
            .iter()
            .map(|&(x, y)| format!("{:.1},{:.1}", sx(x), sy(y)))
            .collect();
        out.push_str(&format!(
            r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
            pts.join(" ")
        ));
        for &(x, y) in &s.points {
            out.push_str(&format!(
                r#"<circle cx="{:.1}" cy="{:.1}" r="3" fill="{color}"/>"#,
                sx(x),
                sy(y)
            ));
        }
        // legend
        let ly = mt + 8.0 + 18.0 * i as f64;
        out.push_str(&format!(
            r#"<line x1="{:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="2"/>"#,
            ml + plot_w - 150.0,
            ml + plot_w - 126.0
        ));
        out.push_str(&format!(
            r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="12">{}</text>"#,
            ml + plot_w - 120.0,
            ly + 4.0,
            escape(&s.label)
        ));
    }
    out.push_str("</svg>\n");
    out
}

fn bounds(v: &[f64], fallback: (f64, f64)) -> (f64, f64) {
    let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !lo.is_finite() || !hi.is_finite() {
        return fallback;
    }
    if (hi - lo).abs() < 1e-12 {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

fn trim_num(v: f64) -> String {
    if (v - v.round()).abs() < 1e-9 {
        format!("{}", v.round() as i64)
    } else {
        format!("{v:.2}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
