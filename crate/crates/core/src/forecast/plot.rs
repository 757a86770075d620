//! Plot artifacts: forecast CSV plus small dependency-free SVG charts.

use std::fmt::Write;

use super::ComparisonReport;

/// A named sequence of values for a chart.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub values: Vec<f64>,
}

const PALETTE: [&str; 6] = ["#222222", "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"];
const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 60.0;

/// `date,actual,<model>...` rows over the forecast horizon.
pub fn forecast_csv(report: &ComparisonReport) -> String {
    let mut out = String::from("date,actual");
    for m in &report.models {
        out.push(',');
        out.push_str(m.name.name());
    }
    out.push('\n');
    for (i, date) in report.dataset.test_dates.iter().enumerate() {
        let _ = write!(out, "{},{}", date.format("%Y-%m-%d"), report.dataset.actual[i]);
        for m in &report.models {
            let _ = write!(out, ",{}", m.forecast[i]);
        }
        out.push('\n');
    }
    out
}

pub fn forecast_svg(report: &ComparisonReport) -> String {
    let labels: Vec<String> = report
        .dataset
        .test_dates
        .iter()
        .map(|d| d.format("%Y-%m-%d").to_string())
        .collect();
    let mut series = vec![Series {
        name: "actual".into(),
        values: report.dataset.actual.clone(),
    }];
    series.extend(report.models.iter().map(|m| Series {
        name: m.name.to_string(),
        values: m.forecast.clone(),
    }));
    line_chart_svg("Forecast vs actual close", &labels, &series)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn value_range(series: &[Series], include_zero: bool) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for v in series.iter().flat_map(|s| &s.values).filter(|v| v.is_finite()) {
        lo = lo.min(*v);
        hi = hi.max(*v);
    }
    if include_zero {
        lo = lo.min(0.0);
        hi = hi.max(0.0);
    }
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        return (lo - 0.5, hi + 0.5);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

fn open_svg(out: &mut String, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="16">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
}

fn axes(out: &mut String, lo: f64, hi: f64) {
    let (x0, x1, y0, y1) = (MARGIN, WIDTH - MARGIN, MARGIN, HEIGHT - MARGIN);
    let _ = writeln!(
        out,
        r#"<path d="M{x0} {y0} L{x0} {y1} L{x1} {y1}" stroke="black" fill="none"/>"#
    );
    for k in 0..=4 {
        let v = lo + (hi - lo) * k as f64 / 4.0;
        let y = y1 - (y1 - y0) * k as f64 / 4.0;
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{:.2}" text-anchor="end">{v:.2}</text>"#,
            x0 - 6.0,
            y + 4.0
        );
    }
}

fn legend(out: &mut String, series: &[Series]) {
    for (i, s) in series.iter().enumerate() {
        let x = MARGIN + 130.0 * i as f64;
        let y = HEIGHT - 18.0;
        let color = PALETTE[i % PALETTE.len()];
        let _ = writeln!(
            out,
            r#"<rect x="{x}" y="{}" width="12" height="12" fill="{color}"/><text x="{}" y="{y}">{}</text>"#,
            y - 10.0,
            x + 16.0,
            escape(&s.name)
        );
    }
}

/// Line chart with one polyline per series over shared x labels.
pub fn line_chart_svg(title: &str, x_labels: &[String], series: &[Series]) -> String {
    let mut out = String::new();
    open_svg(&mut out, title);
    let (lo, hi) = value_range(series, false);
    axes(&mut out, lo, hi);
    let n = series.iter().map(|s| s.values.len()).max().unwrap_or(0).max(x_labels.len());
    let span = (n.max(2) - 1) as f64;
    let x_at = |i: usize| MARGIN + (WIDTH - 2.0 * MARGIN) * i as f64 / span;
    let y_at = |v: f64| HEIGHT - MARGIN - (HEIGHT - 2.0 * MARGIN) * (v - lo) / (hi - lo);
    if let (Some(first), Some(last)) = (x_labels.first(), x_labels.last()) {
        let _ = writeln!(
            out,
            r#"<text x="{MARGIN}" y="{}">{}</text><text x="{}" y="{}" text-anchor="end">{}</text>"#,
            HEIGHT - MARGIN + 16.0,
            escape(first),
            WIDTH - MARGIN,
            HEIGHT - MARGIN + 16.0,
            escape(last)
        );
    }
    for (i, s) in series.iter().enumerate() {
        let points: Vec<String> = s
            .values
            .iter()
            .enumerate()
            .filter(|(_, v)| v.is_finite())
            .map(|(j, &v)| format!("{:.2},{:.2}", x_at(j), y_at(v)))
            .collect();
        let _ = writeln!(
            out,
            r#"<polyline fill="none" stroke="{}" stroke-width="2" points="{}"/>"#,
            PALETTE[i % PALETTE.len()],
            points.join(" ")
        );
    }
    legend(&mut out, series);
    out.push_str("</svg>\n");
    out
}

/// Grouped bar chart: one group per label, one bar per series. Non-finite
/// values leave a gap.
pub fn bar_chart_svg(title: &str, labels: &[String], series: &[Series]) -> String {
    let mut out = String::new();
    open_svg(&mut out, title);
    let (lo, hi) = value_range(series, true);
    axes(&mut out, lo, hi);
    let groups = labels.len().max(1) as f64;
    let group_w = (WIDTH - 2.0 * MARGIN) / groups;
    let bar_w = 0.8 * group_w / series.len().max(1) as f64;
    let y_at = |v: f64| HEIGHT - MARGIN - (HEIGHT - 2.0 * MARGIN) * (v - lo) / (hi - lo);
    let base = y_at(0.0);
    for (g, label) in labels.iter().enumerate() {
        let gx = MARGIN + group_w * g as f64;
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{}" text-anchor="middle">{}</text>"#,
            gx + group_w / 2.0,
            HEIGHT - MARGIN + 16.0,
            escape(label)
        );
        for (i, s) in series.iter().enumerate() {
            let Some(&v) = s.values.get(g).filter(|v| v.is_finite()) else {
                continue;
            };
            let y = y_at(v);
            let _ = writeln!(
                out,
                r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
                gx + 0.1 * group_w + bar_w * i as f64,
                y.min(base),
                bar_w,
                (base - y).abs(),
                PALETTE[(i + 1) % PALETTE.len()]
            );
        }
    }
    legend(&mut out, series);
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Vec<Series> {
        vec![
            Series {
                name: "a".into(),
                values: vec![1.0, 2.0, 3.0],
            },
            Series {
                name: "b<c".into(),
                values: vec![2.0, f64::NAN, 1.0],
            },
        ]
    }

    #[test]
    fn line_chart_has_one_polyline_per_series() {
        let labels: Vec<String> = ["x", "y", "z"].iter().map(|s| s.to_string()).collect();
        let svg = line_chart_svg("t", &labels, &sample());
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains("b&lt;c"));
        assert!(!svg.contains("NaN"));
    }

    #[test]
    fn bar_chart_skips_missing_values() {
        let labels: Vec<String> = ["1", "2", "3"].iter().map(|s| s.to_string()).collect();
        let svg = bar_chart_svg("t", &labels, &sample());
        // Legend swatches are rects too: 5 bars + 2 swatches + background.
        assert_eq!(svg.matches("<rect").count(), 8);
    }
}
