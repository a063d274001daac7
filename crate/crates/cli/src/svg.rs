//! Minimal hand-emitted SVG line charts. One polyline per chart, fixed
//! canvas, fixed-precision coordinates so outputs are byte-stable.

use std::fmt::Write as _;

const WIDTH: f64 = 480.0;
const HEIGHT: f64 = 320.0;
const MARGIN: f64 = 48.0;

fn fmt(v: f64) -> String {
    format!("{v:.3}")
}

/// Render `points` (already sorted by x) as a polyline chart.
pub fn line_chart(title: &str, x_label: &str, y_label: &str, points: &[(f64, f64)]) -> String {
    let (x_min, x_max) = bounds(points.iter().map(|p| p.0));
    let (y_min, y_max) = bounds(points.iter().map(|p| p.1));

    let plot_w = WIDTH - 2.0 * MARGIN;
    let plot_h = HEIGHT - 2.0 * MARGIN;
    let sx = |x: f64| MARGIN + (x - x_min) / (x_max - x_min) * plot_w;
    let sy = |y: f64| HEIGHT - MARGIN - (y - y_min) / (y_max - y_min) * plot_h;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {WIDTH} {HEIGHT}\" \
         font-family=\"monospace\" font-size=\"11\">"
    );
    let _ = writeln!(
        svg,
        "  <rect x=\"{m}\" y=\"{m}\" width=\"{w}\" height=\"{h}\" fill=\"none\" stroke=\"#555\"/>",
        m = fmt(MARGIN),
        w = fmt(plot_w),
        h = fmt(plot_h)
    );
    let _ = writeln!(
        svg,
        "  <text x=\"{}\" y=\"20\" text-anchor=\"middle\">{}</text>",
        fmt(WIDTH / 2.0),
        escape(title)
    );
    let _ = writeln!(
        svg,
        "  <text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>",
        fmt(WIDTH / 2.0),
        fmt(HEIGHT - 10.0),
        escape(x_label)
    );
    let _ = writeln!(
        svg,
        "  <text x=\"14\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 14 {})\">{}</text>",
        fmt(HEIGHT / 2.0),
        fmt(HEIGHT / 2.0),
        escape(y_label)
    );
    // Axis extremes.
    let _ = writeln!(
        svg,
        "  <text x=\"{}\" y=\"{}\">{}</text>",
        fmt(MARGIN),
        fmt(HEIGHT - MARGIN + 16.0),
        fmt(x_min)
    );
    let _ = writeln!(
        svg,
        "  <text x=\"{}\" y=\"{}\" text-anchor=\"end\">{}</text>",
        fmt(WIDTH - MARGIN),
        fmt(HEIGHT - MARGIN + 16.0),
        fmt(x_max)
    );
    let _ = writeln!(
        svg,
        "  <text x=\"{}\" y=\"{}\" text-anchor=\"end\">{:e}</text>",
        fmt(MARGIN - 4.0),
        fmt(HEIGHT - MARGIN),
        y_min
    );
    let _ = writeln!(
        svg,
        "  <text x=\"{}\" y=\"{}\" text-anchor=\"end\">{:e}</text>",
        fmt(MARGIN - 4.0),
        fmt(MARGIN + 4.0),
        y_max
    );

    let coords: Vec<String> = points
        .iter()
        .map(|(x, y)| format!("{},{}", fmt(sx(*x)), fmt(sy(*y))))
        .collect();
    let _ = writeln!(
        svg,
        "  <polyline points=\"{}\" fill=\"none\" stroke=\"#0a6\" stroke-width=\"1.5\"/>",
        coords.join(" ")
    );
    for (x, y) in points {
        let _ = writeln!(
            svg,
            "  <circle cx=\"{}\" cy=\"{}\" r=\"2.5\" fill=\"#0a6\"/>",
            fmt(sx(*x)),
            fmt(sy(*y))
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for v in values {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !lo.is_finite() || !hi.is_finite() {
        return (0.0, 1.0);
    }
    if lo == hi {
        // Flat series: pad so the polyline sits mid-plot.
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;")
}
