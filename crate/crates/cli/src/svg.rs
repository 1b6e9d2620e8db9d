use lexiground_core::fmt::sig6;
use lexiground_core::gam::PartialEffect;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 20.0;
const MARGIN_TOP: f64 = 30.0;
const MARGIN_BOTTOM: f64 = 50.0;

/// Render a partial-effect curve with its ±2·SE band as a small
/// self-contained SVG. Pixel coordinates are rounded to two decimals so the
/// output is byte-stable across runs.
pub fn partial_effect_svg(effect: &PartialEffect, config_hash: &str, seed: u64) -> String {
    use std::fmt::Write as _;

    let n = effect.xs.len();
    assert!(n >= 2, "partial effect needs at least two grid points");

    let (x_lo, x_hi) = span(&effect.xs);
    let mut y_lo = f64::INFINITY;
    let mut y_hi = f64::NEG_INFINITY;
    for i in 0..n {
        y_lo = y_lo.min(effect.effect[i] - 2.0 * effect.std_error[i]);
        y_hi = y_hi.max(effect.effect[i] + 2.0 * effect.std_error[i]);
    }
    // Pad the value range so flat curves still get a visible axis span.
    let pad = (0.05 * (y_hi - y_lo)).max(1e-6);
    y_lo -= pad;
    y_hi += pad;

    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let px = |x: f64| MARGIN_LEFT + (x - x_lo) / (x_hi - x_lo) * plot_w;
    let py = |y: f64| MARGIN_TOP + (y_hi - y) / (y_hi - y_lo) * plot_h;

    let mut band = String::new();
    for i in 0..n {
        let _ = write!(
            band,
            "{:.2},{:.2} ",
            px(effect.xs[i]),
            py(effect.effect[i] + 2.0 * effect.std_error[i])
        );
    }
    for i in (0..n).rev() {
        let _ = write!(
            band,
            "{:.2},{:.2} ",
            px(effect.xs[i]),
            py(effect.effect[i] - 2.0 * effect.std_error[i])
        );
    }
    let band = band.trim_end();

    let mut center = String::new();
    for i in 0..n {
        let _ = write!(
            center,
            "{:.2},{:.2} ",
            px(effect.xs[i]),
            py(effect.effect[i])
        );
    }
    let center = center.trim_end();

    let x_axis_y = py(y_lo) + 0.0;
    let y_axis_x = px(x_lo);

    let mut out = String::new();
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\">"
    );
    let _ = writeln!(out, "<!-- config_hash={config_hash} seed={seed} -->");
    let _ = writeln!(
        out,
        "<rect x=\"0\" y=\"0\" width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>"
    );
    let _ = writeln!(
        out,
        "<polygon points=\"{band}\" fill=\"#c9d9ec\" stroke=\"none\"/>"
    );
    let _ = writeln!(
        out,
        "<polyline points=\"{center}\" fill=\"none\" stroke=\"#1f4e79\" stroke-width=\"1.5\"/>"
    );
    let _ = writeln!(
        out,
        "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"black\"/>",
        y_axis_x,
        x_axis_y,
        px(x_hi),
        x_axis_y
    );
    let _ = writeln!(
        out,
        "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"black\"/>",
        y_axis_x,
        py(y_hi),
        y_axis_x,
        x_axis_y
    );
    let _ = writeln!(
        out,
        "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"12\" text-anchor=\"start\">{}</text>",
        y_axis_x,
        x_axis_y + 18.0,
        sig6(x_lo)
    );
    let _ = writeln!(
        out,
        "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"12\" text-anchor=\"end\">{}</text>",
        px(x_hi),
        x_axis_y + 18.0,
        sig6(x_hi)
    );
    let _ = writeln!(
        out,
        "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"12\" text-anchor=\"end\">{}</text>",
        y_axis_x - 4.0,
        x_axis_y + 4.0,
        sig6(y_lo)
    );
    let _ = writeln!(
        out,
        "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"12\" text-anchor=\"end\">{}</text>",
        y_axis_x - 4.0,
        py(y_hi) + 4.0,
        sig6(y_hi)
    );
    let _ = writeln!(
        out,
        "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"14\" text-anchor=\"middle\">{}</text>",
        MARGIN_LEFT + plot_w / 2.0,
        MARGIN_TOP - 10.0,
        effect.term
    );
    let _ = writeln!(
        out,
        "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"12\" text-anchor=\"middle\">partial effect \
         (logit scale), band = \u{b1}2 SE</text>",
        MARGIN_LEFT + plot_w / 2.0,
        HEIGHT - 12.0
    );
    out.push_str("</svg>\n");
    out
}

fn span(xs: &[f64]) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &x in xs {
        lo = lo.min(x);
        hi = hi.max(x);
    }
    if lo == hi {
        // Degenerate grid: widen so the projection stays finite.
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}
