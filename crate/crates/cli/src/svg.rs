//! Standalone SVG scatter plots coloured by class.

use std::fmt::Write as _;
use std::io::{self, Write};

/// Class colours by position in the ascending class list, cycling.
pub const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 50.0;
const LEGEND_WIDTH: f64 = 110.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum DrawOrder {
    /// Smaller classes first, so larger classes are drawn on top.
    #[default]
    Ascending,
    Descending,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
    pub class: u32,
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    });
    if lo > hi {
        (0.0, 1.0)
    } else if lo == hi {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

pub fn color_of(classes: &[u32], class: u32) -> &'static str {
    let i = classes.binary_search(&class).unwrap_or(0);
    PALETTE[i % PALETTE.len()]
}

/// Renders the plot. Coordinates must be finite.
pub fn render_scatter(
    points: &[Point],
    order: DrawOrder,
    x_label: &str,
    y_label: &str,
) -> io::Result<String> {
    if points.iter().any(|p| !p.x.is_finite() || !p.y.is_finite()) {
        return Err(io::Error::new(
            io::ErrorKind::InvalidInput,
            "non-finite coordinate",
        ));
    }
    let mut classes: Vec<u32> = points.iter().map(|p| p.class).collect();
    classes.sort_unstable();
    classes.dedup();
    let (x0, x1) = range(points.iter().map(|p| p.x));
    let (y0, y1) = range(points.iter().map(|p| p.y));
    let plot_w = WIDTH - 2.0 * MARGIN - LEGEND_WIDTH;
    let plot_h = HEIGHT - 2.0 * MARGIN;
    let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * plot_w;
    let sy = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * plot_h;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let (left, right, top, bottom) = (MARGIN, MARGIN + plot_w, MARGIN, HEIGHT - MARGIN);
    let _ = writeln!(
        s,
        r#"<g class="axes" stroke="black"><line x1="{left}" y1="{bottom}" x2="{right}" y2="{bottom}"/><line x1="{left}" y1="{bottom}" x2="{left}" y2="{top}"/></g>"#
    );
    let _ = writeln!(
        s,
        r#"<g class="ticks" font-family="sans-serif" font-size="11"><text x="{left}" y="{}" text-anchor="start">{x0:.3}</text><text x="{right}" y="{}" text-anchor="end">{x1:.3}</text><text x="{}" y="{bottom}" text-anchor="end">{y0:.3}</text><text x="{}" y="{}" text-anchor="end">{y1:.3}</text></g>"#,
        bottom + 15.0,
        bottom + 15.0,
        left - 4.0,
        left - 4.0,
        top + 10.0
    );
    let _ = writeln!(
        s,
        r#"<g class="labels" font-family="sans-serif" font-size="13"><text x="{}" y="{}" text-anchor="middle">{}</text><text x="15" y="{}" text-anchor="middle" transform="rotate(-90 15 {})">{}</text></g>"#,
        (left + right) / 2.0,
        HEIGHT - 10.0,
        escape(x_label),
        (top + bottom) / 2.0,
        (top + bottom) / 2.0,
        escape(y_label)
    );

    let mut drawn: Vec<&Point> = points.iter().collect();
    drawn.sort_by_key(|p| p.class);
    if order == DrawOrder::Descending {
        drawn.reverse();
    }
    let _ = writeln!(s, r#"<g class="points" fill-opacity="0.7">"#);
    for p in drawn {
        let _ = writeln!(
            s,
            r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{}" data-class="{}"/>"#,
            sx(p.x),
            sy(p.y),
            color_of(&classes, p.class),
            p.class
        );
    }
    let _ = writeln!(s, "</g>");

    let lx = WIDTH - LEGEND_WIDTH + 10.0;
    let _ = writeln!(
        s,
        r#"<g class="legend" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<text x="{lx}" y="{}">order</text>"#, MARGIN - 8.0);
    for (i, c) in classes.iter().enumerate() {
        let y = MARGIN + 18.0 * i as f64;
        let _ = writeln!(
            s,
            r#"<g class="legend-entry"><rect x="{lx}" y="{y}" width="10" height="10" fill="{}"/><text x="{}" y="{}">{c}</text></g>"#,
            color_of(&classes, *c),
            lx + 16.0,
            y + 9.0
        );
    }
    let _ = writeln!(s, "</g>");
    s.push_str("</svg>\n");
    Ok(s)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

pub fn emit_scatter_svg<W: Write>(points: &[Point], order: DrawOrder, mut w: W) -> io::Result<()> {
    w.write_all(render_scatter(points, order, "PC1", "PC2")?.as_bytes())
}
