//! Static SVG charts rendered from figure tables.
//!
//! Line tables have a `dim` column followed by one accuracy column per
//! method; bar tables have `method,mean_accuracy` rows.

use std::fmt::Write as _;

use crate::error::{CliError, Result};
use crate::table::Table;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const LEFT: f64 = 60.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 50.0;
const COLORS: [&str; 6] = ["#d62728", "#1f77b4", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChartKind {
    Line,
    Bar,
}

impl ChartKind {
    /// Infers the chart type from the table header.
    pub fn detect(table: &Table) -> Result<Self> {
        match table.columns.first().map(String::as_str) {
            Some("dim") if table.columns.len() >= 2 => Ok(ChartKind::Line),
            Some("method") if table.columns.len() == 2 => Ok(ChartKind::Bar),
            _ => Err(CliError::Invalid(format!(
                "table {} is neither a line table (dim, ...) nor a bar table (method, mean_accuracy)",
                table.name
            ))),
        }
    }
}

pub fn render(table: &Table) -> Result<String> {
    match ChartKind::detect(table)? {
        ChartKind::Line => line_chart(table),
        ChartKind::Bar => bar_chart(table),
    }
}

fn plot_height() -> f64 {
    HEIGHT - TOP - BOTTOM
}

fn plot_width() -> f64 {
    WIDTH - LEFT - RIGHT
}

fn y_of(v: f64) -> f64 {
    TOP + plot_height() * (1.0 - v.clamp(0.0, 1.0))
}

fn frame(svg: &mut String, title: &str, y_label: &str) {
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="18" text-anchor="middle" font-size="14">{}</text>"#,
        LEFT + plot_width() / 2.0,
        escape(title)
    );
    for i in 0..=5 {
        let v = i as f64 / 5.0;
        let y = y_of(v);
        let _ = writeln!(
            svg,
            r##"<line x1="{LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#dddddd"/>"##,
            LEFT + plot_width()
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{v:.1}</text>"#,
            LEFT - 6.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">{}</text>"#,
        TOP + plot_height() / 2.0,
        TOP + plot_height() / 2.0,
        escape(y_label)
    );
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Accuracy against target dimension, one polyline per method column.
/// Dims sit at evenly spaced positions.
pub fn line_chart(table: &Table) -> Result<String> {
    let n = table.rows.len();
    if n == 0 {
        return Err(CliError::Invalid(format!("table {} has no rows", table.name)));
    }
    let step = if n > 1 { plot_width() / (n - 1) as f64 } else { 0.0 };
    let x_of = |i: usize| if n > 1 { LEFT + step * i as f64 } else { LEFT + plot_width() / 2.0 };
    let mut svg = String::new();
    frame(&mut svg, &table.name, "clustering accuracy");
    for (i, row) in table.rows.iter().enumerate() {
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            x_of(i),
            TOP + plot_height() + 18.0,
            escape(&row[0])
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">target dimension</text>"#,
        LEFT + plot_width() / 2.0,
        HEIGHT - 8.0
    );
    for j in 1..table.columns.len() {
        let values = table.numeric_column(j)?;
        let color = COLORS[(j - 1) % COLORS.len()];
        let points: Vec<String> = values
            .iter()
            .enumerate()
            .map(|(i, &v)| format!("{:.2},{:.2}", x_of(i), y_of(v)))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            points.join(" ")
        );
        for (i, &v) in values.iter().enumerate() {
            let _ = writeln!(
                svg,
                r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#,
                x_of(i),
                y_of(v)
            );
        }
        let ly = TOP + 10.0 + 20.0 * (j - 1) as f64;
        let lx = WIDTH - RIGHT + 16.0;
        let _ = writeln!(
            svg,
            r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/>"#,
            lx + 20.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}">{}</text>"#,
            lx + 26.0,
            ly + 4.0,
            escape(&table.columns[j])
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

/// One bar per method row, labelled with its value.
pub fn bar_chart(table: &Table) -> Result<String> {
    let values = table.numeric_column(1)?;
    if values.is_empty() {
        return Err(CliError::Invalid(format!("table {} has no rows", table.name)));
    }
    let slot = plot_width() / values.len() as f64;
    let bar = slot * 0.6;
    let mut svg = String::new();
    frame(&mut svg, &table.name, "mean clustering accuracy");
    for (i, (row, &v)) in table.rows.iter().zip(&values).enumerate() {
        let x = LEFT + slot * i as f64 + (slot - bar) / 2.0;
        let y = y_of(v);
        let color = COLORS[i % COLORS.len()];
        let _ = writeln!(
            svg,
            r#"<rect x="{x:.2}" y="{y:.2}" width="{bar:.2}" height="{:.2}" fill="{color}"/>"#,
            TOP + plot_height() - y
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{v:.4}</text>"#,
            x + bar / 2.0,
            y - 4.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            x + bar / 2.0,
            TOP + plot_height() + 18.0,
            escape(&row[0])
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}
