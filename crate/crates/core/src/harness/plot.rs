//! SVG rendering of frontiers: log-scaled `κ` against `τ`.

use std::fmt::Write;
use std::path::Path;

use crate::error::Result;
use crate::frontier::{read_points_csv, Point};
use crate::programs::Strategy;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const MARGIN: f64 = 60.0;
const PALETTE: [&str; 10] = [
    "#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02", "#a6761d", "#666666",
    "#1f78b4", "#b15928",
];
const LINE_COLORS: [&str; 4] = ["#222222", "#3366cc", "#cc3333", "#339933"];

/// One polyline: a label and its points in plotting order.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<Point>,
}

impl Series {
    pub fn from_csv(path: &Path) -> Result<Self> {
        Ok(Self {
            label: path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default(),
            points: read_points_csv(std::fs::File::open(path)?)?,
        })
    }
}

fn strategy_color(name: &str) -> &'static str {
    Strategy::from_name(name)
        .and_then(|s| Strategy::ALL.iter().position(|&x| x == s))
        .map_or("#999999", |i| PALETTE[i])
}

struct Axes {
    log_min: f64,
    log_max: f64,
    tau_max: f64,
}

impl Axes {
    fn fit(series: &[Series]) -> Self {
        let kappas = series
            .iter()
            .flat_map(|s| &s.points)
            .map(|p| p.kappa.max(1.0).log10());
        let (lo, hi) = kappas.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| {
            (a.min(x), b.max(x))
        });
        let (log_min, log_max) = if lo.is_finite() {
            (lo.floor(), hi.ceil().max(lo.floor() + 1.0))
        } else {
            (0.0, 6.0)
        };
        let tau_max = series
            .iter()
            .flat_map(|s| &s.points)
            .map(|p| p.tau)
            .fold(1.0, f64::max);
        Self {
            log_min,
            log_max,
            tau_max,
        }
    }

    fn x(&self, kappa: f64) -> f64 {
        let t = (kappa.max(1.0).log10() - self.log_min) / (self.log_max - self.log_min);
        MARGIN + t * (WIDTH - 2.0 * MARGIN)
    }

    fn y(&self, tau: f64) -> f64 {
        HEIGHT - MARGIN - (tau / self.tau_max) * (HEIGHT - 2.0 * MARGIN)
    }
}

/// Pixel coordinates of each series, in plotting order.
pub fn plot_coordinates(series: &[Series]) -> Vec<Vec<(f64, f64)>> {
    let axes = Axes::fit(series);
    series
        .iter()
        .map(|s| {
            s.points
                .iter()
                .map(|p| (axes.x(p.kappa), axes.y(p.tau)))
                .collect()
        })
        .collect()
}

/// Renders the series as a standalone SVG document.
pub fn render_svg(series: &[Series]) -> String {
    let axes = Axes::fit(series);
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(
        svg,
        r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    let (x0, x1, y0, y1) = (MARGIN, WIDTH - MARGIN, HEIGHT - MARGIN, MARGIN);
    let _ = writeln!(svg, r#"<g class="axes" stroke="black">"#);
    let _ = writeln!(svg, r#"<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}"/>"#);
    let _ = writeln!(svg, r#"<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}"/>"#);
    let _ = writeln!(svg, "</g>");
    for e in axes.log_min as i32..=axes.log_max as i32 {
        let x = axes.x(10f64.powi(e));
        let _ = writeln!(
            svg,
            r#"<text x="{x:.1}" y="{:.1}" text-anchor="middle">1e{e}</text>"#,
            y0 + 16.0
        );
    }
    for i in 0..=4 {
        let tau = axes.tau_max * i as f64 / 4.0;
        let y = axes.y(tau);
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{y:.1}" text-anchor="end">{tau:.2}</text>"#,
            x0 - 6.0
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">program length (bits, log scale)</text>"#,
        WIDTH / 2.0,
        HEIGHT - 16.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="16" y="{:.1}" transform="rotate(-90 16 {:.1})" text-anchor="middle">score</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0
    );
    for (i, s) in series.iter().enumerate() {
        let color = LINE_COLORS[i % LINE_COLORS.len()];
        if s.points.len() > 1 {
            let coords: Vec<String> = s
                .points
                .iter()
                .map(|p| format!("{:.2},{:.2}", axes.x(p.kappa), axes.y(p.tau)))
                .collect();
            let _ = writeln!(
                svg,
                r#"<polyline class="frontier" fill="none" stroke="{color}" points="{}"/>"#,
                coords.join(" ")
            );
        }
        for p in &s.points {
            let _ = writeln!(
                svg,
                r#"<circle class="marker" cx="{:.2}" cy="{:.2}" r="3.5" fill="{}"><title>{}</title></circle>"#,
                axes.x(p.kappa),
                axes.y(p.tau),
                strategy_color(&p.provenance.strategy),
                p.provenance.strategy
            );
        }
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" fill="{color}">{}</text>"#,
            x1 - 140.0,
            y1 + 14.0 * i as f64,
            s.label
        );
    }
    svg.push_str("</svg>\n");
    svg
}

/// Reads frontier CSVs and returns the SVG.
pub fn cmd_plot(csv_paths: &[&Path]) -> Result<String> {
    let series = csv_paths
        .iter()
        .map(|p| Series::from_csv(p))
        .collect::<Result<Vec<_>>>()?;
    Ok(render_svg(&series))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_and_single() {
        let svg = render_svg(&[]);
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert!(!svg.contains("<polyline"));
        let one = render_svg(&[Series {
            label: "a".into(),
            points: vec![Point::new(100.0, 0.5, "base")],
        }]);
        assert_eq!(one.matches("class=\"marker\"").count(), 1);
        assert!(!one.contains("<polyline"));
    }
}
