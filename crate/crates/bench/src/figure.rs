//! Plot-ready tables and a minimal SVG line renderer.

use std::fmt::Write as _;

use crate::error::HarnessError;
use crate::experiment::format_real;
use crate::summary::{rolling_median, QuantileSummary};

pub const FIGURE_HEADER: [&str; 3] = ["iteration", "series_name", "value"];

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub values: Vec<f64>,
}

impl Series {
    pub fn new(name: impl Into<String>, values: Vec<f64>) -> Self {
        Series {
            name: name.into(),
            values,
        }
    }
}

/// Long-format table: one row per (iteration, series).
#[derive(Debug, Clone, PartialEq)]
pub struct FigureTable {
    pub rows: Vec<(usize, String, f64)>,
}

pub fn emit_figure_data(iterations: &[usize], series: &[Series]) -> Result<FigureTable, HarnessError> {
    for s in series {
        if s.values.len() != iterations.len() {
            return Err(HarnessError::Data(format!(
                "series `{}` has {} values for {} iterations",
                s.name,
                s.values.len(),
                iterations.len()
            )));
        }
    }
    let mut rows = Vec::with_capacity(iterations.len() * series.len());
    for s in series {
        for (&it, &v) in iterations.iter().zip(&s.values) {
            rows.push((it, s.name.clone(), v));
        }
    }
    Ok(FigureTable { rows })
}

/// Median and quartile bands of a quantile summary.
pub fn quantile_series(summary: &QuantileSummary) -> Vec<Series> {
    (0..summary.quantiles.len())
        .map(|k| Series::new(summary.series_name(k), summary.series[k].clone()))
        .collect()
}

/// Sample weights, best-so-far and their rolling median for a single run.
pub fn single_run_series(samples: &[f64], best: &[f64], window: usize) -> Result<Vec<Series>, HarnessError> {
    Ok(vec![
        Series::new("sample", samples.to_vec()),
        Series::new("map", best.to_vec()),
        Series::new("rolling_median", rolling_median(samples, window)?),
    ])
}

impl FigureTable {
    pub fn to_csv(&self) -> Result<Vec<u8>, HarnessError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(FIGURE_HEADER)?;
        for (it, name, v) in &self.rows {
            w.write_record([it.to_string(), name.clone(), format_real(*v)])?;
        }
        w.into_inner().map_err(|e| HarnessError::Data(e.to_string()))
    }

    pub fn from_csv<R: std::io::Read>(input: R) -> Result<Self, HarnessError> {
        let mut reader = csv::Reader::from_reader(input);
        if reader.headers()?.iter().ne(FIGURE_HEADER) {
            return Err(HarnessError::Data("not a figure table".into()));
        }
        let mut rows = Vec::new();
        for row in reader.records() {
            let row = row?;
            let bad = || HarnessError::Data(format!("bad figure row {row:?}"));
            let it = row.get(0).and_then(|s| s.parse().ok()).ok_or_else(bad)?;
            let name = row.get(1).ok_or_else(bad)?.to_string();
            let v = row.get(2).and_then(|s| s.parse().ok()).ok_or_else(bad)?;
            rows.push((it, name, v));
        }
        Ok(FigureTable { rows })
    }

    /// Series names in first-appearance order.
    pub fn series_names(&self) -> Vec<String> {
        let mut names: Vec<String> = Vec::new();
        for (_, name, _) in &self.rows {
            if !names.contains(name) {
                names.push(name.clone());
            }
        }
        names
    }

    /// One polyline per series; non-finite points are skipped.
    pub fn to_svg(&self, title: &str) -> String {
        const W: f64 = 640.0;
        const H: f64 = 400.0;
        const PAD: f64 = 50.0;
        const COLORS: [&str; 6] = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"];
        let finite = || self.rows.iter().filter(|r| r.2.is_finite());
        let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
        for (it, _, v) in finite() {
            x0 = x0.min(*it as f64);
            x1 = x1.max(*it as f64);
            y0 = y0.min(*v);
            y1 = y1.max(*v);
        }
        if x0 > x1 {
            (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
        }
        if x1 == x0 {
            x1 = x0 + 1.0;
        }
        if y1 == y0 {
            y1 = y0 + 1.0;
        }
        let sx = |x: f64| PAD + (x - x0) / (x1 - x0) * (W - 2.0 * PAD);
        let sy = |y: f64| H - PAD - (y - y0) / (y1 - y0) * (H - 2.0 * PAD);

        let mut svg = String::new();
        let _ = writeln!(svg, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="11">"#);
        let _ = writeln!(svg, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
        let _ = writeln!(svg, r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#, W / 2.0, escape(title));
        let _ = writeln!(
            svg,
            r#"<path d="M{PAD},{PAD} V{} H{}" fill="none" stroke="black"/>"#,
            H - PAD,
            W - PAD
        );
        let _ = writeln!(svg, r#"<text x="{PAD}" y="{}" text-anchor="middle">{x0}</text>"#, H - PAD + 15.0);
        let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="middle">{x1}</text>"#, W - PAD, H - PAD + 15.0);
        let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="end">{y0:.1}</text>"#, PAD - 4.0, H - PAD);
        let _ = writeln!(svg, r#"<text x="{}" y="{PAD}" text-anchor="end">{y1:.1}</text>"#, PAD - 4.0);
        for (k, name) in self.series_names().iter().enumerate() {
            let color = COLORS[k % COLORS.len()];
            let points: Vec<String> = finite()
                .filter(|r| &r.1 == name)
                .map(|(it, _, v)| format!("{:.2},{:.2}", sx(*it as f64), sy(*v)))
                .collect();
            let _ = writeln!(
                svg,
                r#"<polyline fill="none" stroke="{color}" stroke-width="1.2" points="{}"/>"#,
                points.join(" ")
            );
            let _ = writeln!(
                svg,
                r#"<text x="{}" y="{}" fill="{color}">{}</text>"#,
                W - PAD + 4.0 - 120.0,
                PAD + 14.0 * (k as f64 + 1.0),
                escape(name)
            );
        }
        svg.push_str("</svg>\n");
        svg
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
