//! SVG figure emission: correlation heatmap and per-metric bar charts.
//!
//! The figures are plain hand-assembled SVG so the output stays diffable
//! and byte-deterministic; no drawing library is involved.

use std::path::{Path, PathBuf};

use super::report::{format_cell, write_report_csv};
use super::{EvalReport, PipelineError};
use crate::metrics::{CorrelationMatrix, MetricsRow};

/// Selects one metric out of a report row for charting.
type MetricPick = fn(&MetricsRow) -> f64;

const CELL: f64 = 56.0;
const LEFT_MARGIN: f64 = 150.0;
const TOP_MARGIN: f64 = 150.0;

/// Two-decimal annotation text; "-0.00" would render as a distinct color
/// key from "0.00" despite being the same cell, so it is normalized away.
fn fmt2(v: f64) -> String {
    let s = format!("{v:.2}");
    if s == "-0.00" {
        "0.00".into()
    } else {
        s
    }
}

const NEG: (u8, u8, u8) = (0x21, 0x66, 0xac);
const MID: (u8, u8, u8) = (0xf7, 0xf7, 0xf7);
const POS: (u8, u8, u8) = (0xb2, 0x18, 0x2b);

fn lerp(a: u8, b: u8, t: f64) -> u8 {
    (f64::from(a) + (f64::from(b) - f64::from(a)) * t).round() as u8
}

/// Diverging blue–white–red scale anchored at −1, 0, +1; input clamped.
pub fn diverging_color(v: f64) -> String {
    let v = v.clamp(-1.0, 1.0);
    let (from, to, t) = if v < 0.0 {
        (MID, NEG, -v)
    } else {
        (MID, POS, v)
    };
    format!(
        "#{:02x}{:02x}{:02x}",
        lerp(from.0, to.0, t),
        lerp(from.1, to.1, t),
        lerp(from.2, to.2, t)
    )
}

fn svg_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

fn heatmap_svg(m: &CorrelationMatrix) -> String {
    let labels = m.labels();
    let n = labels.len();
    let width = LEFT_MARGIN + CELL * n as f64 + 20.0;
    let height = TOP_MARGIN + CELL * n as f64 + 20.0;
    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" \
         viewBox=\"0 0 {width} {height}\" font-family=\"sans-serif\">\n"
    ));
    svg.push_str(&format!(
        "  <rect width=\"{width}\" height=\"{height}\" fill=\"#ffffff\"/>\n"
    ));
    for (j, label) in labels.iter().enumerate() {
        let x = LEFT_MARGIN + (j as f64 + 0.5) * CELL;
        let y = TOP_MARGIN - 8.0;
        svg.push_str(&format!(
            "  <text x=\"{x}\" y=\"{y}\" font-size=\"12\" text-anchor=\"start\" \
             transform=\"rotate(-60 {x} {y})\">{}</text>\n",
            svg_escape(label)
        ));
    }
    for (i, label) in labels.iter().enumerate() {
        let x = LEFT_MARGIN - 8.0;
        let y = TOP_MARGIN + (i as f64 + 0.5) * CELL + 4.0;
        svg.push_str(&format!(
            "  <text x=\"{x}\" y=\"{y}\" font-size=\"12\" text-anchor=\"end\">{}</text>\n",
            svg_escape(label)
        ));
    }
    for i in 0..n {
        for j in 0..n {
            let v = m.value(i, j);
            let x = LEFT_MARGIN + j as f64 * CELL;
            let y = TOP_MARGIN + i as f64 * CELL;
            svg.push_str(&format!(
                "  <rect class=\"cell\" x=\"{x}\" y=\"{y}\" width=\"{CELL}\" height=\"{CELL}\" \
                 fill=\"{}\" stroke=\"#ffffff\"/>\n",
                diverging_color(v)
            ));
            let tx = x + CELL / 2.0;
            let ty = y + CELL / 2.0 + 4.0;
            let ink = if v.abs() > 0.5 { "#ffffff" } else { "#000000" };
            svg.push_str(&format!(
                "  <text class=\"ann\" x=\"{tx}\" y=\"{ty}\" font-size=\"12\" \
                 text-anchor=\"middle\" fill=\"{ink}\">{}</text>\n",
                fmt2(v)
            ));
        }
    }
    svg.push_str("</svg>\n");
    svg
}

/// Writes the heatmap SVG at `path` and its matrix as CSV alongside it.
pub fn render_heatmap(m: &CorrelationMatrix, path: &Path) -> Result<(), PipelineError> {
    let io_err = |p: &Path, source| PipelineError::Io {
        path: p.to_path_buf(),
        source,
    };
    std::fs::write(path, heatmap_svg(m)).map_err(|e| io_err(path, e))?;
    let csv_path = path.with_extension("csv");
    std::fs::write(&csv_path, m.to_csv_string()).map_err(|e| io_err(&csv_path, e))?;
    Ok(())
}

struct Bar<'a> {
    model: &'a str,
    value: f64,
}

fn bar_chart_svg(title: &str, bars: &[Bar<'_>]) -> String {
    const BAR_W: f64 = 64.0;
    const GAP: f64 = 28.0;
    const PLOT_H: f64 = 300.0;
    const LEFT: f64 = 70.0;
    const TOP: f64 = 50.0;
    const BOTTOM: f64 = 120.0;

    // Axis range always includes zero so bar length stays proportional to
    // magnitude even when a metric (R²) goes negative.
    let lo = bars.iter().map(|b| b.value).fold(0.0f64, f64::min);
    let hi = bars.iter().map(|b| b.value).fold(0.0f64, f64::max);
    let (lo, hi) = if (hi - lo).abs() < 1e-12 {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    };
    let scale = PLOT_H / (hi - lo);
    let y_of = |v: f64| TOP + (hi - v) * scale;

    let width = LEFT + bars.len() as f64 * (BAR_W + GAP) + GAP;
    let height = TOP + PLOT_H + BOTTOM;
    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" \
         viewBox=\"0 0 {width} {height}\" font-family=\"sans-serif\">\n"
    ));
    svg.push_str(&format!(
        "  <rect width=\"{width}\" height=\"{height}\" fill=\"#ffffff\"/>\n"
    ));
    svg.push_str(&format!(
        "  <text x=\"{}\" y=\"28\" font-size=\"16\" text-anchor=\"middle\" \
         font-weight=\"bold\">{}</text>\n",
        width / 2.0,
        svg_escape(title)
    ));
    let zero_y = y_of(0.0);
    svg.push_str(&format!(
        "  <line x1=\"{LEFT}\" y1=\"{zero_y}\" x2=\"{}\" y2=\"{zero_y}\" \
         stroke=\"#333333\"/>\n",
        width - GAP
    ));
    for (k, bar) in bars.iter().enumerate() {
        let x = LEFT + GAP + k as f64 * (BAR_W + GAP);
        let (top, bar_h) = if bar.value >= 0.0 {
            (y_of(bar.value), zero_y - y_of(bar.value))
        } else {
            (zero_y, y_of(bar.value) - zero_y)
        };
        svg.push_str(&format!(
            "  <rect class=\"bar\" x=\"{x}\" y=\"{top}\" width=\"{BAR_W}\" height=\"{bar_h}\" \
             fill=\"#4c72b0\"/>\n"
        ));
        let ann_y = if bar.value >= 0.0 {
            top - 6.0
        } else {
            top + bar_h + 14.0
        };
        svg.push_str(&format!(
            "  <text class=\"ann\" x=\"{}\" y=\"{ann_y}\" font-size=\"12\" \
             text-anchor=\"middle\">{}</text>\n",
            x + BAR_W / 2.0,
            format_cell(bar.value)
        ));
        let lx = x + BAR_W / 2.0;
        let ly = TOP + PLOT_H + 16.0;
        svg.push_str(&format!(
            "  <text x=\"{lx}\" y=\"{ly}\" font-size=\"12\" text-anchor=\"end\" \
             transform=\"rotate(-45 {lx} {ly})\">{}</text>\n",
            svg_escape(bar.model)
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

/// Writes one bar chart per metric plus the consolidated report CSV into
/// `dir`; returns the chart paths in metric order.
pub fn render_bar_charts(report: &EvalReport, dir: &Path) -> Result<Vec<PathBuf>, PipelineError> {
    let ok_rows: Vec<(&str, &crate::metrics::MetricsRow)> = report
        .rows
        .iter()
        .filter_map(|r| r.outcome.as_ref().ok().map(|m| (r.model.as_str(), m)))
        .collect();
    if ok_rows.is_empty() {
        return Err(PipelineError::Render(
            "no successful rows; nothing to render".into(),
        ));
    }
    std::fs::create_dir_all(dir).map_err(|source| PipelineError::Io {
        path: dir.to_path_buf(),
        source,
    })?;

    let metrics: [(&str, &str, MetricPick); 5] = [
        ("mse.svg", "MSE", |m| m.mse),
        ("rmse.svg", "RMSE", |m| m.rmse),
        ("mae.svg", "MAE", |m| m.mae),
        ("mape.svg", "MAPE", |m| m.mape),
        ("r2.svg", "R2", |m| m.r2),
    ];
    let mut paths = Vec::with_capacity(metrics.len());
    for (file, title, pick) in metrics {
        let bars: Vec<Bar<'_>> = ok_rows
            .iter()
            .map(|(model, m)| Bar {
                model,
                value: pick(m),
            })
            .collect();
        let path = dir.join(file);
        std::fs::write(&path, bar_chart_svg(title, &bars)).map_err(|source| PipelineError::Io {
            path: path.clone(),
            source,
        })?;
        paths.push(path);
    }
    write_report_csv(report, &dir.join("report.csv"))?;
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::embedded_sample;
    use crate::metrics::{correlation_matrix, MetricsRow};
    use crate::pipeline::ReportRow;
    use std::time::Duration;

    fn count_class(svg: &str, class: &str) -> usize {
        svg.matches(&format!("class=\"{class}\"")).count()
    }

    #[test]
    fn color_scale_hits_its_anchors() {
        assert_eq!(diverging_color(-1.0), "#2166ac");
        assert_eq!(diverging_color(0.0), "#f7f7f7");
        assert_eq!(diverging_color(1.0), "#b2182b");
        assert_eq!(diverging_color(7.0), "#b2182b");
        assert_eq!(diverging_color(-7.0), "#2166ac");
    }

    #[test]
    fn heatmap_has_64_cells_and_64_annotations() {
        let m = correlation_matrix(&embedded_sample()).unwrap();
        let svg = heatmap_svg(&m);
        assert_eq!(count_class(&svg, "cell"), 64);
        assert_eq!(count_class(&svg, "ann"), 64);
    }

    #[test]
    fn identity_diagonal_takes_the_extreme_positive_color() {
        let mut values = [[0.0; 8]; 8];
        for (i, row) in values.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        let svg = heatmap_svg(&CorrelationMatrix { values });
        assert_eq!(svg.matches("fill=\"#b2182b\"").count(), 8);
    }

    fn report_with(rows: Vec<ReportRow>) -> EvalReport {
        EvalReport {
            rows,
            seed: 1,
            train_size: 4,
            validation_size: 1,
            split_digest: "0".into(),
            config_digest: "0".into(),
        }
    }

    fn ok_row(model: &str, r2: f64) -> ReportRow {
        ReportRow {
            model: model.into(),
            outcome: Ok(MetricsRow {
                mse: 1.0,
                rmse: 1.0,
                mae: 1.0,
                mape: 1.0,
                r2,
            }),
            wall: Duration::ZERO,
        }
    }

    #[test]
    fn six_row_report_yields_five_charts_of_six_bars() {
        let report = report_with(
            ["A", "B", "C", "D", "E", "F"]
                .iter()
                .enumerate()
                .map(|(i, m)| ok_row(m, i as f64 * 0.1 - 0.2))
                .collect(),
        );
        let dir = tempfile::tempdir().unwrap();
        let paths = render_bar_charts(&report, dir.path()).unwrap();
        assert_eq!(paths.len(), 5);
        for path in &paths {
            let svg = std::fs::read_to_string(path).unwrap();
            assert_eq!(count_class(&svg, "bar"), 6);
            assert_eq!(count_class(&svg, "ann"), 6);
        }
        assert!(dir.path().join("report.csv").exists());
    }

    #[test]
    fn single_row_report_yields_one_bar_per_chart() {
        let report = report_with(vec![ok_row("Solo", 0.9)]);
        let dir = tempfile::tempdir().unwrap();
        for path in render_bar_charts(&report, dir.path()).unwrap() {
            let svg = std::fs::read_to_string(&path).unwrap();
            assert_eq!(count_class(&svg, "bar"), 1);
        }
    }

    #[test]
    fn all_failed_report_is_unrenderable() {
        let report = report_with(vec![ReportRow {
            model: "KNN".into(),
            outcome: Err("boom".into()),
            wall: Duration::ZERO,
        }]);
        let dir = tempfile::tempdir().unwrap();
        let err = render_bar_charts(&report, dir.path()).unwrap_err();
        assert!(matches!(err, PipelineError::Render(_)));
    }
}
