//! Standalone SVG line plots of training logs.

use std::fmt::Write as _;
use std::str::FromStr;

use hqlip::train::{MetricsLog, MetricsRow, TrainMethod};
use hqlip::{Error, Result};

use crate::manifest::ExperimentId;

const WIDTH: f64 = 720.0;
const PANEL_HEIGHT: f64 = 360.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 150.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 50.0;
const TICKS: usize = 5;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

/// Layout of a plot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    /// Certified bound against epoch, one series per run.
    Epochs,
    /// Final certified bound against the regularization weight.
    Lambda,
    /// Test accuracy and certified bound against epoch, per method.
    Methods,
    /// Pick from the columns that vary in the log.
    Auto,
}

impl PlotKind {
    pub fn for_experiment(id: ExperimentId) -> Self {
        match id {
            ExperimentId::Figure1 => PlotKind::Epochs,
            ExperimentId::Figure2 => PlotKind::Lambda,
            ExperimentId::Figure3 => PlotKind::Methods,
        }
    }

    fn resolve(self, log: &MetricsLog) -> Self {
        if self != PlotKind::Auto {
            return self;
        }
        if distinct(log, |r| r.method.as_str().to_string()).len() > 1 {
            PlotKind::Methods
        } else if distinct(log, |r| r.lambda.to_string()).len() > 1 {
            PlotKind::Lambda
        } else {
            PlotKind::Epochs
        }
    }
}

impl FromStr for PlotKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "epochs" => Ok(PlotKind::Epochs),
            "lambda" => Ok(PlotKind::Lambda),
            "methods" => Ok(PlotKind::Methods),
            "auto" => Ok(PlotKind::Auto),
            other => other
                .parse::<ExperimentId>()
                .map(PlotKind::for_experiment)
                .map_err(|_| Error::InvalidConfig(format!("unknown plot kind {other:?}"))),
        }
    }
}

struct Series {
    label: String,
    points: Vec<(f64, f64)>,
}

struct Panel {
    title: String,
    x_label: String,
    y_label: String,
    series: Vec<Series>,
    /// Category names replacing numeric x ticks.
    x_categories: Option<Vec<String>>,
}

/// Renders a log as a standalone SVG document.
pub fn emit_plot(log: &MetricsLog, kind: PlotKind) -> Result<String> {
    if log.is_empty() {
        return Err(Error::EmptyInput("metrics log has no rows".into()));
    }
    let panels = match kind.resolve(log) {
        PlotKind::Epochs => vec![epoch_panel(log, "Certified bound", "lip_hybrid", |r| r.lip_hybrid, None)],
        PlotKind::Lambda => vec![lambda_panel(log)],
        PlotKind::Methods => {
            let methods: Vec<TrainMethod> = TrainMethod::ALL
                .into_iter()
                .filter(|m| log.rows.iter().any(|r| r.method == *m))
                .collect();
            vec![
                epoch_panel(log, "Test accuracy", "test_acc", |r| r.test_acc, Some(&methods)),
                epoch_panel(log, "Certified bound", "lip_hybrid", |r| r.lip_hybrid, Some(&methods)),
            ]
        }
        PlotKind::Auto => unreachable!("resolved above"),
    };
    Ok(render(&panels))
}

fn distinct(log: &MetricsLog, key: impl Fn(&MetricsRow) -> String) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for r in &log.rows {
        let k = key(r);
        if !out.contains(&k) {
            out.push(k);
        }
    }
    out
}

// Label naming whichever run settings vary across the log.
fn run_label(log: &MetricsLog) -> impl Fn(&MetricsRow) -> String {
    let methods = distinct(log, |r| r.method.as_str().into()).len() > 1;
    let norms = distinct(log, |r| r.norm.as_str().into()).len() > 1;
    let lambdas = distinct(log, |r| r.lambda.to_string()).len() > 1;
    move |r: &MetricsRow| {
        let mut parts = Vec::new();
        if methods {
            parts.push(r.method.as_str().to_string());
        }
        if norms || !(methods || lambdas) {
            parts.push(r.norm.as_str().to_string());
        }
        if lambdas {
            parts.push(format!("λ={}", r.lambda));
        }
        parts.join(" ")
    }
}

fn epoch_panel(
    log: &MetricsLog,
    title: &str,
    y_label: &str,
    y: impl Fn(&MetricsRow) -> f64,
    methods: Option<&[TrainMethod]>,
) -> Panel {
    let label = run_label(log);
    let mut series: Vec<Series> = Vec::new();
    for r in &log.rows {
        let name = label(r);
        match series.iter_mut().find(|s| s.label == name) {
            Some(s) => s.points.push((r.epoch as f64, y(r))),
            None => series.push(Series {
                label: name,
                points: vec![(r.epoch as f64, y(r))],
            }),
        }
    }
    if let Some(methods) = methods {
        series.sort_by_key(|s| methods.iter().position(|m| s.label.starts_with(m.as_str())));
    }
    Panel {
        title: title.into(),
        x_label: "epoch".into(),
        y_label: y_label.into(),
        series,
        x_categories: None,
    }
}

fn lambda_panel(log: &MetricsLog) -> Panel {
    // Final row of every run, in log order.
    let mut finals: Vec<&MetricsRow> = Vec::new();
    for (i, r) in log.rows.iter().enumerate() {
        let next_starts_run = log.rows.get(i + 1).is_none_or(|n| n.epoch <= r.epoch);
        if next_starts_run {
            finals.push(r);
        }
    }
    finals.sort_by(|a, b| a.lambda.total_cmp(&b.lambda));
    let label = finals
        .first()
        .map(|r| format!("{} {}", r.method.as_str(), r.norm.as_str()))
        .unwrap_or_default();
    Panel {
        title: "Final certified bound".into(),
        x_label: "λ".into(),
        y_label: "lip_hybrid".into(),
        series: vec![Series {
            label,
            points: finals.iter().enumerate().map(|(i, r)| (i as f64, r.lip_hybrid)).collect(),
        }],
        x_categories: Some(finals.iter().map(|r| r.lambda.to_string()).collect()),
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    if (1e-3..1e4).contains(&a) {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        format!("{v:.2e}")
    }
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        let pad = if lo == 0.0 { 1.0 } else { 0.1 * lo.abs() };
        return (lo - pad, hi + pad);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

fn render(panels: &[Panel]) -> String {
    let height = PANEL_HEIGHT * panels.len() as f64;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" viewBox="0 0 {WIDTH} {height}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for (k, p) in panels.iter().enumerate() {
        render_panel(&mut svg, p, k as f64 * PANEL_HEIGHT);
    }
    svg.push_str("</svg>\n");
    svg
}

fn render_panel(svg: &mut String, p: &Panel, top: f64) {
    let (x0, x1) = (MARGIN_LEFT, WIDTH - MARGIN_RIGHT);
    let (y0, y1) = (top + PANEL_HEIGHT - MARGIN_BOTTOM, top + MARGIN_TOP);
    let all = || p.series.iter().flat_map(|s| s.points.iter());
    let (xmin, xmax) = range(all().map(|q| q.0));
    let (ymin, ymax) = range(all().map(|q| q.1));
    let sx = |x: f64| x0 + (x - xmin) / (xmax - xmin) * (x1 - x0);
    let sy = |y: f64| y0 - (y - ymin) / (ymax - ymin) * (y0 - y1);

    let _ = writeln!(svg, r#"<g class="panel">"#);
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="14">{}</text>"#,
        (x0 + x1) / 2.0,
        top + MARGIN_TOP / 2.0 + 5.0,
        escape(&p.title)
    );
    let _ = writeln!(
        svg,
        r#"<path d="M{x0:.1},{y1:.1} L{x0:.1},{y0:.1} L{x1:.1},{y0:.1}" fill="none" stroke="black"/>"#
    );
    match &p.x_categories {
        Some(cats) => {
            for (i, c) in cats.iter().enumerate() {
                tick_x(svg, sx(i as f64), y0, c);
            }
        }
        None => {
            for i in 0..TICKS {
                let v = xmin + (xmax - xmin) * i as f64 / (TICKS - 1) as f64;
                tick_x(svg, sx(v), y0, &fmt_tick(v));
            }
        }
    }
    for i in 0..TICKS {
        let v = ymin + (ymax - ymin) * i as f64 / (TICKS - 1) as f64;
        let y = sy(v);
        let _ = writeln!(
            svg,
            r#"<line x1="{:.1}" y1="{y:.1}" x2="{x0:.1}" y2="{y:.1}" stroke="black"/><text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
            x0 - 5.0,
            x0 - 8.0,
            y + 4.0,
            escape(&fmt_tick(v))
        );
    }
    let _ = writeln!(
        svg,
        r#"<text class="x-label" x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
        (x0 + x1) / 2.0,
        y0 + 38.0,
        escape(&p.x_label)
    );
    let _ = writeln!(
        svg,
        r#"<text class="y-label" x="{:.1}" y="{:.1}" text-anchor="middle" transform="rotate(-90 {:.1} {:.1})">{}</text>"#,
        x0 - 52.0,
        (y0 + y1) / 2.0,
        x0 - 52.0,
        (y0 + y1) / 2.0,
        escape(&p.y_label)
    );

    for (i, s) in p.series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let label = escape(&s.label);
        let _ = writeln!(svg, r#"<g class="series" data-label="{label}" stroke="{color}" fill="{color}">"#);
        if s.points.len() > 1 {
            let pts: Vec<String> = s
                .points
                .iter()
                .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
                .collect();
            let _ = writeln!(svg, r#"<polyline fill="none" stroke-width="1.5" points="{}"/>"#, pts.join(" "));
        }
        // Markers only where they stay legible.
        if s.points.len() <= 40 {
            for &(x, y) in &s.points {
                let _ = writeln!(svg, r#"<circle class="marker" cx="{:.2}" cy="{:.2}" r="3"/>"#, sx(x), sy(y));
            }
        }
        svg.push_str("</g>\n");
        let ly = y1 + 18.0 * i as f64;
        let _ = writeln!(
            svg,
            r#"<g class="legend-entry"><line x1="{:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="2"/><text x="{:.1}" y="{:.1}">{label}</text></g>"#,
            x1 + 15.0,
            x1 + 35.0,
            x1 + 40.0,
            ly + 4.0
        );
    }
    svg.push_str("</g>\n");
}

fn tick_x(svg: &mut String, x: f64, y0: f64, text: &str) {
    let _ = writeln!(
        svg,
        r#"<line x1="{x:.1}" y1="{y0:.1}" x2="{x:.1}" y2="{:.1}" stroke="black"/><text x="{x:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
        y0 + 5.0,
        y0 + 18.0,
        escape(text)
    );
}

#[cfg(test)]
mod tests {
    use super::*;
    use hqlip::classical::Norm;

    fn row(epoch: usize, method: TrainMethod, norm: Norm, lambda: f64) -> MetricsRow {
        MetricsRow {
            epoch,
            method,
            norm,
            loss: 1.0 / (1.0 + epoch as f64),
            train_acc: 0.5,
            test_acc: 0.6,
            lip_classical: 2.0,
            lip_quantum: 1.0,
            lip_hybrid: 3.0 + epoch as f64 / (1.0 + lambda),
            lambda,
            seed: 0,
        }
    }

    #[test]
    fn empty_log_is_rejected() {
        assert!(matches!(emit_plot(&MetricsLog::default(), PlotKind::Auto), Err(Error::EmptyInput(_))));
    }

    #[test]
    fn auto_kind_follows_varying_columns() {
        let methods = MetricsLog {
            rows: vec![row(0, TrainMethod::Naive, Norm::L2, 0.0), row(0, TrainMethod::Pgd, Norm::L2, 0.0)],
        };
        assert_eq!(PlotKind::Auto.resolve(&methods), PlotKind::Methods);
        let lambdas = MetricsLog {
            rows: vec![row(0, TrainMethod::Lipreg, Norm::L2, 0.0), row(0, TrainMethod::Lipreg, Norm::L2, 1.0)],
        };
        assert_eq!(PlotKind::Auto.resolve(&lambdas), PlotKind::Lambda);
        assert_eq!("figure3".parse::<PlotKind>().unwrap(), PlotKind::Methods);
        assert!("pie".parse::<PlotKind>().is_err());
    }

    #[test]
    fn lambda_plot_uses_final_rows() {
        let mut rows = Vec::new();
        for lambda in [1.0, 0.0] {
            for e in 0..3 {
                rows.push(row(e, TrainMethod::Lipreg, Norm::L2, lambda));
            }
        }
        let p = lambda_panel(&MetricsLog { rows });
        assert_eq!(p.x_categories.unwrap(), ["0", "1"]);
        assert_eq!(p.series[0].points, [(0.0, 5.0), (1.0, 4.0)]);
    }

    #[test]
    fn ticks_are_compact() {
        assert_eq!(fmt_tick(0.5), "0.5");
        assert_eq!(fmt_tick(12.0), "12");
        assert_eq!(fmt_tick(2.5e-5), "2.50e-5");
    }
}
