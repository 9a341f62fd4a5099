//! Static line charts of sweep results, each written next to the CSV of the
//! plotted points.

use super::classification::summarize_curves;
use super::results::{EvalRecord, Metric};
use super::HarnessError;
use plotters::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlotKind {
    AccuracyVsLambda,
    AccuracyVsMu,
    AccuracyVsNoise,
    MseVsSnapshot,
}

impl PlotKind {
    pub const ALL: [PlotKind; 4] =
        [PlotKind::AccuracyVsLambda, PlotKind::AccuracyVsMu, PlotKind::AccuracyVsNoise, PlotKind::MseVsSnapshot];

    pub fn name(&self) -> &'static str {
        match self {
            PlotKind::AccuracyVsLambda => "accuracy_vs_lambda",
            PlotKind::AccuracyVsMu => "accuracy_vs_mu",
            PlotKind::AccuracyVsNoise => "accuracy_vs_noise",
            PlotKind::MseVsSnapshot => "mse_vs_snapshot",
        }
    }

    fn axes(&self) -> (&'static str, &'static str) {
        match self {
            PlotKind::AccuracyVsLambda => ("lambda", "accuracy"),
            PlotKind::AccuracyVsMu => ("mu", "accuracy"),
            PlotKind::AccuracyVsNoise => ("noise", "accuracy"),
            PlotKind::MseVsSnapshot => ("snapshot", "mse"),
        }
    }
}

impl FromStr for PlotKind {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PlotKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| HarnessError::Invalid(format!("unknown plot kind `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesPoint {
    pub series: String,
    pub x: f64,
    pub y: f64,
}

fn usable(r: &EvalRecord, metric: Metric) -> bool {
    r.metric == metric && r.error.is_none() && r.value.is_finite()
}

fn mean_by<K: Ord>(items: impl Iterator<Item = (K, f64)>) -> BTreeMap<K, f64> {
    let mut acc: BTreeMap<K, (f64, usize)> = BTreeMap::new();
    for (k, v) in items {
        let e = acc.entry(k).or_insert((0.0, 0));
        e.0 += v;
        e.1 += 1;
    }
    acc.into_iter().map(|(k, (s, n))| (k, s / n as f64)).collect()
}

/// The points a chart of `kind` shows, ordered by series then `x`.
///
/// * `accuracy_vs_lambda`: seed-mean accuracy per `λ̃`, best `μ` per seed
///   for DANR; one series per method (and noise level, if any).
/// * `accuracy_vs_mu`: DANR seed-mean accuracy per `μ` at its best `λ̃`.
/// * `accuracy_vs_noise`: peak of each method's seed-mean curve per level.
/// * `mse_vs_snapshot`: seed-mean MSE per snapshot and variant.
pub fn plot_series(records: &[EvalRecord], kind: PlotKind) -> Vec<SeriesPoint> {
    let label = |method: &str, noise: Option<f64>| match noise {
        Some(n) => format!("{method} @ {n}"),
        None => method.to_string(),
    };
    let mut out = Vec::new();
    match kind {
        PlotKind::AccuracyVsLambda => {
            let rows: Vec<EvalRecord> = records
                .iter()
                .filter(|r| usable(r, Metric::Accuracy) && r.method != "local" && r.method != "global")
                .cloned()
                .collect();
            for c in summarize_curves(&rows) {
                out.push(SeriesPoint { series: label(&c.method, c.noise), x: c.lambda, y: c.mean });
            }
        }
        PlotKind::AccuracyVsMu => {
            let cells = mean_by(
                records
                    .iter()
                    .filter(|r| usable(r, Metric::Accuracy) && r.method == "danr")
                    .map(|r| ((r.noise.map(f64::to_bits), r.mu.to_bits(), r.lambda.to_bits()), r.value)),
            );
            let mut best: BTreeMap<(Option<u64>, u64), f64> = BTreeMap::new();
            for ((noise, mu, _), v) in cells {
                let slot = best.entry((noise, mu)).or_insert(f64::NEG_INFINITY);
                *slot = slot.max(v);
            }
            for ((noise, mu), y) in best {
                out.push(SeriesPoint { series: label("danr", noise.map(f64::from_bits)), x: f64::from_bits(mu), y });
            }
        }
        PlotKind::AccuracyVsNoise => {
            let rows: Vec<EvalRecord> =
                records.iter().filter(|r| usable(r, Metric::Accuracy) && r.noise.is_some()).cloned().collect();
            let mut best: BTreeMap<(String, u64), f64> = BTreeMap::new();
            for c in summarize_curves(&rows) {
                let slot = best.entry((c.method, c.noise.unwrap_or(0.0).to_bits())).or_insert(f64::NEG_INFINITY);
                *slot = slot.max(c.mean);
            }
            for ((series, noise), y) in best {
                out.push(SeriesPoint { series, x: f64::from_bits(noise), y });
            }
        }
        PlotKind::MseVsSnapshot => {
            let means = mean_by(
                records
                    .iter()
                    .filter(|r| usable(r, Metric::Mse))
                    .filter_map(|r| r.snapshot.map(|s| ((r.method.clone(), s), r.value))),
            );
            for ((series, s), y) in means {
                out.push(SeriesPoint { series, x: s as f64, y });
            }
        }
    }
    out.sort_by(|a, b| a.series.cmp(&b.series).then(a.x.total_cmp(&b.x)));
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlotFiles {
    pub svg: PathBuf,
    pub csv: PathBuf,
}

/// Writes `<kind>.svg` and `<kind>.csv` into `out_dir`.
pub fn emit_plots(records: &[EvalRecord], kind: PlotKind, out_dir: &Path) -> Result<PlotFiles, HarnessError> {
    let points = plot_series(records, kind);
    if points.is_empty() {
        return Err(HarnessError::EmptyResults(kind.name().into()));
    }
    std::fs::create_dir_all(out_dir).map_err(|e| HarnessError::io(out_dir, e))?;
    let files = PlotFiles {
        svg: out_dir.join(format!("{}.svg", kind.name())),
        csv: out_dir.join(format!("{}.csv", kind.name())),
    };
    let mut w = csv::Writer::from_path(&files.csv).map_err(|e| HarnessError::csv(&files.csv, e))?;
    for p in &points {
        w.serialize(p).map_err(|e| HarnessError::csv(&files.csv, e))?;
    }
    w.flush().map_err(|e| HarnessError::io(&files.csv, e))?;
    render_svg(&files.svg, kind, &points)
        .map_err(|e| HarnessError::Invalid(format!("rendering {}: {e}", files.svg.display())))?;
    Ok(files)
}

fn span(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if hi - lo > 1e-12 {
        let pad = 0.05 * (hi - lo);
        (lo - pad, hi + pad)
    } else {
        let pad = 0.5 * lo.abs().max(1e-3);
        (lo - pad, hi + pad)
    }
}

fn render_svg(path: &Path, kind: PlotKind, points: &[SeriesPoint]) -> Result<(), Box<dyn std::error::Error>> {
    let mut series: Vec<(&str, Vec<(f64, f64)>)> = Vec::new();
    for p in points {
        match series.last_mut() {
            Some((name, pts)) if *name == p.series => pts.push((p.x, p.y)),
            _ => series.push((&p.series, vec![(p.x, p.y)])),
        }
    }
    let log_x = kind == PlotKind::AccuracyVsLambda && points.iter().all(|p| p.x > 0.0);
    let fx = |x: f64| if log_x { x.log10() } else { x };
    let (x0, x1) = span(points.iter().map(|p| fx(p.x)));
    let (y0, y1) = span(points.iter().map(|p| p.y));
    let (xlabel, ylabel) = kind.axes();

    let root = SVGBackend::new(path, (720, 480)).into_drawing_area();
    root.fill(&WHITE)?;
    let mut chart = ChartBuilder::on(&root)
        .caption(kind.name(), ("sans-serif", 20))
        .margin(12)
        .x_label_area_size(36)
        .y_label_area_size(52)
        .build_cartesian_2d(x0..x1, y0..y1)?;
    let xfmt = |v: &f64| if log_x { format!("1e{v:.1}") } else { format!("{v:.2}") };
    chart
        .configure_mesh()
        .x_desc(if log_x { format!("log10 {xlabel}") } else { xlabel.to_string() })
        .y_desc(ylabel)
        .x_label_formatter(&xfmt)
        .draw()?;
    for (i, (name, pts)) in series.iter().enumerate() {
        let color = Palette99::pick(i).to_rgba();
        let xy: Vec<(f64, f64)> = pts.iter().map(|&(x, y)| (fx(x), y)).collect();
        chart
            .draw_series(LineSeries::new(xy.clone(), color.stroke_width(2)))?
            .label(*name)
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 16, y)], color.stroke_width(2)));
        chart.draw_series(xy.into_iter().map(|p| Circle::new(p, 3, color.filled())))?;
    }
    chart.configure_series_labels().background_style(WHITE.mix(0.8)).border_style(BLACK).draw()?;
    root.present()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(method: &str, seed: u64, lambda: f64, mu: f64, value: f64) -> EvalRecord {
        EvalRecord {
            experiment: "classification".into(),
            method: method.into(),
            seed,
            lambda,
            mu,
            noise: None,
            snapshot: None,
            metric: Metric::Accuracy,
            value,
            clusters: 1,
            nonzero_alpha: 0,
            iterations: 1,
            converged: true,
            runtime_secs: 0.0,
            error: None,
        }
    }

    #[test]
    fn single_point_gives_a_one_marker_chart() {
        let dir = tempfile::tempdir().unwrap();
        let files = emit_plots(&[rec("network_lasso", 0, 0.1, 1.0, 0.7)], PlotKind::AccuracyVsLambda, dir.path()).unwrap();
        let svg = std::fs::read_to_string(&files.svg).unwrap();
        assert!(svg.starts_with("<svg") || svg.starts_with("<?xml"));
        assert_eq!(svg.matches("<circle").count(), 1);
        let csv = std::fs::read_to_string(&files.csv).unwrap();
        assert_eq!(csv.lines().count(), 2);
    }

    #[test]
    fn mismatched_kind_is_empty() {
        let dir = tempfile::tempdir().unwrap();
        let err = emit_plots(&[rec("danr", 0, 0.1, 0.5, 0.7)], PlotKind::MseVsSnapshot, dir.path()).unwrap_err();
        assert!(matches!(err, HarnessError::EmptyResults(_)));
        assert!(matches!(emit_plots(&[], PlotKind::AccuracyVsMu, dir.path()), Err(HarnessError::EmptyResults(_))));
    }

    #[test]
    fn danr_lambda_curve_takes_best_mu_per_seed() {
        let rs = vec![
            rec("danr", 0, 1.0, 0.4, 0.6),
            rec("danr", 0, 1.0, 0.6, 0.8),
            rec("danr", 1, 1.0, 0.4, 0.7),
            rec("danr", 1, 1.0, 0.6, 0.5),
        ];
        let pts = plot_series(&rs, PlotKind::AccuracyVsLambda);
        assert_eq!(pts.len(), 1);
        assert!((pts[0].y - 0.75).abs() < 1e-12);
        let mu = plot_series(&rs, PlotKind::AccuracyVsMu);
        assert_eq!(mu.iter().map(|p| p.x).collect::<Vec<_>>(), vec![0.4, 0.6]);
        assert!(mu.iter().all(|p| (p.y - 0.65).abs() < 1e-12));
    }

    #[test]
    fn kinds_parse_from_names() {
        for k in PlotKind::ALL {
            assert_eq!(k.name().parse::<PlotKind>().unwrap(), k);
        }
        assert!("pie".parse::<PlotKind>().is_err());
    }
}
