//! CSV-driven spatial regression: one row per location, a k-nearest-neighbour
//! network over the training locations, one ridge model per node.

use super::classification::Method;
use super::grids::SweepSpec;
use super::results::{EvalRecord, Metric};
use super::HarnessError;
use crate::graph::{knn_graph, NodePayload, Weighting};
use crate::objectives::NodeObjective;
use crate::solver::{predict_unseen, solve_warm, Mode, PredictStrategy, SolverParams, SolverState};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::path::Path;
use std::time::Instant;

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionTable {
    pub coords: Vec<Vec<f64>>,
    pub features: Vec<Vec<f64>>,
    pub targets: Vec<f64>,
}

impl RegressionTable {
    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    fn subset(&self, rows: &[usize]) -> RegressionTable {
        RegressionTable {
            coords: rows.iter().map(|&i| self.coords[i].clone()).collect(),
            features: rows.iter().map(|&i| self.features[i].clone()).collect(),
            targets: rows.iter().map(|&i| self.targets[i]).collect(),
        }
    }
}

/// Reads the named columns from a headed CSV file.
pub fn read_regression_csv(
    path: &Path,
    coord_columns: &[String],
    feature_columns: &[String],
    target_column: &str,
) -> Result<RegressionTable, HarnessError> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| HarnessError::csv(path, e))?;
    let header = reader.headers().map_err(|e| HarnessError::csv(path, e))?.clone();
    let index = |name: &str| {
        header
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| HarnessError::Invalid(format!("{}: no column `{name}`", path.display())))
    };
    let coord_idx = coord_columns.iter().map(|c| index(c)).collect::<Result<Vec<_>, _>>()?;
    let feat_idx = feature_columns.iter().map(|c| index(c)).collect::<Result<Vec<_>, _>>()?;
    let target_idx = index(target_column)?;
    let mut table = RegressionTable { coords: Vec::new(), features: Vec::new(), targets: Vec::new() };
    for (line, row) in reader.records().enumerate() {
        let row = row.map_err(|e| HarnessError::csv(path, e))?;
        let num = |i: usize| -> Result<f64, HarnessError> {
            let cell = row.get(i).unwrap_or("").trim();
            cell.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| {
                HarnessError::Invalid(format!("{} row {}: `{cell}` is not a finite number", path.display(), line + 2))
            })
        };
        table.coords.push(coord_idx.iter().map(|&i| num(i)).collect::<Result<_, _>>()?);
        table.features.push(feat_idx.iter().map(|&i| num(i)).collect::<Result<_, _>>()?);
        table.targets.push(num(target_idx)?);
    }
    Ok(table)
}

/// Per-column affine map to zero mean and unit variance.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    /// Constant columns keep a unit scale.
    pub fn fit(rows: &[Vec<f64>]) -> Standardizer {
        let d = rows.first().map_or(0, Vec::len);
        let n = rows.len().max(1) as f64;
        let mean: Vec<f64> = (0..d).map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n).collect();
        let scale = (0..d)
            .map(|j| {
                let var = rows.iter().map(|r| (r[j] - mean[j]).powi(2)).sum::<f64>() / n;
                if var > 1e-24 { var.sqrt() } else { 1.0 }
            })
            .collect();
        Standardizer { mean, scale }
    }

    pub fn apply(&self, row: &[f64]) -> Vec<f64> {
        row.iter().zip(self.mean.iter().zip(&self.scale)).map(|(v, (m, s))| (v - m) / s).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegressionConfig {
    pub coord_columns: Vec<String>,
    pub feature_columns: Vec<String>,
    pub target_column: String,
    pub test_fraction: f64,
    pub knn: usize,
    pub weighting: Weighting,
    pub c_ridge: f64,
    pub bias: bool,
    /// Neighbours used to predict a held-out location.
    pub predict_k: usize,
    pub solver: SolverParams,
    pub methods: Vec<Method>,
}

impl Default for RegressionConfig {
    fn default() -> Self {
        Self {
            coord_columns: vec!["latitude".into(), "longitude".into()],
            feature_columns: Vec::new(),
            target_column: "target".into(),
            test_fraction: 0.2,
            knn: 10,
            weighting: Weighting::Uniform,
            c_ridge: 0.1,
            bias: true,
            predict_k: 5,
            solver: SolverParams { eps_primal: 1e-3, eps_dual: 1e-3, ..SolverParams::default() },
            methods: Method::ALL.to_vec(),
        }
    }
}

/// A shuffled train/test split, standardised with training statistics only.
#[derive(Debug, Clone)]
pub struct PreparedRegression {
    pub train: RegressionTable,
    pub test: RegressionTable,
    pub feature_scaler: Standardizer,
    pub target_scaler: Standardizer,
}

pub fn prepare_regression(table: &RegressionTable, test_fraction: f64, seed: u64) -> Result<PreparedRegression, HarnessError> {
    if !(0.0..1.0).contains(&test_fraction) {
        return Err(HarnessError::Invalid(format!("test fraction {test_fraction} outside [0, 1)")));
    }
    let mut rows: Vec<usize> = (0..table.len()).collect();
    rows.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_test = (test_fraction * table.len() as f64).round() as usize;
    let (test_rows, train_rows) = rows.split_at(n_test);
    let mut train = table.subset(train_rows);
    let mut test = table.subset(test_rows);
    let feature_scaler = Standardizer::fit(&train.features);
    let target_rows: Vec<Vec<f64>> = train.targets.iter().map(|&y| vec![y]).collect();
    let target_scaler = Standardizer::fit(&target_rows);
    for t in [&mut train, &mut test] {
        t.features = t.features.iter().map(|r| feature_scaler.apply(r)).collect();
        t.targets = t.targets.iter().map(|&y| target_scaler.apply(&[y])[0]).collect();
    }
    Ok(PreparedRegression { train, test, feature_scaler, target_scaler })
}

fn mode_of(method: Method) -> Mode {
    match method {
        Method::Local => Mode::Local,
        Method::Global => Mode::Global,
        Method::NetworkLasso => Mode::NetworkLasso,
        Method::Danr => Mode::Danr,
    }
}

/// Test MSE (in standardised target units) of every (method, λ̃, μ) cell.
pub fn run_regression_experiment(
    table: &RegressionTable,
    cfg: &RegressionConfig,
    spec: &SweepSpec,
    seed: u64,
) -> Result<Vec<EvalRecord>, HarnessError> {
    let data = prepare_regression(table, cfg.test_fraction, seed)?;
    let payloads: Vec<NodePayload> = data
        .train
        .features
        .iter()
        .zip(&data.train.targets)
        .map(|(w, &y)| NodePayload::new(vec![w.clone()], vec![y]))
        .collect();
    let graph = knn_graph(&data.train.coords, cfg.knn, cfg.weighting, Some(payloads))?;
    let objectives: Vec<NodeObjective> = graph
        .payloads()
        .iter()
        .map(|p| NodeObjective::ridge(p.clone(), cfg.c_ridge, cfg.bias))
        .collect::<Result<_, _>>()
        .map_err(|e| HarnessError::Invalid(e.to_string()))?;
    let scorer = &objectives[0];

    let mse = |x: &[Vec<f64>]| -> Result<f64, HarnessError> {
        if data.test.is_empty() {
            return Ok(0.0);
        }
        let models = predict_unseen(&data.train.coords, x, &data.test.coords, cfg.predict_k, PredictStrategy::Average)?;
        let sum: f64 = models
            .iter()
            .zip(data.test.features.iter().zip(&data.test.targets))
            .map(|(m, (w, y))| (scorer.score(m, w) - y).powi(2))
            .sum();
        Ok(sum / data.test.len() as f64)
    };

    let mut out = Vec::new();
    for &method in &cfg.methods {
        let (levels, mus): (Vec<f64>, Vec<f64>) = match method {
            Method::Local | Method::Global => (vec![0.0], vec![1.0]),
            Method::NetworkLasso => (spec.lambda_grid.clone(), vec![1.0]),
            Method::Danr => (spec.lambda_grid.clone(), spec.mu_grid.clone()),
        };
        for &mu in &mus {
            let mut params = SolverParams { mode: mode_of(method), mu, ..cfg.solver.clone() };
            let mut warm: Option<SolverState> = None;
            for &lt in &levels {
                params.lambda = if method == Method::Danr { lt / mu } else { lt };
                let clock = Instant::now();
                let result = solve_warm(&graph, &objectives, &params, warm.as_ref());
                let secs = clock.elapsed().as_secs_f64();
                let base = EvalRecord {
                    experiment: "regression".into(),
                    method: method.name().into(),
                    seed,
                    lambda: lt,
                    mu,
                    noise: None,
                    snapshot: None,
                    metric: Metric::Mse,
                    value: f64::NAN,
                    clusters: 0,
                    nonzero_alpha: 0,
                    iterations: 0,
                    converged: false,
                    runtime_secs: secs,
                    error: None,
                };
                out.push(match result {
                    Ok((report, state)) => {
                        warm = Some(state);
                        EvalRecord {
                            value: mse(&report.x)?,
                            nonzero_alpha: report.nonzero_alpha(1e-6),
                            iterations: report.iterations,
                            converged: report.converged,
                            ..base
                        }
                    }
                    Err(e) => {
                        warm = None;
                        EvalRecord { error: Some(e.to_string()), ..base }
                    }
                });
            }
        }
    }
    Ok(out)
}
