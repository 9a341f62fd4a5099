use super::HarnessError;
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Accuracy,
    Mse,
}

/// One evaluated cell of an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub experiment: String,
    /// Method label (`local`, `global`, `network_lasso`, `danr`, `t_son`, …).
    pub method: String,
    pub seed: u64,
    /// Penalty level `λ̃` (0 for methods without one).
    pub lambda: f64,
    pub mu: f64,
    /// Fraction of inter-community edges, when the experiment varies it.
    pub noise: Option<f64>,
    /// 1-based snapshot number for temporal experiments.
    pub snapshot: Option<usize>,
    pub metric: Metric,
    pub value: f64,
    pub clusters: usize,
    pub nonzero_alpha: usize,
    pub iterations: usize,
    pub converged: bool,
    pub runtime_secs: f64,
    /// Solver failure recorded instead of aborting the sweep.
    pub error: Option<String>,
}

impl EvalRecord {
    pub fn is_valid(&self) -> bool {
        match self.metric {
            Metric::Accuracy => (0.0..=1.0).contains(&self.value),
            Metric::Mse => self.value >= 0.0,
        }
    }

    /// Equality of everything except the wall-clock runtime.
    pub fn same_cell_value(&self, other: &EvalRecord) -> bool {
        EvalRecord { runtime_secs: 0.0, ..self.clone() } == EvalRecord { runtime_secs: 0.0, ..other.clone() }
    }
}

pub fn write_records(path: &Path, records: &[EvalRecord]) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| HarnessError::csv(path, e))?;
    for r in records {
        w.serialize(r).map_err(|e| HarnessError::csv(path, e))?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))
}

pub fn read_records(path: &Path) -> Result<Vec<EvalRecord>, HarnessError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| HarnessError::csv(path, e))?;
    r.deserialize().collect::<Result<Vec<EvalRecord>, _>>().map_err(|e| HarnessError::csv(path, e))
}

/// Mean of `value` over the records selected by `pred`.
pub fn mean_value<F: Fn(&EvalRecord) -> bool>(records: &[EvalRecord], pred: F) -> Option<f64> {
    let vals: Vec<f64> = records.iter().filter(|r| pred(r)).map(|r| r.value).collect();
    if vals.is_empty() { None } else { Some(vals.iter().sum::<f64>() / vals.len() as f64) }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(i: usize) -> EvalRecord {
        EvalRecord {
            experiment: "classification".into(),
            method: if i % 2 == 0 { "danr" } else { "network_lasso" }.into(),
            seed: i as u64,
            lambda: 1e-3 * 1.3f64.powi(i as i32),
            mu: 0.3 + 0.02 * i as f64,
            noise: if i % 3 == 0 { None } else { Some(0.1 * i as f64) },
            snapshot: if i % 2 == 0 { Some(i) } else { None },
            metric: if i % 2 == 0 { Metric::Accuracy } else { Metric::Mse },
            value: 1.0 / (i as f64 + 3.0),
            clusters: i,
            nonzero_alpha: 2 * i,
            iterations: 10 + i,
            converged: i % 2 == 0,
            runtime_secs: 0.1 * i as f64 + 1e-7,
            error: if i == 4 { Some("solver failed, with comma".into()) } else { None },
        }
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let records: Vec<EvalRecord> = (0..8).map(sample).collect();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        write_records(&path, &records).unwrap();
        assert_eq!(read_records(&path).unwrap(), records);
    }

    #[test]
    fn validity() {
        let mut r = sample(0);
        r.value = 1.5;
        assert!(!r.is_valid());
        r.metric = Metric::Mse;
        assert!(r.is_valid());
        r.value = -0.1;
        assert!(!r.is_valid());
    }
}
