use serde::{Deserialize, Serialize};

/// `start·ratio^n` for `n = 0, 1, …` up to the first value `≥ end`.
pub fn geometric_grid(start: f64, ratio: f64, end: f64) -> Vec<f64> {
    assert!(start > 0.0 && ratio > 1.0 && end >= start, "invalid geometric grid");
    let mut out = vec![start];
    let mut n = 0;
    while *out.last().unwrap() < end * (1.0 - 1e-12) {
        n += 1;
        out.push(start * ratio.powi(n));
    }
    out
}

/// `start + n·step` up to and including `end`, rounded to 12 decimals.
pub fn arithmetic_grid(start: f64, step: f64, end: f64) -> Vec<f64> {
    assert!(step > 0.0 && end >= start, "invalid arithmetic grid");
    let count = ((end - start) / step + 1e-9).floor() as usize + 1;
    (0..count).map(|n| ((start + n as f64 * step) * 1e12).round() / 1e12).collect()
}

pub fn default_lambda_grid() -> Vec<f64> {
    geometric_grid(1e-3, 1.3, 1e2)
}

pub fn default_mu_grid() -> Vec<f64> {
    arithmetic_grid(0.3, 0.02, 1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSpec {
    /// Penalty levels `λ̃`; DANR cells solve with `λ = λ̃/μ`.
    pub lambda_grid: Vec<f64>,
    pub mu_grid: Vec<f64>,
    pub seeds: Vec<u64>,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self { lambda_grid: default_lambda_grid(), mu_grid: default_mu_grid(), seeds: (0..10).collect() }
    }
}
