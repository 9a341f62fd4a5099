use super::classification::ClassificationConfig;
use super::grids::SweepSpec;
use super::regression::RegressionConfig;
use super::scale::ScaleConfig;
use super::temporal::TemporalConfig;
use super::HarnessError;
use crate::solver::SolverParams;
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossChoice {
    Svm,
    Ridge,
}

/// Settings for a single solve on a graph file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveConfig {
    pub solver: SolverParams,
    pub loss: LossChoice,
    /// SVM `C` or ridge coefficient.
    pub c: f64,
    pub bias: bool,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self { solver: SolverParams::default(), loss: LossChoice::Svm, c: 0.75, bias: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseConfig {
    pub levels: Vec<f64>,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self { levels: vec![0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6] }
    }
}

/// Everything the command-line experiments read from a TOML file. Missing
/// sections and keys keep their defaults; unknown keys are rejected.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub solve: SolveConfig,
    /// Grids and seeds shared by every sweep.
    pub sweep: SweepSpec,
    pub classification: ClassificationConfig,
    pub noise: NoiseConfig,
    pub temporal: TemporalConfig,
    pub scale: ScaleConfig,
    pub regression: RegressionConfig,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, HarnessError> {
        toml::from_str(text).map_err(|e| HarnessError::Invalid(format!("config: {}", e.message())))
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        toml::from_str(&text).map_err(|e| HarnessError::Invalid(format!("{}: {}", path.display(), e.message())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::Mode;

    #[test]
    fn empty_document_gives_defaults() {
        assert_eq!(ExperimentConfig::parse("").unwrap(), ExperimentConfig::default());
    }

    #[test]
    fn nested_sections_override_single_fields() {
        let cfg = ExperimentConfig::parse(
            "[sweep]\nseeds = [4, 5]\n\n[classification.generator]\nnoise_std = 2.0\n\n\
             [classification.solver]\neps_primal = 1e-3\n\n[solve.solver]\nmode = \"nl\"\n",
        )
        .unwrap();
        assert_eq!(cfg.sweep.seeds, vec![4, 5]);
        assert_eq!(cfg.sweep.mu_grid.len(), 36);
        assert_eq!(cfg.classification.generator.noise_std, 2.0);
        assert_eq!(cfg.classification.generator.nodes_per_community, 20);
        assert_eq!(cfg.classification.solver.eps_primal, 1e-3);
        assert_eq!(cfg.solve.solver.mode, Mode::NetworkLasso);
    }

    #[test]
    fn unknown_keys_and_bad_values_are_rejected() {
        assert!(ExperimentConfig::parse("[sweep]\nseedz = [1]\n").is_err());
        assert!(ExperimentConfig::parse("[solve]\nloss = \"hinge\"\n").is_err());
        assert!(ExperimentConfig::parse("[sweep\n").is_err());
    }
}
