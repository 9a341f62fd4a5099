use super::engine::EdgeUpdateRule;
use super::SolverError;
use serde::{Deserialize, Serialize};
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Danr,
    #[serde(alias = "nl")]
    NetworkLasso,
    /// Every node fits its own loss alone.
    Local,
    /// One shared model for all nodes.
    Global,
}

impl FromStr for Mode {
    type Err = SolverError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "danr" => Ok(Mode::Danr),
            "nl" | "network_lasso" | "network-lasso" => Ok(Mode::NetworkLasso),
            "local" => Ok(Mode::Local),
            "global" => Ok(Mode::Global),
            other => Err(SolverError::InvalidParameter(format!("unknown mode {other:?}"))),
        }
    }
}

impl Mode {
    pub fn name(&self) -> &'static str {
        match self {
            Mode::Danr => "danr",
            Mode::NetworkLasso => "network_lasso",
            Mode::Local => "local",
            Mode::Global => "global",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverParams {
    pub lambda: f64,
    pub mu: f64,
    pub p: f64,
    pub rho1: f64,
    /// Per-coordinate primal tolerance; the stopping test uses
    /// `eps_primal·√(2|E|·d)`.
    pub eps_primal: f64,
    /// Per-coordinate dual tolerance, scaled like `eps_primal`.
    pub eps_dual: f64,
    /// Inner tolerance for the alternating edge update.
    pub eps_inner: f64,
    pub max_outer_iters: usize,
    pub max_inner_iters: usize,
    pub mode: Mode,
    pub residual_balancing: bool,
    pub edge_update: EdgeUpdateRule,
}

impl Default for SolverParams {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            mu: 0.5,
            p: 3.0,
            rho1: 1.0,
            eps_primal: 1e-4,
            eps_dual: 1e-4,
            eps_inner: 1e-6,
            max_outer_iters: 1000,
            max_inner_iters: 50,
            mode: Mode::Danr,
            residual_balancing: false,
            edge_update: EdgeUpdateRule::Joint,
        }
    }
}

impl SolverParams {
    pub fn validate(&self) -> Result<(), SolverError> {
        let bad = |msg: String| Err(SolverError::InvalidParameter(msg));
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return bad(format!("lambda must be finite and >= 0, got {}", self.lambda));
        }
        if !(self.mu > 0.0 && self.mu <= 1.0) {
            return bad(format!("mu must lie in (0, 1], got {}", self.mu));
        }
        if !(self.p > 1.0 && self.p.is_finite()) {
            return bad(format!("p must be finite and > 1, got {}", self.p));
        }
        if !(self.rho1 > 0.0 && self.rho1.is_finite()) {
            return bad(format!("rho1 must be positive, got {}", self.rho1));
        }
        for (name, v) in [("eps_primal", self.eps_primal), ("eps_dual", self.eps_dual), ("eps_inner", self.eps_inner)] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        if self.max_outer_iters == 0 || self.max_inner_iters == 0 {
            return bad("iteration caps must be positive".into());
        }
        Ok(())
    }
}
