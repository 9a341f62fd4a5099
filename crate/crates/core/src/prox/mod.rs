//! Proximal subproblems solved inside every ADMM edge update.
//!
//! The per-edge problem couples a pair of consensus copies `(u_jk, u_kj)`
//! and a discrepancy buffer `α_jk`:
//!
//! ```text
//! c1‖α‖_p + c2‖u_jk + α − u_kj‖₂ + (ρ/2)‖a − u_jk‖² + (ρ/2)‖b − u_kj‖²
//! ```
//!
//! [`fused_pair_update`] minimizes over the copies for a fixed buffer,
//! [`alpha_subproblem`] minimizes over the buffer for fixed copies, and
//! [`edge`] combines them into full edge updates.

mod alpha;
pub mod edge;
mod newton;
pub mod oracle;
mod pair;

pub use alpha::{alpha_subproblem, AlphaSolution, AlphaStatus, AlphaSubproblem};
pub use oracle::{oracle_minimize, oracle_minimize_with, OracleOptions};
pub use pair::{fused_pair_update, fused_pair_update_into, pair_objective, PairUpdate, PairUpdateInput};

use crate::linalg::lp_norm;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProxError {
    #[error("non-finite input to {0}")]
    NonFinite(&'static str),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// Σ_g ‖α_g‖_p over a collection of groups.
pub fn group_lp_norm<'a, I>(groups: I, p: f64) -> f64
where
    I: IntoIterator<Item = &'a [f64]>,
{
    groups.into_iter().map(|g| lp_norm(g, p)).sum()
}
