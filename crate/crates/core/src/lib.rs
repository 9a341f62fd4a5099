//! Discrepancy-aware network regularization.
//!
//! Each node `j` of a graph owns a convex loss `f_j(x_j)`. Neighbouring models
//! are pulled together by a sum-of-norms penalty whose edge terms carry a
//! discrepancy buffer `α_jk`:
//!
//! ```text
//! Σ_j f_j(x_j) + λ [ μ Σ_(j,k) ω_jk ‖x_j + α_jk − x_k‖₂ + (1 − μ) Σ_(j,k) ‖α_jk‖_p ]
//! ```
//!
//! The buffers absorb genuine model differences across edges whose weights are
//! wrong, so the fusion penalty is not spent on them. With `α ≡ 0` the problem
//! is the network lasso. [`temporal`] extends the model to snapshot sequences
//! with temporal buffers `β`.

pub mod graph;
pub mod harness;
pub mod linalg;
pub mod objectives;
pub mod prox;
pub mod solver;
pub mod temporal;
