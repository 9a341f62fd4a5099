use super::ProxError;
use crate::linalg::{all_finite, dist2_sq};

/// Inputs of the consensus-pair subproblem
/// `min c‖u_jk + α − u_kj‖₂ + (ρ/2)(‖a − u_jk‖² + ‖b − u_kj‖²)`.
#[derive(Debug, Clone, Copy)]
pub struct PairUpdateInput<'a> {
    pub a: &'a [f64],
    pub b: &'a [f64],
    pub alpha: &'a [f64],
    pub c: f64,
    pub rho: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairUpdate {
    pub u_jk: Vec<f64>,
    pub u_kj: Vec<f64>,
    /// Fusion coefficient; 1/2 means the pair is fully fused (`u_jk + α = u_kj`).
    pub theta: f64,
}

/// Objective of the pair subproblem at `(u_jk, u_kj)`.
pub fn pair_objective(inp: &PairUpdateInput<'_>, u_jk: &[f64], u_kj: &[f64]) -> f64 {
    let gap: f64 = u_jk
        .iter()
        .zip(inp.alpha)
        .zip(u_kj)
        .map(|((x, a), y)| (x + a - y) * (x + a - y))
        .sum::<f64>()
        .sqrt();
    inp.c * gap + 0.5 * inp.rho * (dist2_sq(inp.a, u_jk) + dist2_sq(inp.b, u_kj))
}

/// Closed-form minimizer of the pair subproblem.
///
/// `θ = min(c / (ρ‖a − b + α‖₂), 1/2)`, with `θ = 1/2` when the gap vanishes, and
///
/// ```text
/// u_jk = (1 − θ)a + θb − θα
/// u_kj = θa + (1 − θ)b + θα
/// ```
pub fn fused_pair_update(inp: &PairUpdateInput<'_>) -> Result<PairUpdate, ProxError> {
    let d = inp.a.len();
    for len in [inp.b.len(), inp.alpha.len()] {
        if len != d {
            return Err(ProxError::DimensionMismatch { expected: d, got: len });
        }
    }
    if !(all_finite(inp.a) && all_finite(inp.b) && all_finite(inp.alpha))
        || !inp.c.is_finite()
        || !inp.rho.is_finite()
    {
        return Err(ProxError::NonFinite("fused_pair_update"));
    }
    if inp.c < 0.0 || inp.rho <= 0.0 {
        return Err(ProxError::InvalidParameter(format!(
            "need c >= 0 and rho > 0 (c = {}, rho = {})",
            inp.c, inp.rho
        )));
    }
    let mut u_jk = vec![0.0; d];
    let mut u_kj = vec![0.0; d];
    let theta = fused_pair_update_into(inp.a, inp.b, inp.alpha, inp.c, inp.rho, &mut u_jk, &mut u_kj);
    Ok(PairUpdate { u_jk, u_kj, theta })
}

/// Allocation-free form of [`fused_pair_update`]; inputs are assumed valid.
/// Returns θ.
pub fn fused_pair_update_into(
    a: &[f64],
    b: &[f64],
    alpha: &[f64],
    c: f64,
    rho: f64,
    u_jk: &mut [f64],
    u_kj: &mut [f64],
) -> f64 {
    let theta = pair_theta(a, b, alpha, c, rho);
    for i in 0..a.len() {
        u_jk[i] = (1.0 - theta) * a[i] + theta * b[i] - theta * alpha[i];
        u_kj[i] = theta * a[i] + (1.0 - theta) * b[i] + theta * alpha[i];
    }
    theta
}

fn pair_theta(a: &[f64], b: &[f64], alpha: &[f64], c: f64, rho: f64) -> f64 {
    if c == 0.0 {
        return 0.0;
    }
    let gap: f64 = a
        .iter()
        .zip(b)
        .zip(alpha)
        .map(|((x, y), z)| (x - y + z) * (x - y + z))
        .sum::<f64>()
        .sqrt();
    if gap == 0.0 {
        return 0.5;
    }
    (c / (rho * gap)).min(0.5)
}
