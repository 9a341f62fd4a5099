//! Full edge updates built on the pair and buffer subproblems.
//!
//! The joint edge problem
//!
//! ```text
//! min c1‖α‖_p + c2‖u_jk + α − u_kj‖₂ + (ρ/2)‖a − u_jk‖² + (ρ/2)‖b − u_kj‖²
//! ```
//!
//! reduces, after minimizing the copies out in closed form, to
//! `min_α c1‖α‖_p + H(α + a − b)` with `H` a Huber function of slope `c2` and
//! curvature `ρ/2`. [`joint_edge_update`] solves that reduced problem and
//! recovers the copies with [`fused_pair_update_into`].
//! [`alternating_edge_update`] runs plain block-coordinate descent between the
//! two subproblems instead.

use super::alpha::{alpha_subproblem, AlphaSubproblem, INTERIOR_MAX_ITER};
use super::newton::{self, ShiftedHuber};
use super::pair::fused_pair_update_into;
use crate::linalg::{dist2, dual_exponent, lp_norm, norm2};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct EdgeOutcome {
    pub iterations: usize,
    pub converged: bool,
}

/// Exact minimizer of the joint edge problem. `alpha` carries the warm start
/// in and the solution out.
#[allow(clippy::too_many_arguments)]
pub fn joint_edge_update(
    a: &[f64],
    b: &[f64],
    c1: f64,
    c2: f64,
    rho: f64,
    p: f64,
    alpha: &mut [f64],
    u_jk: &mut [f64],
    u_kj: &mut [f64],
) -> EdgeOutcome {
    let shift: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let out = solve_buffer(&shift, c1, c2, 0.5 * rho, p, alpha);
    fused_pair_update_into(a, b, alpha, c2, rho, u_jk, u_kj);
    out
}

/// Edge problem with one side pinned to `anchor`:
///
/// ```text
/// min c1‖β‖_p + c2‖anchor + β − v‖₂ + (ρ/2)‖b − v‖²
/// ```
#[allow(clippy::too_many_arguments)]
pub fn anchored_edge_update(
    anchor: &[f64],
    b: &[f64],
    c1: f64,
    c2: f64,
    rho: f64,
    p: f64,
    beta: &mut [f64],
    v: &mut [f64],
) -> EdgeOutcome {
    let shift: Vec<f64> = anchor.iter().zip(b).map(|(x, y)| x - y).collect();
    let out = solve_buffer(&shift, c1, c2, rho, p, beta);
    let target: Vec<f64> = anchor.iter().zip(beta.iter()).map(|(x, y)| x + y).collect();
    anchored_copy(&target, b, c2, rho, v);
    out
}

/// `argmin_v c‖target − v‖₂ + (ρ/2)‖b − v‖²`
pub fn anchored_copy(target: &[f64], b: &[f64], c: f64, rho: f64, v: &mut [f64]) {
    let dist = dist2(target, b);
    let reach = c / rho;
    if dist <= reach {
        v.copy_from_slice(target);
    } else {
        let s = reach / dist;
        for i in 0..v.len() {
            v[i] = b[i] + s * (target[i] - b[i]);
        }
    }
}

/// `argmin c‖u_jk − u_kj‖² + (ρ/2)(‖a − u_jk‖² + ‖b − u_kj‖²)`
pub fn squared_pair_update(a: &[f64], b: &[f64], c: f64, rho: f64, u_jk: &mut [f64], u_kj: &mut [f64]) {
    let shrink = rho / (rho + 4.0 * c);
    for i in 0..a.len() {
        let mid = 0.5 * (a[i] + b[i]);
        let half = 0.5 * shrink * (a[i] - b[i]);
        u_jk[i] = mid + half;
        u_kj[i] = mid - half;
    }
}

/// `argmin_v c‖anchor − v‖² + (ρ/2)‖b − v‖²`
pub fn squared_anchored_update(anchor: &[f64], b: &[f64], c: f64, rho: f64, v: &mut [f64]) {
    let w = 2.0 * c / (rho + 2.0 * c);
    for i in 0..v.len() {
        v[i] = (1.0 - w) * b[i] + w * anchor[i];
    }
}

/// Block-coordinate descent on the joint edge problem: alternate the closed
/// pair update and the buffer subproblem until both blocks move less than `eps`.
///
/// This can stall at the fused kink (`u_jk + α = u_kj`) short of the joint
/// minimum; [`joint_edge_update`] does not.
#[allow(clippy::too_many_arguments)]
pub fn alternating_edge_update(
    a: &[f64],
    b: &[f64],
    c1: f64,
    c2: f64,
    rho: f64,
    p: f64,
    eps: f64,
    max_inner: usize,
    alpha: &mut [f64],
    u_jk: &mut [f64],
    u_kj: &mut [f64],
) -> EdgeOutcome {
    let d = a.len();
    let mut prev_jk = u_jk.to_vec();
    let mut prev_kj = u_kj.to_vec();
    let mut v = vec![0.0; d];
    for it in 0..max_inner {
        fused_pair_update_into(a, b, alpha, c2, rho, u_jk, u_kj);
        for i in 0..d {
            v[i] = u_jk[i] - u_kj[i];
        }
        let sub = AlphaSubproblem { v: &v, c1, c2, p };
        let next = match alpha_subproblem(&sub, alpha) {
            Ok(s) => s.alpha,
            Err(_) => return EdgeOutcome { iterations: it + 1, converged: false },
        };
        let du = (dist2(u_jk, &prev_jk).powi(2) + dist2(u_kj, &prev_kj).powi(2)).sqrt();
        let da = dist2(&next, alpha);
        alpha.copy_from_slice(&next);
        prev_jk.copy_from_slice(u_jk);
        prev_kj.copy_from_slice(u_kj);
        if it > 0 && du <= eps && da <= eps {
            return EdgeOutcome { iterations: it + 1, converged: true };
        }
    }
    fused_pair_update_into(a, b, alpha, c2, rho, u_jk, u_kj);
    EdgeOutcome { iterations: max_inner, converged: false }
}

/// Minimizes `c1‖α‖_p + H(α + shift)` where `H` has slope `c2` and curvature `q`.
fn solve_buffer(shift: &[f64], c1: f64, c2: f64, q: f64, p: f64, alpha: &mut [f64]) -> EdgeOutcome {
    let done = EdgeOutcome { iterations: 0, converged: true };
    if c1 == 0.0 && c2 == 0.0 {
        return done;
    }
    if c1 == 0.0 {
        for (a, s) in alpha.iter_mut().zip(shift) {
            *a = -s;
        }
        return done;
    }
    let n = norm2(shift);
    let huber = ShiftedHuber { shift, c: c2, q };
    // ∇H(shift) scale: q inside the quadratic zone, c2/‖shift‖ beyond it.
    let slope = if n <= huber.threshold() { q } else { c2 / n };
    if c2 == 0.0 || n == 0.0 || slope * lp_norm(shift, dual_exponent(p)) <= c1 {
        alpha.iter_mut().for_each(|a| *a = 0.0);
        return done;
    }
    if p == 2.0 || shift.len() == 1 {
        // α = −(‖shift‖ − c1/q) shift/‖shift‖; the zero test failing implies c1 < c2.
        let keep = (c1 / q) / n;
        for (a, s) in alpha.iter_mut().zip(shift) {
            *a = -(1.0 - keep) * s;
        }
        return done;
    }

    // For c1 < c2 the minimizer lies where H is quadratic; a warm start
    // outside that zone can leave Newton on a flat, singular region.
    let warm_ok = norm2(alpha) > 0.0
        && alpha.iter().all(|v| v.is_finite())
        && (c1 >= c2 || dist_shifted(alpha, shift) <= huber.threshold());
    let start = if warm_ok {
        alpha.to_vec()
    } else {
        let keep = ((c1 / q) / n).min(0.5);
        shift.iter().map(|s| -(1.0 - keep) * s).collect()
    };
    let tol = 1e-10 * (c1 + c2);
    let out = newton::minimize(c1, p, &huber, start, INTERIOR_MAX_ITER, tol);
    alpha.copy_from_slice(&out.alpha);
    EdgeOutcome { iterations: out.iterations, converged: out.converged }
}

fn dist_shifted(alpha: &[f64], shift: &[f64]) -> f64 {
    alpha.iter().zip(shift).map(|(a, s)| (a + s) * (a + s)).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prox::{pair_objective, PairUpdateInput};

    fn joint_objective(a: &[f64], b: &[f64], c1: f64, c2: f64, rho: f64, p: f64, u1: &[f64], u2: &[f64], al: &[f64]) -> f64 {
        let inp = PairUpdateInput { a, b, alpha: al, c: c2, rho };
        pair_objective(&inp, u1, u2) + c1 * lp_norm(al, p)
    }

    #[test]
    fn joint_update_escapes_the_fused_kink() {
        // Alternating descent from α = 0 fuses both copies at 1 and stays there
        // (objective 1.0); the joint optimum buffers most of the gap:
        // α = 2 − c1/(ρ/2) = 1.8, objective 0.18 + 0.01 = 0.19.
        let (a, b) = ([0.0], [2.0]);
        let (c1, c2, rho, p) = (0.1, 10.0, 1.0, 3.0);

        let (mut al, mut u1, mut u2) = ([0.0], [0.0], [0.0]);
        alternating_edge_update(&a, &b, c1, c2, rho, p, 1e-10, 50, &mut al, &mut u1, &mut u2);
        let stalled = joint_objective(&a, &b, c1, c2, rho, p, &u1, &u2, &al);
        assert!((stalled - 1.0).abs() < 1e-12);

        let (mut al, mut u1, mut u2) = ([0.0], [0.0], [0.0]);
        joint_edge_update(&a, &b, c1, c2, rho, p, &mut al, &mut u1, &mut u2);
        let best = joint_objective(&a, &b, c1, c2, rho, p, &u1, &u2, &al);
        assert!((best - 0.19).abs() < 1e-12, "{best}");
        assert!((al[0] - 1.8).abs() < 1e-12);
        assert!((u1[0] - 0.1).abs() < 1e-12 && (u2[0] - 1.9).abs() < 1e-12);
    }

    #[test]
    fn joint_update_matches_alternating_away_from_kink() {
        let a = [0.4, -1.0, 0.3];
        let b = [1.5, 0.2, -0.6];
        let (c1, c2, rho, p) = (0.7, 0.5, 1.0, 3.0);
        let (mut al, mut u1, mut u2) = ([0.0; 3], [0.0; 3], [0.0; 3]);
        joint_edge_update(&a, &b, c1, c2, rho, p, &mut al, &mut u1, &mut u2);
        let (mut al2, mut v1, mut v2) = ([0.0; 3], [0.0; 3], [0.0; 3]);
        alternating_edge_update(&a, &b, c1, c2, rho, p, 1e-12, 200, &mut al2, &mut v1, &mut v2);
        let f1 = joint_objective(&a, &b, c1, c2, rho, p, &u1, &u2, &al);
        let f2 = joint_objective(&a, &b, c1, c2, rho, p, &v1, &v2, &al2);
        assert!(f1 <= f2 + 1e-12);
    }

    #[test]
    fn scalar_buffer_absorbs_the_gap_from_any_warm_start() {
        // In one dimension every p-norm is |α|; with c1 < c2 the optimum
        // leaves a gap of c1/(ρ/2) = 1.2 between the copies.
        let (a, b) = ([2.05], [-0.05]);
        let (c1, c2, rho, p) = (0.6, 0.9, 1.0, 3.0);
        for warm in [0.0, -0.8, 5.0, -40.0] {
            let (mut al, mut u1, mut u2) = ([warm], [0.0], [0.0]);
            joint_edge_update(&a, &b, c1, c2, rho, p, &mut al, &mut u1, &mut u2);
            assert!((al[0] - (-2.1 + 1.2)).abs() < 1e-12, "warm {warm}: {}", al[0]);
        }
    }

    #[test]
    fn anchored_copy_moves_toward_target() {
        let mut v = [0.0];
        anchored_copy(&[0.0], &[2.0], 1.0, 1.0, &mut v);
        assert_eq!(v, [1.0]);
        anchored_copy(&[0.0], &[0.5], 1.0, 1.0, &mut v);
        assert_eq!(v, [0.0]);
    }

    #[test]
    fn squared_updates_are_stationary() {
        let (a, b, c, rho) = ([1.0, -2.0], [3.0, 0.5], 0.8, 1.3);
        let (mut u1, mut u2) = ([0.0; 2], [0.0; 2]);
        squared_pair_update(&a, &b, c, rho, &mut u1, &mut u2);
        for i in 0..2 {
            let g1 = 2.0 * c * (u1[i] - u2[i]) - rho * (a[i] - u1[i]);
            let g2 = -2.0 * c * (u1[i] - u2[i]) - rho * (b[i] - u2[i]);
            assert!(g1.abs() < 1e-12 && g2.abs() < 1e-12);
        }
        let mut v = [0.0; 2];
        squared_anchored_update(&a, &b, c, rho, &mut v);
        for i in 0..2 {
            let g = -2.0 * c * (a[i] - v[i]) - rho * (b[i] - v[i]);
            assert!(g.abs() < 1e-12);
        }
    }
}
