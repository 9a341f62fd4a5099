use super::newton::{self, ShiftedNorm};
use super::ProxError;
use crate::linalg::{all_finite, dual_exponent, lp_norm, lp_norm_grad, norm2};

/// `min_α c1‖α‖_p + c2‖v + α‖₂`
#[derive(Debug, Clone, Copy)]
pub struct AlphaSubproblem<'a> {
    pub v: &'a [f64],
    pub c1: f64,
    pub c2: f64,
    pub p: f64,
}

impl AlphaSubproblem<'_> {
    pub fn objective(&self, alpha: &[f64]) -> f64 {
        let gap: f64 = alpha
            .iter()
            .zip(self.v)
            .map(|(a, v)| (a + v) * (a + v))
            .sum::<f64>()
            .sqrt();
        self.c1 * lp_norm(alpha, self.p) + self.c2 * gap
    }

    /// Dual-norm test for `α = 0`: `(c2/‖v‖₂)‖v‖_q ≤ c1`.
    pub fn zero_is_optimal(&self) -> bool {
        let n = norm2(self.v);
        if n == 0.0 {
            return true;
        }
        self.c2 / n * lp_norm(self.v, dual_exponent(self.p)) <= self.c1
    }

    /// Subgradient test for `α = −v`: `c1‖∇‖·‖_p(−v)‖₂ ≤ c2`.
    pub fn full_fusion_is_optimal(&self) -> bool {
        let neg: Vec<f64> = self.v.iter().map(|x| -x).collect();
        if norm2(&neg) == 0.0 {
            return true;
        }
        let mut g = vec![0.0; neg.len()];
        lp_norm_grad(&neg, self.p, &mut g);
        self.c1 * norm2(&g) <= self.c2
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlphaStatus {
    /// `α = 0`
    Zero,
    /// `α = −v`
    Fused,
    /// Both weights are zero; the warm start is returned untouched.
    Unchanged,
    Interior { iterations: usize },
    /// Interior solve hit the iteration cap; the best iterate is returned.
    MaxIterExceeded { iterations: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlphaSolution {
    pub alpha: Vec<f64>,
    pub status: AlphaStatus,
}

impl AlphaSolution {
    pub fn converged(&self) -> bool {
        !matches!(self.status, AlphaStatus::MaxIterExceeded { .. })
    }
}

pub(crate) const INTERIOR_MAX_ITER: usize = 200;

/// Solves the buffer subproblem. Boundary candidates are tested first; the
/// interior case runs a damped Newton iteration started from `warm_start`.
pub fn alpha_subproblem(
    sub: &AlphaSubproblem<'_>,
    warm_start: &[f64],
) -> Result<AlphaSolution, ProxError> {
    let d = sub.v.len();
    if warm_start.len() != d {
        return Err(ProxError::DimensionMismatch { expected: d, got: warm_start.len() });
    }
    if !all_finite(sub.v) || !all_finite(warm_start) || !sub.c1.is_finite() || !sub.c2.is_finite() {
        return Err(ProxError::NonFinite("alpha_subproblem"));
    }
    if !(sub.p > 1.0 && sub.p.is_finite()) || sub.c1 < 0.0 || sub.c2 < 0.0 {
        return Err(ProxError::InvalidParameter(format!(
            "need p in (1, inf) and c1, c2 >= 0 (p = {}, c1 = {}, c2 = {})",
            sub.p, sub.c1, sub.c2
        )));
    }

    let done = |alpha, status| Ok(AlphaSolution { alpha, status });
    if sub.c1 == 0.0 && sub.c2 == 0.0 {
        return done(warm_start.to_vec(), AlphaStatus::Unchanged);
    }
    if sub.c1 == 0.0 {
        return done(sub.v.iter().map(|x| -x).collect(), AlphaStatus::Fused);
    }
    if sub.zero_is_optimal() {
        return done(vec![0.0; d], AlphaStatus::Zero);
    }
    if sub.full_fusion_is_optimal() {
        return done(sub.v.iter().map(|x| -x).collect(), AlphaStatus::Fused);
    }

    let term = ShiftedNorm { shift: sub.v, c: sub.c2 };
    let tol = 1e-10 * (sub.c1 + sub.c2);
    let scale = 1e-9 * (1.0 + norm2(sub.v));
    let mut start = interior_start(warm_start, sub.v);
    let mut iterations = 0;
    for _ in 0..KINK_RESTARTS {
        let out = newton::minimize(sub.c1, sub.p, &term, start, INTERIOR_MAX_ITER, tol);
        iterations += out.iterations;
        let gap: Vec<f64> = out.alpha.iter().zip(sub.v).map(|(a, x)| a + x).collect();
        let at_kink = norm2(&out.alpha) <= scale || norm2(&gap) <= scale;
        if out.converged && !at_kink {
            return done(out.alpha, AlphaStatus::Interior { iterations });
        }
        let here = sub.objective(&out.alpha);
        let escape = [escape_zero(sub), escape_fusion(sub)]
            .into_iter()
            .map(|a| (sub.objective(&a), a))
            .min_by(|x, y| x.0.total_cmp(&y.0))
            .expect("two candidates");
        if escape.0 >= here {
            return done(out.alpha, AlphaStatus::MaxIterExceeded { iterations });
        }
        start = escape.1;
    }
    done(start, AlphaStatus::MaxIterExceeded { iterations })
}

const KINK_RESTARTS: usize = 4;

/// Leaves `α = 0` along the dual-norm maximizer of the gradient of the
/// distance term; a strict descent direction whenever the zero test fails.
fn escape_zero(sub: &AlphaSubproblem<'_>) -> Vec<f64> {
    let q = dual_exponent(sub.p);
    let dir: Vec<f64> = sub.v.iter().map(|x| -x.signum() * x.abs().powf(q - 1.0)).collect();
    line_minimum(sub, &vec![0.0; sub.v.len()], &dir)
}

/// Leaves `α = −v` along the steepest-descent direction; a strict descent
/// direction whenever the fusion test fails.
fn escape_fusion(sub: &AlphaSubproblem<'_>) -> Vec<f64> {
    let kink: Vec<f64> = sub.v.iter().map(|x| -x).collect();
    let mut g = vec![0.0; kink.len()];
    lp_norm_grad(&kink, sub.p, &mut g);
    let dir: Vec<f64> = g.iter().map(|x| -x).collect();
    line_minimum(sub, &kink, &dir)
}

/// Golden-section minimum of the objective on the ray `origin + t·dir`, `t > 0`.
fn line_minimum(sub: &AlphaSubproblem<'_>, origin: &[f64], dir: &[f64]) -> Vec<f64> {
    let dn = norm2(dir);
    let at = |t: f64| -> Vec<f64> { origin.iter().zip(dir).map(|(o, d)| o + t * d / dn).collect() };
    let phi = |t: f64| sub.objective(&at(t));

    let mut hi = 1e-3 * (1.0 + norm2(sub.v));
    while phi(2.0 * hi) < phi(hi) && hi < 1e12 {
        hi *= 2.0;
    }
    let (mut a, mut b) = (0.0, 2.0 * hi);
    let r = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..200 {
        let (x1, x2) = (b - r * (b - a), a + r * (b - a));
        if phi(x1) < phi(x2) {
            b = x2;
        } else {
            a = x1;
        }
        if b - a <= 1e-14 * (1.0 + b) {
            break;
        }
    }
    at(0.5 * (a + b))
}

fn interior_start(warm: &[f64], v: &[f64]) -> Vec<f64> {
    let at_zero = norm2(warm) == 0.0;
    let at_kink = warm.iter().zip(v).all(|(w, x)| w + x == 0.0);
    if at_zero || at_kink {
        v.iter().map(|x| -0.5 * x).collect()
    } else {
        warm.to_vec()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn solve(v: &[f64], c1: f64, c2: f64, p: f64) -> AlphaSolution {
        let sub = AlphaSubproblem { v, c1, c2, p };
        alpha_subproblem(&sub, &vec![0.0; v.len()]).unwrap()
    }

    #[test]
    fn zero_gap_gives_zero_buffer() {
        let s = solve(&[0.0, 0.0], 1.0, 1.0, 3.0);
        assert_eq!(s.alpha, vec![0.0, 0.0]);
        assert_eq!(s.status, AlphaStatus::Zero);
    }

    #[test]
    fn dual_norm_test_selects_zero() {
        // ‖(0.6, 0.8)‖_{1.5} ≈ 1.117 ≤ 1.2
        let sub = AlphaSubproblem { v: &[3.0, 4.0], c1: 1.2, c2: 1.0, p: 3.0 };
        let qn = lp_norm(&[0.6, 0.8], 1.5);
        assert!((qn - 1.1172).abs() < 1e-3);
        assert!(sub.zero_is_optimal());
        let s = alpha_subproblem(&sub, &[0.0, 0.0]).unwrap();
        assert_eq!(s.alpha, vec![0.0, 0.0]);
    }

    #[test]
    fn gradient_test_selects_full_fusion() {
        let s = solve(&[1.0, 0.0], 0.5, 1.0, 3.0);
        assert_eq!(s.status, AlphaStatus::Fused);
        assert_eq!(s.alpha, vec![-1.0, -0.0]);
    }

    #[test]
    fn degenerate_weights() {
        let sub = AlphaSubproblem { v: &[1.0, 2.0], c1: 0.0, c2: 0.0, p: 3.0 };
        let s = alpha_subproblem(&sub, &[0.25, -4.0]).unwrap();
        assert_eq!(s.alpha, vec![0.25, -4.0]);
        let s = solve(&[1.0, 2.0], 0.0, 1.0, 3.0);
        assert_eq!(s.alpha, vec![-1.0, -2.0]);
        let s = solve(&[1.0, 2.0], 1.0, 0.0, 3.0);
        assert_eq!(s.alpha, vec![0.0, 0.0]);
    }

    #[test]
    fn p2_never_needs_interior() {
        for (c1, c2) in [(0.5, 1.0), (1.0, 0.5), (1.0, 1.0)] {
            let s = solve(&[0.3, -1.0, 2.0], c1, c2, 2.0);
            assert!(matches!(s.status, AlphaStatus::Zero | AlphaStatus::Fused));
        }
    }

    #[test]
    fn interior_solution_is_stationary() {
        // ‖v‖_q/‖v‖₂ and ‖∇‖-v‖_p‖₂ bracket c2/c1 here, forcing an interior optimum.
        let v = [1.0, 0.2, -0.5];
        let sub = AlphaSubproblem { v: &v, c1: 1.0, c2: 0.92, p: 3.0 };
        assert!(!sub.zero_is_optimal());
        assert!(!sub.full_fusion_is_optimal());
        let s = alpha_subproblem(&sub, &[0.0; 3]).unwrap();
        assert!(matches!(s.status, AlphaStatus::Interior { .. }));
        let mut g = [0.0; 3];
        lp_norm_grad(&s.alpha, 3.0, &mut g);
        let gap: Vec<f64> = s.alpha.iter().zip(&v).map(|(a, b)| a + b).collect();
        let n = norm2(&gap);
        let resid: f64 = (0..3)
            .map(|i| (g[i] + 0.92 * gap[i] / n).powi(2))
            .sum::<f64>()
            .sqrt();
        assert!(resid < 1e-8, "residual {resid}");
    }

    #[test]
    fn rejects_invalid_parameters() {
        let sub = AlphaSubproblem { v: &[1.0], c1: 1.0, c2: 1.0, p: 1.0 };
        assert!(alpha_subproblem(&sub, &[0.0]).is_err());
        let sub = AlphaSubproblem { v: &[1.0], c1: -1.0, c2: 1.0, p: 3.0 };
        assert!(alpha_subproblem(&sub, &[0.0]).is_err());
        let sub = AlphaSubproblem { v: &[1.0], c1: 1.0, c2: 1.0, p: 3.0 };
        assert!(alpha_subproblem(&sub, &[0.0, 0.0]).is_err());
    }
}
