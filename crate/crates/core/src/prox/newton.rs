//! Damped Newton solver for `min c1‖α‖_p + ψ(α)` on the region where both
//! terms are differentiable.

use crate::linalg::{cholesky_solve_in_place, lp_norm, lp_norm_grad, norm2};

/// A convex term ψ that is differentiable away from a known kink.
pub(crate) trait SmoothTerm {
    fn value(&self, alpha: &[f64]) -> f64;
    fn grad(&self, alpha: &[f64], out: &mut [f64]);
    /// Adds the Hessian (row-major, d×d) into `h`.
    fn hess_add(&self, alpha: &[f64], h: &mut [f64]);
}

/// `c‖α + shift‖₂`
pub(crate) struct ShiftedNorm<'a> {
    pub shift: &'a [f64],
    pub c: f64,
}

impl SmoothTerm for ShiftedNorm<'_> {
    fn value(&self, alpha: &[f64]) -> f64 {
        self.c * shifted_norm(alpha, self.shift)
    }

    fn grad(&self, alpha: &[f64], out: &mut [f64]) {
        let n = shifted_norm(alpha, self.shift);
        for i in 0..alpha.len() {
            out[i] = if n > 0.0 { self.c * (alpha[i] + self.shift[i]) / n } else { 0.0 };
        }
    }

    fn hess_add(&self, alpha: &[f64], h: &mut [f64]) {
        let n = shifted_norm(alpha, self.shift);
        if n > 0.0 {
            add_norm_hessian(alpha, self.shift, self.c / n, n, h);
        }
    }
}

/// Huber function of `α + shift`: `(q/2)‖e‖²` for `‖e‖ ≤ c/q`, `c‖e‖ − c²/(2q)` beyond.
/// This is the value of the copy subproblem after minimizing out the copies.
pub(crate) struct ShiftedHuber<'a> {
    pub shift: &'a [f64],
    pub c: f64,
    pub q: f64,
}

impl ShiftedHuber<'_> {
    pub fn threshold(&self) -> f64 {
        self.c / self.q
    }
}

impl SmoothTerm for ShiftedHuber<'_> {
    fn value(&self, alpha: &[f64]) -> f64 {
        let n = shifted_norm(alpha, self.shift);
        if n <= self.threshold() {
            0.5 * self.q * n * n
        } else {
            self.c * n - 0.5 * self.c * self.c / self.q
        }
    }

    fn grad(&self, alpha: &[f64], out: &mut [f64]) {
        let n = shifted_norm(alpha, self.shift);
        let scale = if n <= self.threshold() {
            self.q
        } else {
            self.c / n
        };
        for i in 0..alpha.len() {
            out[i] = scale * (alpha[i] + self.shift[i]);
        }
    }

    fn hess_add(&self, alpha: &[f64], h: &mut [f64]) {
        let d = alpha.len();
        let n = shifted_norm(alpha, self.shift);
        if n <= self.threshold() {
            for i in 0..d {
                h[i * d + i] += self.q;
            }
        } else {
            add_norm_hessian(alpha, self.shift, self.c / n, n, h);
        }
    }
}

fn shifted_norm(alpha: &[f64], shift: &[f64]) -> f64 {
    alpha
        .iter()
        .zip(shift)
        .map(|(a, s)| (a + s) * (a + s))
        .sum::<f64>()
        .sqrt()
}

/// Adds `scale (I − ê êᵀ)` with `ê = (α + shift)/n`.
fn add_norm_hessian(alpha: &[f64], shift: &[f64], scale: f64, n: f64, h: &mut [f64]) {
    let d = alpha.len();
    for i in 0..d {
        let ei = (alpha[i] + shift[i]) / n;
        for j in 0..d {
            let ej = (alpha[j] + shift[j]) / n;
            let id = if i == j { 1.0 } else { 0.0 };
            h[i * d + j] += scale * (id - ei * ej);
        }
    }
}

fn add_lp_hessian(alpha: &[f64], p: f64, c1: f64, h: &mut [f64]) {
    let d = alpha.len();
    let s = lp_norm(alpha, p);
    if s == 0.0 {
        return;
    }
    let mut g = vec![0.0; d];
    lp_norm_grad(alpha, p, &mut g);
    for i in 0..d {
        let ai = alpha[i].abs().max(1e-300 * s);
        let r = if p == 3.0 { ai / s } else { (ai / s).powf(p - 2.0) };
        h[i * d + i] += c1 * (p - 1.0) * r / s;
        for j in 0..d {
            h[i * d + j] -= c1 * (p - 1.0) * g[i] * g[j] / s;
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct NewtonOutcome {
    pub alpha: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
}

pub(crate) fn objective<S: SmoothTerm>(c1: f64, p: f64, term: &S, alpha: &[f64]) -> f64 {
    c1 * lp_norm(alpha, p) + term.value(alpha)
}

/// Minimizes `c1‖α‖_p + ψ(α)` starting from a point with `α ≠ 0`.
///
/// Stops when the gradient norm drops below `tol`; otherwise returns the
/// best iterate after `max_iter` steps with `converged = false`.
pub(crate) fn minimize<S: SmoothTerm>(
    c1: f64,
    p: f64,
    term: &S,
    start: Vec<f64>,
    max_iter: usize,
    tol: f64,
) -> NewtonOutcome {
    let d = start.len();
    let mut alpha = start;
    let mut f = objective(c1, p, term, &alpha);
    let mut grad = vec![0.0; d];
    let mut tmp = vec![0.0; d];
    let mut hess = vec![0.0; d * d];
    let mut trial = vec![0.0; d];
    let mut hd = vec![0.0; d * d];
    let mut step = vec![0.0; d];
    let mut damping = 0.0_f64;

    for iter in 0..max_iter {
        lp_norm_grad(&alpha, p, &mut grad);
        for g in grad.iter_mut() {
            *g *= c1;
        }
        term.grad(&alpha, &mut tmp);
        for (g, t) in grad.iter_mut().zip(&tmp) {
            *g += t;
        }
        let gnorm = norm2(&grad);
        if gnorm <= tol {
            return NewtonOutcome { alpha, converged: true, iterations: iter };
        }

        hess.iter_mut().for_each(|v| *v = 0.0);
        add_lp_hessian(&alpha, p, c1, &mut hess);
        term.hess_add(&alpha, &mut hess);
        let trace: f64 = (0..d).map(|i| hess[i * d + i]).sum::<f64>().max(f64::MIN_POSITIVE);

        let mut solved = false;
        let mut lm = damping.max(1e-14 * trace / d as f64);
        for _ in 0..40 {
            hd.copy_from_slice(&hess);
            for i in 0..d {
                hd[i * d + i] += lm;
            }
            for (s, g) in step.iter_mut().zip(&grad) {
                *s = -g;
            }
            if cholesky_solve_in_place(&mut hd, &mut step) && step.iter().all(|v| v.is_finite()) {
                solved = true;
                break;
            }
            lm = (lm * 10.0).max(1e-12 * trace);
        }
        if !solved {
            return NewtonOutcome { alpha, converged: false, iterations: iter };
        }

        let slope: f64 = step.iter().zip(&grad).map(|(s, g)| s * g).sum();
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            for i in 0..d {
                trial[i] = alpha[i] + t * step[i];
            }
            let ft = objective(c1, p, term, &trial);
            if ft <= f + 1e-4 * t * slope {
                accepted = ft < f || t == 1.0;
                if accepted {
                    f = ft;
                    std::mem::swap(&mut alpha, &mut trial);
                }
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            // Line search could not improve; the iterate is optimal to
            // working precision unless damping helps.
            if damping > 1e6 * trace {
                return NewtonOutcome { alpha, converged: gnorm <= tol.sqrt(), iterations: iter };
            }
            damping = (damping * 100.0).max(1e-6 * trace);
        } else if t == 1.0 {
            damping *= 0.1;
        }
        let snorm = norm2(&step) * t;
        if accepted && snorm <= 1e-15 * (1.0 + norm2(&alpha)) {
            return NewtonOutcome { alpha, converged: true, iterations: iter + 1 };
        }
    }
    NewtonOutcome { alpha, converged: false, iterations: max_iter }
}
