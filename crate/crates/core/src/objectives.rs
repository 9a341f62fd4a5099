//! Per-node convex losses and their ADMM x-updates.
//!
//! Every x-update has the form
//!
//! ```text
//! argmin_x f(x) + Σ_i (ρ_i/2)‖x − u_i + δ_i‖²  =  argmin_x f(x) + (R/2)‖x − m‖²
//! ```
//!
//! with `R = Σ ρ_i` and `m` the ρ-weighted mean of `u_i − δ_i`, so each loss
//! only needs a proximal map ([`NodeObjective::prox`]). Ridge solves the
//! normal equations; the soft-margin SVM runs dual coordinate ascent.
//!
//! With a bias, the model has one extra trailing coordinate that multiplies a
//! constant feature 1 and is left out of the `‖·‖²` term.

use crate::graph::NodePayload;
use crate::linalg::{dot, solve_spd};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ObjectiveError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("x-update system is singular (no quadratic terms and the loss is not strongly convex)")]
    SingularSystem,
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("invalid objective parameter: {0}")]
    InvalidParameter(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LossKind {
    Zero,
    /// `Σ (xᵀw − y)² + c_ridge‖x_w‖²`
    Ridge { c_ridge: f64 },
    /// `½‖x_w‖² + C Σ max(0, 1 − y xᵀw)`
    Svm { c: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeObjective {
    kind: LossKind,
    payload: NodePayload,
    bias: bool,
    // Ridge normal-equation pieces over augmented rows: WᵀW and Wᵀy.
    gram: Vec<f64>,
    wty: Vec<f64>,
}

/// Dual coordinates kept between SVM x-updates; any other loss ignores it.
pub type WarmStart = Vec<f64>;

const SVM_GAP_TOL: f64 = 1e-8;
const SVM_MAX_SWEEPS: usize = 20_000;

impl NodeObjective {
    pub fn zero() -> Self {
        Self { kind: LossKind::Zero, payload: NodePayload::default(), bias: false, gram: Vec::new(), wty: Vec::new() }
    }

    pub fn ridge(payload: NodePayload, c_ridge: f64, bias: bool) -> Result<Self, ObjectiveError> {
        if !(c_ridge.is_finite() && c_ridge >= 0.0) {
            return Err(ObjectiveError::InvalidParameter(format!("c_ridge = {c_ridge}")));
        }
        Self::build(LossKind::Ridge { c_ridge }, payload, bias)
    }

    pub fn svm(payload: NodePayload, c: f64, bias: bool) -> Result<Self, ObjectiveError> {
        if !(c.is_finite() && c > 0.0) {
            return Err(ObjectiveError::InvalidParameter(format!("C = {c}")));
        }
        Self::build(LossKind::Svm { c }, payload, bias)
    }

    fn build(kind: LossKind, payload: NodePayload, bias: bool) -> Result<Self, ObjectiveError> {
        for (w, y) in payload.observations() {
            if !w.iter().all(|v| v.is_finite()) || !y.is_finite() {
                return Err(ObjectiveError::NonFinite("node observations"));
            }
        }
        let mut obj = Self { kind, payload, bias, gram: Vec::new(), wty: Vec::new() };
        if let (LossKind::Ridge { .. }, Some(d)) = (kind, obj.dim()) {
            obj.gram = vec![0.0; d * d];
            obj.wty = vec![0.0; d];
            let mut row = vec![0.0; d];
            for (w, y) in obj.payload.observations() {
                obj.augment(w, &mut row);
                for i in 0..d {
                    obj.wty[i] += row[i] * y;
                    for j in 0..d {
                        obj.gram[i * d + j] += row[i] * row[j];
                    }
                }
            }
        }
        Ok(obj)
    }

    pub fn kind(&self) -> LossKind {
        self.kind
    }

    pub fn payload(&self) -> &NodePayload {
        &self.payload
    }

    pub fn has_bias(&self) -> bool {
        self.bias
    }

    /// Model dimension implied by the data, or `None` when the node carries no
    /// observations (any dimension is then accepted).
    pub fn dim(&self) -> Option<usize> {
        match self.kind {
            LossKind::Zero => None,
            _ => self.payload.dim().map(|d| d + usize::from(self.bias)),
        }
    }

    fn augment(&self, w: &[f64], out: &mut [f64]) {
        out[..w.len()].copy_from_slice(w);
        if self.bias {
            out[w.len()] = 1.0;
        }
    }

    fn check_dim(&self, got: usize) -> Result<(), ObjectiveError> {
        match self.dim() {
            Some(expected) if expected != got => Err(ObjectiveError::DimensionMismatch { expected, got }),
            _ => Ok(()),
        }
    }

    /// Number of coordinates covered by the `‖·‖²` term.
    fn penalized(&self, dim: usize) -> usize {
        if self.bias { dim.saturating_sub(1) } else { dim }
    }

    /// Raw model output `xᵀw (+ bias)` for one observation.
    pub fn score(&self, x: &[f64], w: &[f64]) -> f64 {
        let s = dot(&x[..w.len()], w);
        if self.bias { s + x[w.len()] } else { s }
    }

    pub fn loss_eval(&self, x: &[f64]) -> Result<f64, ObjectiveError> {
        self.check_dim(x.len())?;
        let pen = self.penalized(x.len());
        let sq: f64 = x[..pen].iter().map(|v| v * v).sum();
        Ok(match self.kind {
            LossKind::Zero => 0.0,
            LossKind::Ridge { c_ridge } => {
                let fit: f64 = self.payload.observations().map(|(w, y)| (self.score(x, w) - y).powi(2)).sum();
                fit + c_ridge * sq
            }
            LossKind::Svm { c } => {
                let hinge: f64 =
                    self.payload.observations().map(|(w, y)| (1.0 - y * self.score(x, w)).max(0.0)).sum();
                0.5 * sq + c * hinge
            }
        })
    }

    /// `argmin_x f(x) + (r/2)‖x − center‖²`. `warm` carries SVM dual
    /// coordinates between calls.
    pub fn prox(&self, center: &[f64], r: f64, warm: &mut WarmStart) -> Result<Vec<f64>, ObjectiveError> {
        self.check_dim(center.len())?;
        if !(r.is_finite() && r >= 0.0) {
            return Err(ObjectiveError::InvalidParameter(format!("prox weight {r}")));
        }
        if !center.iter().all(|v| v.is_finite()) {
            return Err(ObjectiveError::NonFinite("x-update centre"));
        }
        let d = center.len();
        match self.kind {
            LossKind::Zero => {
                if r > 0.0 { Ok(center.to_vec()) } else { Err(ObjectiveError::SingularSystem) }
            }
            LossKind::Ridge { c_ridge } => {
                let pen = self.penalized(d);
                let (mut a, mut rhs) = if self.payload.is_empty() {
                    (vec![0.0; d * d], vec![0.0; d])
                } else {
                    (self.gram.iter().map(|g| 2.0 * g).collect(), self.wty.iter().map(|v| 2.0 * v).collect())
                };
                for i in 0..d {
                    a[i * d + i] += r + if i < pen { 2.0 * c_ridge } else { 0.0 };
                    rhs[i] += r * center[i];
                }
                solve_spd(&a, &rhs).ok_or(ObjectiveError::SingularSystem)
            }
            LossKind::Svm { c } => {
                let rows: Vec<(&[f64], f64)> = self.payload.observations().collect();
                let problem = SvmProblem { rows: &rows, c, reg: 1.0, bias: self.bias };
                problem.minimize(center, r, warm)
            }
        }
    }

    /// Minimizer of the loss alone.
    pub fn standalone_minimizer(&self, dim: usize) -> Result<Vec<f64>, ObjectiveError> {
        self.check_dim(dim)?;
        match self.kind {
            LossKind::Zero => Ok(vec![0.0; dim]),
            _ if self.payload.is_empty() => Ok(vec![0.0; dim]),
            _ => self.prox(&vec![0.0; dim], 0.0, &mut Vec::new()),
        }
    }
}

/// `argmin f(x) + (ρ₁/2)Σ‖x − u + δ‖² + Σ (ρ₂/2)‖x − v + δ‖²`
pub fn x_update(
    obj: &NodeObjective,
    neighbor_terms: &[(&[f64], &[f64])],
    extra_quadratic_terms: &[(&[f64], &[f64], f64)],
    rho1: f64,
) -> Result<Vec<f64>, ObjectiveError> {
    let dim = neighbor_terms
        .first()
        .map(|t| t.0.len())
        .or_else(|| extra_quadratic_terms.first().map(|t| t.0.len()))
        .or_else(|| obj.dim())
        .ok_or(ObjectiveError::SingularSystem)?;
    let terms = neighbor_terms
        .iter()
        .map(|&(u, d)| (u, d, rho1))
        .chain(extra_quadratic_terms.iter().copied());
    let mut weight = 0.0;
    let mut center = vec![0.0; dim];
    for (u, delta, rho) in terms {
        if u.len() != dim || delta.len() != dim {
            return Err(ObjectiveError::DimensionMismatch { expected: dim, got: u.len().min(delta.len()) });
        }
        weight += rho;
        for i in 0..dim {
            center[i] += rho * (u[i] - delta[i]);
        }
    }
    if weight > 0.0 {
        center.iter_mut().for_each(|c| *c /= weight);
        obj.prox(&center, weight, &mut Vec::new())
    } else {
        obj.standalone_minimizer(dim)
    }
}

/// Minimizer of `Σ_j f_j(x)` over one shared model.
pub fn pooled_minimizer(objs: &[NodeObjective], dim: usize) -> Result<Vec<f64>, ObjectiveError> {
    let active: Vec<&NodeObjective> =
        objs.iter().filter(|o| o.kind != LossKind::Zero && !o.payload.is_empty()).collect();
    let Some(first) = active.first() else {
        return Ok(vec![0.0; dim]);
    };
    for o in &active {
        o.check_dim(dim)?;
        if o.bias != first.bias || std::mem::discriminant(&o.kind) != std::mem::discriminant(&first.kind) {
            return Err(ObjectiveError::InvalidParameter("pooled losses must share kind and bias".into()));
        }
    }
    match first.kind {
        LossKind::Svm { c } => {
            if active.iter().any(|o| o.kind != first.kind) {
                return Err(ObjectiveError::InvalidParameter("pooled SVMs must share C".into()));
            }
            let rows: Vec<(&[f64], f64)> = active.iter().flat_map(|o| o.payload.observations()).collect();
            // Every node contributes its own ½‖x_w‖² term.
            let problem = SvmProblem { rows: &rows, c, reg: objs.len() as f64, bias: first.bias };
            problem.minimize(&vec![0.0; dim], 0.0, &mut Vec::new())
        }
        LossKind::Ridge { .. } => {
            let mut a = vec![0.0; dim * dim];
            let mut rhs = vec![0.0; dim];
            let pen = first.penalized(dim);
            for o in &active {
                let LossKind::Ridge { c_ridge } = o.kind else { unreachable!() };
                for i in 0..dim * dim {
                    a[i] += 2.0 * o.gram[i];
                }
                for i in 0..dim {
                    rhs[i] += 2.0 * o.wty[i];
                }
                for i in 0..pen {
                    a[i * dim + i] += 2.0 * c_ridge;
                }
            }
            solve_spd(&a, &rhs).ok_or(ObjectiveError::SingularSystem)
        }
        LossKind::Zero => unreachable!(),
    }
}

/// `min_x (reg/2)‖x_w‖² + C Σ max(0, 1 − y xᵀw̃) + (r/2)‖x − m‖²`
struct SvmProblem<'a> {
    rows: &'a [(&'a [f64], f64)],
    c: f64,
    reg: f64,
    bias: bool,
}

impl SvmProblem<'_> {
    fn minimize(&self, center: &[f64], r: f64, warm: &mut WarmStart) -> Result<Vec<f64>, ObjectiveError> {
        let d = center.len();
        if self.rows.is_empty() {
            let pen = if self.bias { d - 1 } else { d };
            if r == 0.0 && self.bias {
                return Ok(vec![0.0; d]);
            }
            return Ok((0..d).map(|i| if i < pen { r * center[i] / (self.reg + r) } else { center[i] }).collect());
        }
        if r > 0.0 || !self.bias {
            return Ok(self.dual_ascent(center, r, warm));
        }
        // The bias coordinate carries no curvature: proximal-point iterations.
        let step = self.reg.max(1e-3);
        let mut x = center.to_vec();
        let mut dual = std::mem::take(warm);
        for _ in 0..5_000 {
            let next = self.dual_ascent(&x, step, &mut dual);
            let moved = next.iter().zip(&x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            x = next;
            if moved < 1e-10 {
                break;
            }
        }
        *warm = dual;
        Ok(x)
    }

    fn diag(&self, d: usize, r: f64) -> Vec<f64> {
        (0..d).map(|i| if self.bias && i == d - 1 { r } else { self.reg + r }).collect()
    }

    fn row_value(&self, x: &[f64], w: &[f64]) -> f64 {
        let s = dot(&x[..w.len()], w);
        if self.bias { s + x[w.len()] } else { s }
    }

    fn primal(&self, x: &[f64], center: &[f64], r: f64) -> f64 {
        let d = x.len();
        let pen = if self.bias { d - 1 } else { d };
        let reg: f64 = 0.5 * self.reg * x[..pen].iter().map(|v| v * v).sum::<f64>();
        let prox: f64 = 0.5 * r * x.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
        let hinge: f64 = self.rows.iter().map(|(w, y)| (1.0 - y * self.row_value(x, w)).max(0.0)).sum();
        reg + prox + self.c * hinge
    }

    /// Coordinate ascent on the box-constrained dual. `x = P⁻¹(r m + Σ a_l y_l w̃_l)`.
    fn dual_ascent(&self, center: &[f64], r: f64, warm: &mut WarmStart) -> Vec<f64> {
        let d = center.len();
        let n = self.rows.len();
        let pinv: Vec<f64> = self.diag(d, r).iter().map(|p| 1.0 / p).collect();
        if warm.len() != n {
            *warm = vec![0.0; n];
        }
        let a = warm;
        a.iter_mut().for_each(|v| *v = v.clamp(0.0, self.c));

        let wd = d - usize::from(self.bias);
        let mut z: Vec<f64> = center.iter().map(|m| r * m).collect();
        for (l, (w, y)) in self.rows.iter().enumerate() {
            for i in 0..wd {
                z[i] += a[l] * y * w[i];
            }
            if self.bias {
                z[d - 1] += a[l] * y;
            }
        }
        let mut x: Vec<f64> = z.iter().zip(&pinv).map(|(v, p)| v * p).collect();
        let q: Vec<f64> = self
            .rows
            .iter()
            .map(|(w, _)| {
                let s: f64 = w.iter().zip(&pinv).map(|(v, p)| v * v * p).sum();
                if self.bias { s + pinv[d - 1] } else { s }
            })
            .collect();

        let center_sq: f64 = 0.5 * r * center.iter().map(|v| v * v).sum::<f64>();
        for sweep in 0..SVM_MAX_SWEEPS {
            for (l, (w, y)) in self.rows.iter().enumerate() {
                if q[l] <= 0.0 {
                    continue;
                }
                let g = 1.0 - y * self.row_value(&x, w);
                let next = (a[l] + g / q[l]).clamp(0.0, self.c);
                let step = next - a[l];
                if step != 0.0 {
                    a[l] = next;
                    for i in 0..wd {
                        x[i] += step * y * w[i] * pinv[i];
                    }
                    if self.bias {
                        x[d - 1] += step * y * pinv[d - 1];
                    }
                }
            }
            if sweep % 4 == 3 || sweep + 1 == SVM_MAX_SWEEPS {
                // Dual value: Σa − ½ xᵀPx + ½r‖m‖², with x = P⁻¹z.
                let xpx: f64 = x.iter().zip(&pinv).map(|(v, p)| v * v / p).sum();
                let dual = a.iter().sum::<f64>() - 0.5 * xpx + center_sq;
                let primal = self.primal(&x, center, r);
                if primal - dual <= SVM_GAP_TOL * primal.abs().max(1.0) {
                    break;
                }
            }
        }
        x
    }
}
