//! Post-processing of solved models: fused clusters and models for unseen nodes.

use super::SolverError;
use crate::graph::{knn_indices, Graph};
use crate::linalg::{dist2, norm2};

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

/// Connected components of the subgraph of edges whose endpoint models lie
/// within `tol` of each other. Clusters are listed by smallest member.
pub fn extract_clusters(graph: &Graph, x: &[Vec<f64>], tol: f64) -> Vec<Vec<usize>> {
    let n = graph.node_count();
    let mut parent: Vec<usize> = (0..n).collect();
    for e in graph.edges() {
        if dist2(&x[e.j], &x[e.k]) <= tol {
            let (a, b) = (find(&mut parent, e.j), find(&mut parent, e.k));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for i in 0..n {
        let root = find(&mut parent, i);
        groups.entry(root).or_default().push(i);
    }
    groups.into_values().collect()
}

/// `1e-3 ×` the mean model norm (floored at `1e-12`).
pub fn default_cluster_tol(x: &[Vec<f64>]) -> f64 {
    let mean = if x.is_empty() { 0.0 } else { x.iter().map(|v| norm2(v)).sum::<f64>() / x.len() as f64 };
    (1e-3 * mean).max(1e-12)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PredictStrategy {
    /// Mean of the neighbouring models.
    Average,
    /// Geometric median of the neighbouring models.
    Refit,
}

/// Models for new points connected to their `k` nearest training points.
pub fn predict_unseen(
    train_points: &[Vec<f64>],
    x_solved: &[Vec<f64>],
    new_points: &[Vec<f64>],
    k: usize,
    strategy: PredictStrategy,
) -> Result<Vec<Vec<f64>>, SolverError> {
    if k == 0 || train_points.len() < k {
        return Err(SolverError::TooFewPoints { needed: k.max(1), got: train_points.len() });
    }
    if train_points.len() != x_solved.len() {
        return Err(SolverError::InvalidParameter("one model per training point required".into()));
    }
    Ok(new_points
        .iter()
        .map(|q| {
            let models: Vec<&[f64]> =
                knn_indices(train_points, q, k, None).iter().map(|&(i, _)| x_solved[i].as_slice()).collect();
            match strategy {
                PredictStrategy::Average => mean_of(&models),
                PredictStrategy::Refit => geometric_median(&models, 1e-12, 10_000),
            }
        })
        .collect())
}

fn mean_of(models: &[&[f64]]) -> Vec<f64> {
    let d = models[0].len();
    let mut out = vec![0.0; d];
    for m in models {
        for i in 0..d {
            out[i] += m[i];
        }
    }
    out.iter_mut().for_each(|v| *v /= models.len() as f64);
    out
}

/// Weiszfeld iteration with the Vardi–Zhang correction at data points.
pub fn geometric_median(points: &[&[f64]], tol: f64, max_iter: usize) -> Vec<f64> {
    let d = points[0].len();
    let mut y = mean_of(points);
    for _ in 0..max_iter {
        let mut num = vec![0.0; d];
        let mut den = 0.0;
        let mut coincident = 0usize;
        let mut pull = vec![0.0; d];
        for p in points {
            let dist = dist2(p, &y);
            if dist < 1e-15 {
                coincident += 1;
                continue;
            }
            for i in 0..d {
                num[i] += p[i] / dist;
                pull[i] += (p[i] - y[i]) / dist;
            }
            den += 1.0 / dist;
        }
        if den == 0.0 {
            return y;
        }
        let t: Vec<f64> = num.iter().map(|v| v / den).collect();
        let next = if coincident == 0 {
            t
        } else {
            let r = norm2(&pull);
            if r <= coincident as f64 {
                return y;
            }
            let w = (coincident as f64 / r).min(1.0);
            (0..d).map(|i| (1.0 - w) * t[i] + w * y[i]).collect()
        };
        let moved = dist2(&next, &y);
        y = next;
        if moved <= tol {
            break;
        }
    }
    y
}
