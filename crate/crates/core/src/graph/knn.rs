use super::{build_graph, Graph, GraphError, NodePayload};
use crate::linalg::dist2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    Uniform,
    /// `1 / distance`
    InverseDistance,
}

/// The `k` nearest points of `query` among `points` (Euclidean), skipping
/// index `skip`. Ties go to the lower index.
pub fn knn_indices(points: &[Vec<f64>], query: &[f64], k: usize, skip: Option<usize>) -> Vec<(usize, f64)> {
    let mut cand: Vec<(usize, f64)> = points
        .iter()
        .enumerate()
        .filter(|(i, _)| Some(*i) != skip)
        .map(|(i, p)| (i, dist2(p, query)))
        .collect();
    cand.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    cand.truncate(k);
    cand
}

/// Undirected k-nearest-neighbour graph: `(i, j)` is an edge iff either point
/// is among the other's `k` nearest neighbours.
pub fn knn_graph(
    points: &[Vec<f64>],
    k: usize,
    weighting: Weighting,
    payloads: Option<Vec<NodePayload>>,
) -> Result<Graph, GraphError> {
    let n = points.len();
    if k == 0 {
        return Err(GraphError::InvalidParameter("k must be positive".into()));
    }
    if n < k + 1 {
        return Err(GraphError::TooFewPoints { needed: k + 1, got: n });
    }
    let dim = points[0].len();
    if points.iter().any(|p| p.len() != dim) {
        return Err(GraphError::DimensionMismatch("points of mixed dimension".into()));
    }

    let mut pairs = std::collections::BTreeMap::new();
    for (i, p) in points.iter().enumerate() {
        for (j, d) in knn_indices(points, p, k, Some(i)) {
            let key = if i < j { (i, j) } else { (j, i) };
            pairs.entry(key).or_insert(d);
        }
    }
    let mut edges = Vec::with_capacity(pairs.len());
    for ((i, j), d) in pairs {
        let w = match weighting {
            Weighting::Uniform => 1.0,
            Weighting::InverseDistance => {
                if d == 0.0 {
                    return Err(GraphError::InvalidEdge {
                        j: i,
                        k: j,
                        reason: "coincident points cannot take inverse-distance weights",
                    });
                }
                1.0 / d
            }
        };
        edges.push((i, j, w));
    }
    build_graph(n, &edges, payloads)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn edge_set(g: &Graph) -> Vec<(usize, usize)> {
        let mut v: Vec<_> = g.edges().iter().map(|e| (e.j, e.k)).collect();
        v.sort();
        v
    }

    #[test]
    fn collinear_points() {
        let pts = vec![vec![0.0], vec![1.0], vec![2.0]];
        let g = knn_graph(&pts, 1, Weighting::Uniform, None).unwrap();
        assert_eq!(edge_set(&g), vec![(0, 1), (1, 2)]);
    }

    #[test]
    fn unit_square_matches_exhaustive_sort() {
        let pts = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![1.0, 1.0], vec![0.0, 1.0]];
        // Exhaustive: for each point sort every other point by (distance, index).
        let mut expected = std::collections::BTreeSet::new();
        for i in 0..4 {
            let mut others: Vec<(f64, usize)> = (0..4)
                .filter(|&j| j != i)
                .map(|j| (((pts[i][0] - pts[j][0]) as f64).hypot(pts[i][1] - pts[j][1]), j))
                .collect();
            others.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let j = others[0].1;
            expected.insert((i.min(j), i.max(j)));
        }
        let g = knn_graph(&pts, 1, Weighting::Uniform, None).unwrap();
        assert_eq!(edge_set(&g), expected.into_iter().collect::<Vec<_>>());
        // 0→1, 1→0, 2→1, 3→0
        assert_eq!(edge_set(&g), vec![(0, 1), (0, 3), (1, 2)]);
    }

    #[test]
    fn degenerate_k() {
        let pts = vec![vec![0.0], vec![1.0], vec![2.0]];
        assert!(matches!(
            knn_graph(&pts, 3, Weighting::Uniform, None),
            Err(GraphError::TooFewPoints { .. })
        ));
    }

    #[test]
    fn inverse_distance_weights() {
        let pts = vec![vec![0.0], vec![2.0], vec![5.0]];
        let g = knn_graph(&pts, 1, Weighting::InverseDistance, None).unwrap();
        let w: Vec<f64> = g.edges().iter().map(|e| e.weight).collect();
        assert_eq!(w, vec![0.5, 1.0 / 3.0]);
    }
}
