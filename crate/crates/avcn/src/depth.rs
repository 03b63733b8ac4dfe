//! Depth-based vertex representations.
//!
//! Each vertex is described by a K-vector of Shannon entropies, one per
//! expansion depth: component k is the entropy of the degree-proportional
//! distribution on the subgraph induced by all vertices within shortest-path
//! distance k of the vertex. Deeper components see more of the graph, so the
//! vector captures local-to-global structure around the vertex.

use crate::error::{Error, Result};
use crate::graph::Graph;

/// Per-vertex K-dimensional entropy vectors for one graph.
#[derive(Debug, Clone, PartialEq)]
pub struct DbRepresentationSet {
    pub k: usize,
    /// One vector of length `k` per vertex, in vertex order.
    pub vectors: Vec<Vec<f64>>,
}

/// Vertex-induced subgraph on all vertices at BFS distance <= `k` from
/// `root`. The root is always included; subgraph vertices keep their relative
/// order (ascending original index).
pub fn expansion_subgraph(graph: &Graph, root: usize, k: usize) -> Result<Graph> {
    let dist = bfs_distances(graph, root)?;
    let members: Vec<usize> = (0..graph.vertex_count())
        .filter(|&v| dist[v].is_some_and(|d| d <= k))
        .collect();
    induced_subgraph(graph, &members)
}

/// Shannon entropy of the degree-proportional distribution on `subgraph`:
/// H = -sum_i p_i ln p_i with p_i = d_i / sum_j d_j. Returns 0 when the total
/// degree is 0 (all-isolated subgraph); zero-degree vertices contribute 0.
///
/// Degrees are summed in sorted order so the result is bitwise identical for
/// any relabeling of the same subgraph.
///
/// # Examples
/// ```
/// use avcn::depth::subgraph_entropy;
/// use avcn::graph::Graph;
/// let edge = Graph::new(2, &[(0, 1)], vec![0, 0], 0).unwrap();
/// assert!((subgraph_entropy(&edge).unwrap() - 2f64.ln()).abs() < 1e-12);
/// ```
pub fn subgraph_entropy(subgraph: &Graph) -> Result<f64> {
    if subgraph.vertex_count() == 0 {
        return Err(Error::EmptyInput("entropy of an empty subgraph".into()));
    }
    let mut degrees: Vec<usize> = (0..subgraph.vertex_count())
        .map(|v| subgraph.neighbors(v).len())
        .collect();
    degrees.sort_unstable();
    let total: usize = degrees.iter().sum();
    if total == 0 {
        return Ok(0.0);
    }
    let total = total as f64;
    let mut h = 0.0;
    for &d in &degrees {
        if d > 0 {
            let p = d as f64 / total;
            h -= p * p.ln();
        }
    }
    Ok(h)
}

/// Depth-based representations for every vertex of `graph`: component k of
/// vertex v (1 <= k <= K) is `subgraph_entropy(expansion_subgraph(graph, v, k))`.
pub fn db_representations(graph: &Graph, k: usize) -> Result<DbRepresentationSet> {
    if k < 1 {
        return Err(Error::InvalidParameter("representation depth K must be >= 1".into()));
    }
    let mut vectors = Vec::with_capacity(graph.vertex_count());
    for v in 0..graph.vertex_count() {
        let mut vec_k = Vec::with_capacity(k);
        for depth in 1..=k {
            vec_k.push(subgraph_entropy(&expansion_subgraph(graph, v, depth)?)?);
        }
        vectors.push(vec_k);
    }
    Ok(DbRepresentationSet { k, vectors })
}

fn bfs_distances(graph: &Graph, root: usize) -> Result<Vec<Option<usize>>> {
    if root >= graph.vertex_count() {
        return Err(Error::IndexError { index: root, bound: graph.vertex_count() });
    }
    let mut dist = vec![None; graph.vertex_count()];
    dist[root] = Some(0);
    let mut frontier = std::collections::VecDeque::from([root]);
    while let Some(v) = frontier.pop_front() {
        let d = dist[v].unwrap();
        for &n in graph.neighbors(v) {
            if dist[n as usize].is_none() {
                dist[n as usize] = Some(d + 1);
                frontier.push_back(n as usize);
            }
        }
    }
    Ok(dist)
}

fn induced_subgraph(graph: &Graph, members: &[usize]) -> Result<Graph> {
    let mut local = vec![usize::MAX; graph.vertex_count()];
    for (i, &v) in members.iter().enumerate() {
        local[v] = i;
    }
    let mut edges = Vec::new();
    for (u, v) in graph.edges() {
        let (lu, lv) = (local[u as usize], local[v as usize]);
        if lu != usize::MAX && lv != usize::MAX {
            edges.push((lu as u32, lv as u32));
        }
    }
    let labels = members.iter().map(|&v| graph.vertex_labels()[v]).collect();
    Graph::new(members.len(), &edges, labels, graph.graph_label())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path3() -> Graph {
        Graph::new(3, &[(0, 1), (1, 2)], vec![0, 0, 0], 0).unwrap()
    }

    /// Independent hand evaluation: p = (1/4, 1/2, 1/4) gives
    /// H = 2 * (1/4) ln 4 + (1/2) ln 2 = (3/2) ln 2.
    const PATH3_ENTROPY: f64 = 1.0397207708399179;

    #[test]
    fn expansion_subgraph_examples() {
        let g = path3();
        let from_middle = expansion_subgraph(&g, 1, 1).unwrap();
        assert_eq!(from_middle.vertex_count(), 3);
        assert_eq!(from_middle.edge_count(), 2);
        let from_end = expansion_subgraph(&g, 0, 1).unwrap();
        assert_eq!(from_end.vertex_count(), 2);
        assert_eq!(from_end.edge_count(), 1);
        let lonely = Graph::new(2, &[], vec![0, 0], 0).unwrap();
        let only_root = expansion_subgraph(&lonely, 0, 5).unwrap();
        assert_eq!(only_root.vertex_count(), 1);
        assert!(matches!(expansion_subgraph(&g, 9, 1), Err(Error::IndexError { .. })));
    }

    #[test]
    fn entropy_matches_hand_values() {
        let edge = Graph::new(2, &[(0, 1)], vec![0, 0], 0).unwrap();
        assert!((subgraph_entropy(&edge).unwrap() - 2f64.ln()).abs() < 1e-12);
        let triangle = Graph::new(3, &[(0, 1), (1, 2), (0, 2)], vec![0; 3], 0).unwrap();
        assert!((subgraph_entropy(&triangle).unwrap() - 3f64.ln()).abs() < 1e-12);
        assert!((subgraph_entropy(&path3()).unwrap() - PATH3_ENTROPY).abs() < 1e-12);
        let isolated = Graph::new(1, &[], vec![0], 0).unwrap();
        assert_eq!(subgraph_entropy(&isolated).unwrap(), 0.0);
    }

    #[test]
    fn representations_compose_expansion_and_entropy() {
        let g = path3();
        let reps = db_representations(&g, 2).unwrap();
        assert_eq!(reps.vectors.len(), 3);
        // Both expansions from the middle vertex cover the whole path.
        assert!((reps.vectors[1][0] - PATH3_ENTROPY).abs() < 1e-12);
        assert!((reps.vectors[1][1] - PATH3_ENTROPY).abs() < 1e-12);
        let single = Graph::new(1, &[], vec![0], 0).unwrap();
        assert_eq!(db_representations(&single, 3).unwrap().vectors[0], vec![0.0, 0.0, 0.0]);
        let triangle = Graph::new(3, &[(0, 1), (1, 2), (0, 2)], vec![0; 3], 0).unwrap();
        let tri_reps = db_representations(&triangle, 1).unwrap();
        for v in 0..3 {
            assert!((tri_reps.vectors[v][0] - 3f64.ln()).abs() < 1e-12);
        }
        assert!(matches!(db_representations(&g, 0), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn representations_stabilize_beyond_the_diameter() {
        // Path of 5 vertices: diameter 4.
        let g = Graph::new(5, &[(0, 1), (1, 2), (2, 3), (3, 4)], vec![0; 5], 0).unwrap();
        let reps = db_representations(&g, 7).unwrap();
        for v in 0..5 {
            for k in 4..7 {
                assert_eq!(reps.vectors[v][k], reps.vectors[v][3], "vertex {v} depth {k}");
            }
        }
    }

    #[test]
    fn entropies_bounded_by_log_subgraph_size() {
        let g = Graph::new(6, &[(0, 1), (0, 2), (0, 3), (3, 4), (4, 5)], vec![0; 6], 0).unwrap();
        for v in 0..6 {
            for k in 1..=3 {
                let sub = expansion_subgraph(&g, v, k).unwrap();
                let h = subgraph_entropy(&sub).unwrap();
                assert!(h >= 0.0 && h <= (sub.vertex_count() as f64).ln() + 1e-12);
            }
        }
    }

    #[test]
    fn permutation_equivariance_is_bitwise() {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let g = Graph::new(
            7,
            &[(0, 1), (1, 2), (2, 3), (3, 0), (2, 4), (4, 5), (5, 6), (6, 4)],
            vec![0, 1, 0, 1, 2, 0, 1],
            0,
        )
        .unwrap();
        let reps = db_representations(&g, 4).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let mut perm: Vec<usize> = (0..7).collect();
            perm.shuffle(&mut rng);
            // perm[v] is the new index of original vertex v.
            let mut labels = vec![0i64; 7];
            for v in 0..7 {
                labels[perm[v]] = g.vertex_labels()[v];
            }
            let edges: Vec<(u32, u32)> = g.edges().map(|(u, v)| (perm[u as usize] as u32, perm[v as usize] as u32)).collect();
            let pg = Graph::new(7, &edges, labels, 0).unwrap();
            let preps = db_representations(&pg, 4).unwrap();
            for (v, &pv) in perm.iter().enumerate() {
                assert_eq!(reps.vectors[v], preps.vectors[pv], "vertex {v}");
            }
        }
    }
}
