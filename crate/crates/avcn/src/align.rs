//! Transitive vertex alignment.
//!
//! Vertices of all graphs are clustered in representation space; each vertex
//! is assigned to its nearest cluster centroid ("prototype"). Two vertices
//! assigned to the same prototype are aligned, and because assignment is a
//! function the relation is an equivalence: alignment transfers across
//! graphs. Ordering the prototypes by their mutual-similarity degree gives
//! every graph the same fixed row order, so per-graph features collapse into
//! a fixed-size grid a 1-D convolution can slide over.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::mat::{sq_dist, Mat};

/// Centroids of one clustering run plus their degree-based row order.
#[derive(Debug, Clone, PartialEq)]
pub struct PrototypeSet {
    /// Representation dimension (depth K of the vectors clustered).
    pub k: usize,
    /// M centroid vectors, each of length `k`.
    pub centroids: Vec<Vec<f64>>,
    /// Permutation of 0..M: `order[r]` is the centroid placed at grid row r.
    pub order: Vec<usize>,
}

impl PrototypeSet {
    /// Wraps centroids and computes their degree-descending order.
    pub fn new(centroids: Vec<Vec<f64>>) -> Result<Self> {
        if centroids.is_empty() {
            return Err(Error::EmptyInput("prototype set needs at least one centroid".into()));
        }
        let k = centroids[0].len();
        if k == 0 || centroids.iter().any(|c| c.len() != k) {
            return Err(Error::InvalidParameter("centroids must share one positive dimension".into()));
        }
        let order = prototype_order(&centroids, k);
        Ok(PrototypeSet { k, centroids, order })
    }

    pub fn len(&self) -> usize {
        self.centroids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centroids.is_empty()
    }
}

/// Result of one Lloyd run: final centroids plus the clustering objective
/// (sum of squared point-to-assigned-centroid distances) recorded after every
/// assignment step. The trace is non-increasing.
#[derive(Debug, Clone)]
pub struct KmeansResult {
    pub centroids: Vec<Vec<f64>>,
    pub objective_trace: Vec<f64>,
}

/// Lloyd's algorithm with k-means++ seeding from an explicit seed.
///
/// Assignment breaks distance ties toward the lower centroid index. A
/// centroid left with no points is reassigned to the in-data point farthest
/// from it (lowest index among ties), which never increases the objective.
/// Terminates when the objective decrease falls below `tol` or after
/// `max_iters` iterations.
pub fn kmeans(points: &[Vec<f64>], m: usize, seed: u64, max_iters: usize, tol: f64) -> Result<KmeansResult> {
    if points.is_empty() {
        return Err(Error::EmptyInput("kmeans needs at least one point".into()));
    }
    if m < 1 {
        return Err(Error::InvalidParameter("kmeans needs at least one cluster".into()));
    }
    let dim = points[0].len();
    if points.iter().any(|p| p.len() != dim) {
        return Err(Error::InvalidParameter("kmeans points must share one dimension".into()));
    }

    let mut centroids = plus_plus_seeds(points, m, seed);
    let mut assignment = vec![0usize; points.len()];
    let mut trace = Vec::new();
    let mut prev_objective = f64::INFINITY;

    for _ in 0..max_iters {
        // Assignment step: nearest centroid, ties to the lower index.
        let mut objective = 0.0;
        for (p, point) in points.iter().enumerate() {
            let (best, best_d) = nearest_centroid(point, &centroids);
            assignment[p] = best;
            objective += best_d;
        }
        trace.push(objective);

        // Update step: centroid = mean of its points; empty clusters move to
        // the point farthest from the dead centroid.
        let mut sums = vec![vec![0.0; dim]; m];
        let mut counts = vec![0usize; m];
        for (p, point) in points.iter().enumerate() {
            let a = assignment[p];
            counts[a] += 1;
            for (s, &x) in sums[a].iter_mut().zip(point) {
                *s += x;
            }
        }
        for j in 0..m {
            if counts[j] > 0 {
                for s in &mut sums[j] {
                    *s /= counts[j] as f64;
                }
                centroids[j] = std::mem::take(&mut sums[j]);
            } else {
                let mut far = 0usize;
                let mut far_d = f64::NEG_INFINITY;
                for (p, point) in points.iter().enumerate() {
                    let d = sq_dist(point, &centroids[j]);
                    if d > far_d {
                        far_d = d;
                        far = p;
                    }
                }
                centroids[j] = points[far].clone();
            }
        }

        if prev_objective - objective < tol {
            break;
        }
        prev_objective = objective;
    }
    Ok(KmeansResult { centroids, objective_trace: trace })
}

/// k-means++ seeding: first seed uniform, later seeds drawn with probability
/// proportional to squared distance from the nearest chosen seed. If every
/// remaining point coincides with a chosen seed, the lowest-index point is
/// taken, leaving the duplicate centroid to the empty-cluster repair.
fn plus_plus_seeds(points: &[Vec<f64>], m: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids: Vec<Vec<f64>> = Vec::with_capacity(m);
    centroids.push(points[rng.gen_range(0..points.len())].clone());
    let mut best_d: Vec<f64> = points.iter().map(|p| sq_dist(p, &centroids[0])).collect();
    while centroids.len() < m {
        let total: f64 = best_d.iter().sum();
        let next = if total > 0.0 {
            let mut r = rng.gen::<f64>() * total;
            let mut chosen = points.len() - 1;
            for (p, &d) in best_d.iter().enumerate() {
                if r < d {
                    chosen = p;
                    break;
                }
                r -= d;
            }
            chosen
        } else {
            0
        };
        centroids.push(points[next].clone());
        for (p, point) in points.iter().enumerate() {
            best_d[p] = best_d[p].min(sq_dist(point, centroids.last().unwrap()));
        }
    }
    centroids
}

fn nearest_centroid(point: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = 0usize;
    let mut best_d = f64::INFINITY;
    for (j, c) in centroids.iter().enumerate() {
        let d = sq_dist(point, c);
        if d < best_d {
            best_d = d;
            best = j;
        }
    }
    (best, best_d)
}

/// Vertex-to-prototype distance matrix: entry (i, j) is the Euclidean
/// distance between vertex i's representation and centroid j.
pub fn affinity_matrix(reps: &[Vec<f64>], prototypes: &PrototypeSet) -> Result<Mat> {
    if reps.iter().any(|r| r.len() != prototypes.k) {
        return Err(Error::InvalidParameter(format!(
            "representation dimension must equal prototype dimension {}",
            prototypes.k
        )));
    }
    let mut a = Mat::zeros(reps.len(), prototypes.len());
    for (i, r) in reps.iter().enumerate() {
        for (j, c) in prototypes.centroids.iter().enumerate() {
            *a.at_mut(i, j) = sq_dist(r, c).sqrt();
        }
    }
    Ok(a)
}

/// Binary vertex-to-prototype assignment: one 1 per row at the row minimum of
/// the affinity matrix. Stored as the assigned column per row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorrespondenceMatrix {
    /// `assignment[i]` is the column holding row i's single 1.
    pub assignment: Vec<usize>,
    /// Column count M.
    pub m: usize,
}

impl CorrespondenceMatrix {
    /// Dense 0/1 form; every row sums to exactly 1 by construction.
    pub fn to_dense(&self) -> Mat {
        let mut c = Mat::zeros(self.assignment.len(), self.m);
        for (i, &j) in self.assignment.iter().enumerate() {
            *c.at_mut(i, j) = 1.0;
        }
        c
    }
}

/// Assigns each row to its minimum-affinity column, ties toward the lowest
/// column index.
///
/// # Examples
/// ```
/// use avcn::align::correspondence_matrix;
/// use avcn::mat::Mat;
/// let tie = Mat::from_vec(1, 2, vec![0.3, 0.3]);
/// assert_eq!(correspondence_matrix(&tie).unwrap().assignment, vec![0]);
/// ```
pub fn correspondence_matrix(affinity: &Mat) -> Result<CorrespondenceMatrix> {
    if affinity.rows() == 0 || affinity.cols() == 0 {
        return Err(Error::EmptyInput("affinity matrix must be nonempty".into()));
    }
    let mut assignment = Vec::with_capacity(affinity.rows());
    for i in 0..affinity.rows() {
        let row = affinity.row(i);
        let mut best = 0usize;
        for (j, &v) in row.iter().enumerate() {
            if v < row[best] {
                best = j;
            }
        }
        assignment.push(best);
    }
    Ok(CorrespondenceMatrix { assignment, m: affinity.cols() })
}

/// Aligned vertex feature matrix C^T F: row j collects (sums) the feature
/// rows of every vertex assigned to prototype j. Column sums are preserved
/// exactly because every vertex lands in exactly one row.
pub fn aligned_feature_matrix(c: &CorrespondenceMatrix, f: &Mat) -> Result<Mat> {
    if c.assignment.len() != f.rows() {
        return Err(Error::InvalidParameter(format!(
            "correspondence has {} rows but features have {}",
            c.assignment.len(),
            f.rows()
        )));
    }
    let mut x = Mat::zeros(c.m, f.cols());
    for (v, &j) in c.assignment.iter().enumerate() {
        let src = f.row(v);
        for (dst, &s) in x.row_mut(j).iter_mut().zip(src) {
            *dst += s;
        }
    }
    Ok(x)
}

/// Degree-descending prototype order.
///
/// Pairwise similarity s(mu_j, mu_k) = exp(-||mu_j - mu_k||_2 / K) including
/// the self term s = 1; the degree of a prototype is the sum of its
/// similarities to all prototypes. Sorts degree descending, ties by ascending
/// centroid index.
pub fn prototype_order(centroids: &[Vec<f64>], k: usize) -> Vec<usize> {
    let m = centroids.len();
    let mut degree = vec![0.0; m];
    for j in 0..m {
        for other in centroids {
            degree[j] += (-sq_dist(&centroids[j], other).sqrt() / k as f64).exp();
        }
    }
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| degree[b].partial_cmp(&degree[a]).unwrap().then(a.cmp(&b)));
    order
}

/// Fixed-size aligned grid for one graph: for each depth K = 1..L, vertices
/// are assigned to that depth's prototypes, features are collected per
/// prototype, rows are reordered by the prototype order, and the L per-depth
/// grids are averaged.
pub fn build_grid(f: &Mat, prototypes_per_k: &[PrototypeSet], reps_per_k: &[crate::depth::DbRepresentationSet]) -> Result<Mat> {
    let per_k = per_depth_grids(f, prototypes_per_k, reps_per_k)?;
    let l = per_k.len() as f64;
    let m = per_k[0].rows();
    let mut grid = Mat::zeros(m, f.cols());
    for xk in &per_k {
        for (g, v) in grid.as_mut_slice().iter_mut().zip(xk.as_slice()) {
            *g += v;
        }
    }
    for g in grid.as_mut_slice() {
        *g /= l;
    }
    Ok(grid)
}

/// The per-depth aligned feature matrices, each already row-reordered by its
/// depth's prototype order. `build_grid` averages these.
pub fn per_depth_grids(
    f: &Mat,
    prototypes_per_k: &[PrototypeSet],
    reps_per_k: &[crate::depth::DbRepresentationSet],
) -> Result<Vec<Mat>> {
    if prototypes_per_k.is_empty() {
        return Err(Error::EmptyInput("need prototypes for at least one depth".into()));
    }
    if prototypes_per_k.len() != reps_per_k.len() {
        return Err(Error::InvalidParameter(format!(
            "{} prototype sets but {} representation sets",
            prototypes_per_k.len(),
            reps_per_k.len()
        )));
    }
    let m = prototypes_per_k[0].len();
    if prototypes_per_k.iter().any(|p| p.len() != m) {
        return Err(Error::InvalidParameter("prototype count M must be identical across depths".into()));
    }
    let mut grids = Vec::with_capacity(prototypes_per_k.len());
    for (protos, reps) in prototypes_per_k.iter().zip(reps_per_k) {
        let affinity = affinity_matrix(&reps.vectors, protos)?;
        let corr = correspondence_matrix(&affinity)?;
        let x = aligned_feature_matrix(&corr, f)?;
        let mut reordered = Mat::zeros(m, f.cols());
        for (row, &proto) in protos.order.iter().enumerate() {
            reordered.row_mut(row).copy_from_slice(x.row(proto));
        }
        grids.push(reordered);
    }
    Ok(grids)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::depth::DbRepresentationSet;

    fn pts(vals: &[f64]) -> Vec<Vec<f64>> {
        vals.iter().map(|&v| vec![v]).collect()
    }

    #[test]
    fn kmeans_exact_when_clusters_equal_points() {
        let points = vec![vec![0.0, 0.0], vec![10.0, 10.0]];
        let r = kmeans(&points, 2, 1, 300, 1e-6).unwrap();
        assert_eq!(*r.objective_trace.last().unwrap(), 0.0);
        let mut got = r.centroids.clone();
        got.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(got, points);
    }

    #[test]
    fn kmeans_single_cluster_is_the_mean() {
        let points = vec![vec![1.0], vec![2.0], vec![6.0]];
        let r = kmeans(&points, 1, 3, 300, 1e-6).unwrap();
        assert!((r.centroids[0][0] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn kmeans_two_well_separated_1d_clusters() {
        // Optimal partition {0,1,2} | {10,11,12}: centroids 1 and 11,
        // objective (1+0+1) + (1+0+1) = 4, confirmed by enumeration in the
        // acceptance suite.
        for seed in 0..8 {
            let r = kmeans(&pts(&[0.0, 1.0, 2.0, 10.0, 11.0, 12.0]), 2, seed, 300, 1e-6).unwrap();
            assert!((r.objective_trace.last().unwrap() - 4.0).abs() < 1e-12, "seed {seed}");
            let mut got: Vec<f64> = r.centroids.iter().map(|c| c[0]).collect();
            got.sort_by(|a, b| a.partial_cmp(b).unwrap());
            assert!((got[0] - 1.0).abs() < 1e-12 && (got[1] - 11.0).abs() < 1e-12, "seed {seed}");
        }
    }

    #[test]
    fn kmeans_objective_never_increases() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for case in 0..20 {
            let n = rng.gen_range(4..40);
            let dim = rng.gen_range(1..5);
            let points: Vec<Vec<f64>> = (0..n).map(|_| (0..dim).map(|_| rng.gen_range(-3.0..3.0)).collect()).collect();
            let m = rng.gen_range(1..=n.min(8));
            let r = kmeans(&points, m, rng.gen(), 300, 0.0).unwrap();
            for w in r.objective_trace.windows(2) {
                assert!(w[1] <= w[0] + 1e-9, "case {case}: objective rose from {} to {}", w[0], w[1]);
            }
        }
    }

    #[test]
    fn kmeans_rejects_degenerate_input() {
        assert!(matches!(kmeans(&[], 1, 0, 10, 1e-6), Err(Error::EmptyInput(_))));
        assert!(matches!(kmeans(&pts(&[1.0]), 0, 0, 10, 1e-6), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn kmeans_repairs_empty_clusters() {
        // Three identical points, two clusters: seeding duplicates a point,
        // one cluster empties, repair lands on a data point. Objective 0.
        let r = kmeans(&pts(&[5.0, 5.0, 5.0]), 2, 0, 50, 0.0).unwrap();
        assert_eq!(*r.objective_trace.last().unwrap(), 0.0);
        assert!(r.centroids.iter().all(|c| c[0] == 5.0));
    }

    #[test]
    fn affinity_is_euclidean_distance() {
        let protos = PrototypeSet::new(vec![vec![0.0, 0.0], vec![3.0, 4.0]]).unwrap();
        let a = affinity_matrix(&[vec![0.0, 0.0]], &protos).unwrap();
        assert_eq!(a.row(0), &[0.0, 5.0]);
        let protos1 = PrototypeSet::new(vec![vec![0.0], vec![4.0]]).unwrap();
        let a1 = affinity_matrix(&[vec![1.0], vec![2.0]], &protos1).unwrap();
        assert_eq!(a1.row(0), &[1.0, 3.0]);
        assert_eq!(a1.row(1), &[2.0, 2.0]);
        assert!(matches!(affinity_matrix(&[vec![1.0, 2.0]], &protos1), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn correspondence_picks_row_minima_with_low_index_ties() {
        let a = Mat::from_vec(2, 3, vec![0.2, 0.1, 0.5, 0.3, 0.3, 0.9]);
        let c = correspondence_matrix(&a).unwrap();
        assert_eq!(c.assignment, vec![1, 0]);
        let dense = c.to_dense();
        assert_eq!(dense.row(0), &[0.0, 1.0, 0.0]);
        assert_eq!(dense.row(1), &[1.0, 0.0, 0.0]);
        // Affinity [[1,3],[2,2]] from the example above.
        let a2 = Mat::from_vec(2, 2, vec![1.0, 3.0, 2.0, 2.0]);
        assert_eq!(correspondence_matrix(&a2).unwrap().assignment, vec![0, 0]);
    }

    #[test]
    fn aligned_features_sum_rows_per_prototype() {
        let c = CorrespondenceMatrix { assignment: vec![0, 0, 1], m: 2 };
        let f = Mat::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0]]);
        let x = aligned_feature_matrix(&c, &f).unwrap();
        assert_eq!(x.row(0), &[1.0, 1.0]);
        assert_eq!(x.row(1), &[1.0, 0.0]);
        assert_eq!(x.col_sums(), f.col_sums());
        // Identity correspondence reproduces F.
        let id = CorrespondenceMatrix { assignment: vec![0, 1, 2], m: 3 };
        assert_eq!(aligned_feature_matrix(&id, &f).unwrap(), f);
    }

    #[test]
    fn prototype_order_degree_descending_with_index_ties() {
        assert_eq!(prototype_order(&[vec![7.0]], 1), vec![0]);
        // Two centroids at distance 1: equal degrees 1 + e^-1, tie keeps
        // index order.
        assert_eq!(prototype_order(&[vec![0.0], vec![1.0]], 1), vec![0, 1]);
        // Middle centroid of {0,1,2} has degree 1 + 2e^-1, the others
        // 1 + e^-1 + e^-2; tie between the outer two breaks by index.
        assert_eq!(prototype_order(&[vec![0.0], vec![1.0], vec![2.0]], 1), vec![1, 0, 2]);
    }

    #[test]
    fn prototype_degree_matches_hand_value() {
        let c = vec![vec![0.0], vec![1.0]];
        let s = (-1.0f64).exp();
        let expect = 1.0 + s;
        let mut degree = 0.0;
        for other in &c {
            degree += (-sq_dist(&c[0], other).sqrt() / 1.0).exp();
        }
        assert!((degree - expect).abs() < 1e-12);
        assert!((expect - 1.367879441171442).abs() < 1e-9);
    }

    #[test]
    fn grid_is_average_of_reordered_per_depth_grids() {
        let f = Mat::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0]]);
        // Depth 1: vertices 0,1 near centroid 1 (value 1.0), vertex 2 near
        // centroid 0 (value 9.0). Degrees tie-ish? distance 8 -> no tie:
        // centroid order sorts by mutual similarity, equal for M=2, so order
        // stays (0, 1).
        let protos = PrototypeSet::new(vec![vec![9.0], vec![1.0]]).unwrap();
        let reps = DbRepresentationSet { k: 1, vectors: vec![vec![1.0], vec![1.5], vec![8.0]] };
        let grid = build_grid(&f, std::slice::from_ref(&protos), std::slice::from_ref(&reps)).unwrap();
        assert_eq!(grid.row(0), &[1.0, 0.0]);
        assert_eq!(grid.row(1), &[1.0, 1.0]);
        // Averaging two identical depths changes nothing.
        let grid2 = build_grid(&f, &[protos.clone(), protos.clone()], &[reps.clone(), reps]).unwrap();
        assert_eq!(grid, grid2);
    }

    #[test]
    fn grid_rejects_inconsistent_prototype_counts() {
        let f = Mat::from_rows(&[vec![1.0]]);
        let p1 = PrototypeSet::new(vec![vec![0.0], vec![1.0]]).unwrap();
        let p2 = PrototypeSet::new(vec![vec![0.0]]).unwrap();
        let r1 = DbRepresentationSet { k: 1, vectors: vec![vec![0.0]] };
        let err = build_grid(&f, &[p1, p2], &[r1.clone(), r1]).unwrap_err();
        assert!(matches!(err, Error::InvalidParameter(_)));
    }
}
