//! Minimal row-major dense matrix used throughout the pipeline.
//!
//! The networks here are small enough that a hand-rolled `Vec<f64>` wrapper
//! beats pulling in a linear-algebra crate: every consumer needs raw slice
//! access for the gradient code, and the multiply below is the only
//! performance-critical kernel.

/// Dense row-major matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat { rows, cols, data: vec![0.0; rows * cols] }
    }

    /// Builds a matrix from a row-major value vector.
    ///
    /// # Panics
    /// Panics if `data.len() != rows * cols`.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "row-major length mismatch");
        Mat { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        Mat { rows: r, cols: c, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn at_mut(&mut self, r: usize, c: usize) -> &mut f64 {
        &mut self.data[r * self.cols + c]
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Per-column sums; used by the feature-mass conservation checks.
    pub fn col_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.cols];
        for r in 0..self.rows {
            for (s, v) in sums.iter_mut().zip(self.row(r)) {
                *s += v;
            }
        }
        sums
    }
}

/// `out += a * b` for row-major operands.
///
/// The k-loop sits between the row and column loops so the inner loop is a
/// contiguous axpy over `out`'s row. Per output element the addends arrive in
/// ascending-k order, exactly as in the textbook triple loop, so results are
/// bitwise identical to naive evaluation while still vectorizing.
pub fn matmul_acc(out: &mut Mat, a: &Mat, b: &Mat) {
    assert_eq!(a.cols, b.rows, "inner dimension mismatch");
    assert_eq!(out.rows, a.rows, "output rows mismatch");
    assert_eq!(out.cols, b.cols, "output cols mismatch");
    for i in 0..a.rows {
        let a_row = a.row(i);
        let out_row = out.row_mut(i);
        for (k, &aik) in a_row.iter().enumerate() {
            let b_row = b.row(k);
            for (o, &bkj) in out_row.iter_mut().zip(b_row) {
                *o += aik * bkj;
            }
        }
    }
}

/// `out += a^T * b` where `a` is iterated column-wise.
pub fn matmul_at_b_acc(out: &mut Mat, a: &Mat, b: &Mat) {
    assert_eq!(a.rows, b.rows, "inner dimension mismatch");
    assert_eq!(out.rows, a.cols, "output rows mismatch");
    assert_eq!(out.cols, b.cols, "output cols mismatch");
    for k in 0..a.rows {
        let a_row = a.row(k);
        let b_row = b.row(k);
        for (i, &aki) in a_row.iter().enumerate() {
            let out_row = out.row_mut(i);
            for (o, &bkj) in out_row.iter_mut().zip(b_row) {
                *o += aki * bkj;
            }
        }
    }
}

/// `out += a * b^T`.
pub fn matmul_a_bt_acc(out: &mut Mat, a: &Mat, b: &Mat) {
    assert_eq!(a.cols, b.cols, "inner dimension mismatch");
    assert_eq!(out.rows, a.rows, "output rows mismatch");
    assert_eq!(out.cols, b.rows, "output cols mismatch");
    for i in 0..a.rows {
        let a_row = a.row(i);
        let out_row = out.row_mut(i);
        for (j, o) in out_row.iter_mut().enumerate() {
            let b_row = b.row(j);
            let mut acc = 0.0;
            for (&av, &bv) in a_row.iter().zip(b_row) {
                acc += av * bv;
            }
            *o += acc;
        }
    }
}

/// Squared Euclidean distance between two equal-length vectors.
pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = 0.0;
    for (&x, &y) in a.iter().zip(b) {
        let d = x - y;
        acc += d * d;
    }
    acc
}
