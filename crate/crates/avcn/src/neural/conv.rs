//! 1-D vertex convolution over the rows of an aligned grid.
//!
//! A filter of length m slides down the M ordered rows with stride 1 and no
//! padding; weights are shared across positions. Output row e, channel h is
//! ReLU(sum_s sum_j W[j][h][s] * X[e+j][s] + b[h]) for e in 0..M-m+1.

use crate::error::{Error, Result};
use crate::mat::{matmul_a_bt_acc, matmul_acc, matmul_at_b_acc, Mat};

/// Parameters of one convolution layer.
///
/// Weights are indexed [j][h][s]: filter position j in 0..m, output channel
/// h, input channel s, flattened row-major into `w`. One tensor serves every
/// output position (weight sharing).
#[derive(Debug, Clone, PartialEq)]
pub struct ConvLayerParams {
    pub filter_size: usize,
    pub in_channels: usize,
    pub out_channels: usize,
    pub w: Vec<f64>,
    pub b: Vec<f64>,
}

impl ConvLayerParams {
    pub fn zeros(filter_size: usize, in_channels: usize, out_channels: usize) -> Self {
        ConvLayerParams {
            filter_size,
            in_channels,
            out_channels,
            w: vec![0.0; filter_size * out_channels * in_channels],
            b: vec![0.0; out_channels],
        }
    }

    #[inline]
    pub fn w_index(&self, j: usize, h: usize, s: usize) -> usize {
        (j * self.out_channels + h) * self.in_channels + s
    }

    pub fn output_rows(&self, input_rows: usize) -> usize {
        input_rows - self.filter_size + 1
    }

    fn check_input(&self, x: &Mat) -> Result<()> {
        if x.cols() != self.in_channels {
            return Err(Error::InvalidParameter(format!(
                "input has {} channels, layer expects {}",
                x.cols(),
                self.in_channels
            )));
        }
        if x.rows() < self.filter_size {
            return Err(Error::InvalidParameter(format!(
                "input has {} rows, filter needs at least {}",
                x.rows(),
                self.filter_size
            )));
        }
        Ok(())
    }
}

/// Forward pass intermediates kept for the backward pass.
pub(crate) struct ConvCache {
    /// Patch matrix: row e holds X[e..e+m] flattened with k = s*m + j, so the
    /// multiply accumulates in the same (s outer, j inner) order as the
    /// convolution formula.
    pub(crate) patches: Mat,
    /// Post-activation output; an entry is positive iff its preactivation is.
    pub(crate) out: Mat,
    /// Smallest |preactivation| seen, for gradient-check conditioning.
    pub(crate) min_abs_pre: f64,
}

/// Repacks weights from [j][h][s] to the patch layout [s*m+j][h].
fn weight_matrix(params: &ConvLayerParams) -> Mat {
    let (m, ci, co) = (params.filter_size, params.in_channels, params.out_channels);
    let mut b = Mat::zeros(m * ci, co);
    for j in 0..m {
        for h in 0..co {
            for s in 0..ci {
                *b.at_mut(s * m + j, h) = params.w[params.w_index(j, h, s)];
            }
        }
    }
    b
}

pub(crate) fn conv_forward_cached(x: &Mat, params: &ConvLayerParams) -> Result<ConvCache> {
    params.check_input(x)?;
    let (m, ci, co) = (params.filter_size, params.in_channels, params.out_channels);
    let rows_out = params.output_rows(x.rows());

    let mut patches = Mat::zeros(rows_out, m * ci);
    for e in 0..rows_out {
        let row = patches.row_mut(e);
        for s in 0..ci {
            for j in 0..m {
                row[s * m + j] = x.at(e + j, s);
            }
        }
    }

    let weights = weight_matrix(params);
    let mut out = Mat::zeros(rows_out, co);
    for e in 0..rows_out {
        out.row_mut(e).copy_from_slice(&params.b);
    }
    matmul_acc(&mut out, &patches, &weights);

    let mut min_abs_pre = f64::INFINITY;
    for v in out.as_mut_slice() {
        min_abs_pre = min_abs_pre.min(v.abs());
        if *v <= 0.0 {
            *v = 0.0;
        }
    }
    Ok(ConvCache { patches, out, min_abs_pre })
}

/// Vertex convolution forward: ReLU(conv(X) + b), stride 1, no padding.
///
/// # Examples
/// ```
/// use avcn::mat::Mat;
/// use avcn::neural::{vertex_conv_forward, ConvLayerParams};
/// let x = Mat::from_vec(4, 1, vec![1.0, 2.0, 3.0, 4.0]);
/// let mut p = ConvLayerParams::zeros(2, 1, 1);
/// p.w = vec![1.0, 1.0];
/// let z = vertex_conv_forward(&x, &p).unwrap();
/// assert_eq!(z.as_slice(), &[3.0, 5.0, 7.0]);
/// ```
pub fn vertex_conv_forward(x: &Mat, params: &ConvLayerParams) -> Result<Mat> {
    Ok(conv_forward_cached(x, params)?.out)
}

pub(crate) fn conv_backward_cached(
    cache: &ConvCache,
    params: &ConvLayerParams,
    upstream: &Mat,
    input_rows: usize,
) -> Result<(Mat, ConvLayerParams)> {
    let (m, ci, co) = (params.filter_size, params.in_channels, params.out_channels);
    let rows_out = cache.out.rows();
    if upstream.rows() != rows_out || upstream.cols() != co {
        return Err(Error::InvalidParameter(format!(
            "upstream gradient is {}x{}, expected {}x{}",
            upstream.rows(),
            upstream.cols(),
            rows_out,
            co
        )));
    }

    // ReLU gate: zero preactivations pass no gradient.
    let mut masked = upstream.clone();
    for (g, &o) in masked.as_mut_slice().iter_mut().zip(cache.out.as_slice()) {
        if o <= 0.0 {
            *g = 0.0;
        }
    }

    let mut grads = ConvLayerParams::zeros(m, ci, co);
    for e in 0..rows_out {
        for (gb, &g) in grads.b.iter_mut().zip(masked.row(e)) {
            *gb += g;
        }
    }

    let mut grad_weights = Mat::zeros(m * ci, co);
    matmul_at_b_acc(&mut grad_weights, &cache.patches, &masked);
    for j in 0..m {
        for h in 0..co {
            for s in 0..ci {
                let idx = grads.w_index(j, h, s);
                grads.w[idx] = grad_weights.at(s * m + j, h);
            }
        }
    }

    let weights = weight_matrix(params);
    let mut grad_patches = Mat::zeros(rows_out, m * ci);
    matmul_a_bt_acc(&mut grad_patches, &masked, &weights);
    let mut grad_x = Mat::zeros(input_rows, ci);
    for e in 0..rows_out {
        let row = grad_patches.row(e);
        for s in 0..ci {
            for j in 0..m {
                *grad_x.at_mut(e + j, s) += row[s * m + j];
            }
        }
    }
    Ok((grad_x, grads))
}

/// Reverse-mode gradients of `vertex_conv_forward`.
///
/// Recomputes the forward activations internally, then returns the gradient
/// with respect to the input and a parameter-shaped gradient container. The
/// ReLU subgradient at exactly 0 is taken as 0.
pub fn vertex_conv_backward(x: &Mat, params: &ConvLayerParams, upstream: &Mat) -> Result<(Mat, ConvLayerParams)> {
    let cache = conv_forward_cached(x, params)?;
    conv_backward_cached(&cache, params, upstream, x.rows())
}

/// Applies a stack of convolution layers in sequence. Each layer consumes
/// m - 1 rows; the row count must stay at or above 1 throughout.
pub fn stack_branch(x: &Mat, layers: &[ConvLayerParams]) -> Result<Mat> {
    let mut cur = x.clone();
    for layer in layers {
        cur = vertex_conv_forward(&cur, layer)?;
    }
    Ok(cur)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Literal evaluation of the convolution formula: for every output row e
    /// and channel h, accumulate over input channels (outer) and filter
    /// positions (inner), add the bias, then apply ReLU.
    fn naive_conv(x: &Mat, p: &ConvLayerParams) -> Mat {
        let rows_out = x.rows() - p.filter_size + 1;
        let mut z = Mat::zeros(rows_out, p.out_channels);
        for e in 0..rows_out {
            for h in 0..p.out_channels {
                let mut acc = p.b[h];
                for s in 0..p.in_channels {
                    for j in 0..p.filter_size {
                        acc += p.w[p.w_index(j, h, s)] * x.at(e + j, s);
                    }
                }
                *z.at_mut(e, h) = acc.max(0.0);
            }
        }
        z
    }

    fn random_case(rng: &mut ChaCha8Rng) -> (Mat, ConvLayerParams) {
        let m = rng.gen_range(1..5);
        let rows = rng.gen_range(m..m + 9);
        let ci = rng.gen_range(1..4);
        let co = rng.gen_range(1..4);
        let x = Mat::from_vec(rows, ci, (0..rows * ci).map(|_| rng.gen_range(-2.0..2.0)).collect());
        let mut p = ConvLayerParams::zeros(m, ci, co);
        for w in &mut p.w {
            *w = rng.gen_range(-1.5..1.5);
        }
        for b in &mut p.b {
            *b = rng.gen_range(-0.5..0.5);
        }
        (x, p)
    }

    #[test]
    fn forward_matches_direct_formula_evaluation() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..50 {
            let (x, p) = random_case(&mut rng);
            let fast = vertex_conv_forward(&x, &p).unwrap();
            let naive = naive_conv(&x, &p);
            assert_eq!(fast.rows(), naive.rows());
            for (a, b) in fast.as_slice().iter().zip(naive.as_slice()) {
                assert!((a - b).abs() <= 1e-12, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn forward_hand_examples() {
        // Identity-ish filter: m=1, w=1, b=0 is ReLU of the input.
        let x = Mat::from_vec(3, 1, vec![-1.0, 0.5, 2.0]);
        let mut id = ConvLayerParams::zeros(1, 1, 1);
        id.w = vec![1.0];
        assert_eq!(vertex_conv_forward(&x, &id).unwrap().as_slice(), &[0.0, 0.5, 2.0]);
        // Negative bias with zero weights clamps everything.
        let mut neg = ConvLayerParams::zeros(2, 1, 1);
        neg.b = vec![-1.0];
        assert_eq!(vertex_conv_forward(&x, &neg).unwrap().as_slice(), &[0.0, 0.0]);
        // Too few rows.
        let tall = ConvLayerParams::zeros(5, 1, 1);
        assert!(matches!(vertex_conv_forward(&x, &tall), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn backward_scalar_chain_rule() {
        // d/dW ReLU(W*X + b) at W=1, X=2, b=0 with upstream 1 is X = 2.
        let x = Mat::from_vec(1, 1, vec![2.0]);
        let mut p = ConvLayerParams::zeros(1, 1, 1);
        p.w = vec![1.0];
        let up = Mat::from_vec(1, 1, vec![1.0]);
        let (gx, gp) = vertex_conv_backward(&x, &p, &up).unwrap();
        assert_eq!(gp.w, vec![2.0]);
        assert_eq!(gp.b, vec![1.0]);
        assert_eq!(gx.as_slice(), &[1.0]);
    }

    #[test]
    fn backward_zero_upstream_gives_zero_gradients() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let (x, p) = random_case(&mut rng);
        let up = Mat::zeros(x.rows() - p.filter_size + 1, p.out_channels);
        let (gx, gp) = vertex_conv_backward(&x, &p, &up).unwrap();
        assert!(gx.as_slice().iter().all(|&v| v == 0.0));
        assert!(gp.w.iter().all(|&v| v == 0.0) && gp.b.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn backward_matches_finite_differences() {
        // Central differences on sum(conv(x)) as the scalar objective.
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..10 {
            let (x, p) = random_case(&mut rng);
            let rows_out = x.rows() - p.filter_size + 1;
            let up = Mat::from_vec(rows_out, p.out_channels, vec![1.0; rows_out * p.out_channels]);
            let (gx, gp) = vertex_conv_backward(&x, &p, &up).unwrap();
            let objective = |x: &Mat, p: &ConvLayerParams| -> f64 { vertex_conv_forward(x, p).unwrap().as_slice().iter().sum() };
            let h = 1e-5;
            let check = |analytic: f64, fd: f64| {
                let denom = analytic.abs().max(fd.abs()).max(1e-3);
                assert!((analytic - fd).abs() / denom < 1e-6, "{analytic} vs {fd}");
            };
            for i in 0..x.rows() {
                for c in 0..x.cols() {
                    let mut xp = x.clone();
                    *xp.at_mut(i, c) += h;
                    let mut xm = x.clone();
                    *xm.at_mut(i, c) -= h;
                    check(gx.at(i, c), (objective(&xp, &p) - objective(&xm, &p)) / (2.0 * h));
                }
            }
            for wi in 0..p.w.len() {
                let mut pp = p.clone();
                pp.w[wi] += h;
                let mut pm = p.clone();
                pm.w[wi] -= h;
                check(gp.w[wi], (objective(&x, &pp) - objective(&x, &pm)) / (2.0 * h));
            }
        }
    }

    #[test]
    fn branch_row_arithmetic() {
        let x = Mat::zeros(64, 1);
        let layers: Vec<ConvLayerParams> = (0..3)
            .map(|i| ConvLayerParams::zeros(9, if i == 0 { 1 } else { 2 }, 2))
            .collect();
        assert_eq!(stack_branch(&x, &layers).unwrap().rows(), 40);
        let small: Vec<ConvLayerParams> = (0..3)
            .map(|i| ConvLayerParams::zeros(3, if i == 0 { 1 } else { 2 }, 2))
            .collect();
        assert_eq!(stack_branch(&x, &small).unwrap().rows(), 58);
        // Single layer with m = M collapses to one row.
        let full = ConvLayerParams::zeros(64, 1, 3);
        assert_eq!(stack_branch(&x, std::slice::from_ref(&full)).unwrap().rows(), 1);
        // Underflow: 3 rows left, filter of 9.
        let shrink: Vec<ConvLayerParams> = vec![
            ConvLayerParams::zeros(63, 1, 1),
            ConvLayerParams::zeros(9, 1, 1),
        ];
        assert!(matches!(stack_branch(&x, &shrink), Err(Error::InvalidParameter(_))));
    }
}
