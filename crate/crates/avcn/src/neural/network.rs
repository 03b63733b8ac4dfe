//! The full classifier: parallel convolution branches over one aligned grid,
//! concatenated and fed through a dense ReLU layer with inverted dropout and
//! a softmax head. Gradients are hand-written reverse mode.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::mat::Mat;
use crate::neural::conv::{conv_backward_cached, conv_forward_cached, ConvCache, ConvLayerParams};

/// Shape of the network, everything needed to size its parameters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Architecture {
    /// Grid rows M consumed by every branch.
    pub grid_rows: usize,
    /// Grid feature channels c.
    pub in_channels: usize,
    /// Output channels of every convolution layer.
    pub channels: usize,
    /// One parallel branch per filter size; sizes must be distinct.
    pub filter_sizes: Vec<usize>,
    pub layers_per_branch: usize,
    pub dense_units: usize,
    pub num_classes: usize,
}

impl Architecture {
    /// Rows remaining after one branch: each layer consumes filter_size - 1.
    pub fn branch_output_rows(&self, filter_size: usize) -> usize {
        self.grid_rows - self.layers_per_branch * (filter_size - 1)
    }

    /// Flattened length of all concatenated branch outputs.
    pub fn dense_input_len(&self) -> usize {
        self.filter_sizes.iter().map(|&m| self.branch_output_rows(m) * self.channels).sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.filter_sizes.is_empty() {
            return Err(Error::InvalidParameter("need at least one filter size".into()));
        }
        let mut seen = std::collections::BTreeSet::new();
        for &m in &self.filter_sizes {
            if m < 1 {
                return Err(Error::InvalidParameter("filter sizes must be >= 1".into()));
            }
            if !seen.insert(m) {
                return Err(Error::InvalidParameter(format!("duplicate filter size {m}")));
            }
            if m > self.grid_rows || self.layers_per_branch * (m - 1) >= self.grid_rows {
                return Err(Error::InvalidParameter(format!(
                    "branch with filter {m} and {} layers exhausts the {} grid rows",
                    self.layers_per_branch, self.grid_rows
                )));
            }
        }
        if self.layers_per_branch < 1 || self.channels < 1 || self.dense_units < 1 || self.num_classes < 1 {
            return Err(Error::InvalidParameter("channels, layers, dense units and classes must be >= 1".into()));
        }
        Ok(())
    }
}

/// Fully-connected layer parameters; weights indexed [out][in] row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseParams {
    pub in_dim: usize,
    pub out_dim: usize,
    pub w: Vec<f64>,
    pub b: Vec<f64>,
}

impl DenseParams {
    pub fn zeros(in_dim: usize, out_dim: usize) -> Self {
        DenseParams { in_dim, out_dim, w: vec![0.0; in_dim * out_dim], b: vec![0.0; out_dim] }
    }
}

/// One parallel branch: a stack of convolution layers sharing a filter size.
#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub filter_size: usize,
    pub layers: Vec<ConvLayerParams>,
}

/// All trainable tensors. `GradientTape` reuses this layout so gradient
/// buffers mirror parameter shapes exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkParams {
    pub arch: Architecture,
    pub branches: Vec<Branch>,
    pub dense: DenseParams,
    pub head: DenseParams,
}

/// Per-parameter gradient buffers with the same shapes as the parameters.
pub type GradientTape = NetworkParams;

impl NetworkParams {
    /// Glorot-uniform initialization: each weight tensor is drawn uniformly
    /// from +-sqrt(6 / (fan_in + fan_out)); biases start at zero. The draw
    /// order is fixed (branches, then dense, then head) so a seed pins every
    /// parameter.
    pub fn init(arch: &Architecture, rng: &mut ChaCha8Rng) -> Result<Self> {
        arch.validate()?;
        let mut params = Self::zeros(arch)?;
        for branch in &mut params.branches {
            for layer in &mut branch.layers {
                let fan_in = (layer.filter_size * layer.in_channels) as f64;
                let fan_out = (layer.filter_size * layer.out_channels) as f64;
                let limit = (6.0 / (fan_in + fan_out)).sqrt();
                for w in &mut layer.w {
                    *w = rng.gen_range(-limit..limit);
                }
            }
        }
        for dense in [&mut params.dense, &mut params.head] {
            let limit = (6.0 / (dense.in_dim as f64 + dense.out_dim as f64)).sqrt();
            for w in &mut dense.w {
                *w = rng.gen_range(-limit..limit);
            }
        }
        Ok(params)
    }

    /// All-zero parameters (also the gradient-tape constructor).
    pub fn zeros(arch: &Architecture) -> Result<Self> {
        arch.validate()?;
        let branches = arch
            .filter_sizes
            .iter()
            .map(|&m| Branch {
                filter_size: m,
                layers: (0..arch.layers_per_branch)
                    .map(|t| {
                        let c_in = if t == 0 { arch.in_channels } else { arch.channels };
                        ConvLayerParams::zeros(m, c_in, arch.channels)
                    })
                    .collect(),
            })
            .collect();
        Ok(NetworkParams {
            arch: arch.clone(),
            branches,
            dense: DenseParams::zeros(arch.dense_input_len(), arch.dense_units),
            head: DenseParams::zeros(arch.dense_units, arch.num_classes),
        })
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(&self.arch).expect("existing architecture is valid")
    }

    /// Named flat views of every tensor, in a fixed order shared by the
    /// optimizer state and the checkpoint format.
    pub fn tensors(&self) -> Vec<(String, &[f64])> {
        let mut out: Vec<(String, &[f64])> = Vec::new();
        for (bi, branch) in self.branches.iter().enumerate() {
            for (li, layer) in branch.layers.iter().enumerate() {
                out.push((format!("branch{bi}.layer{li}.w"), &layer.w));
                out.push((format!("branch{bi}.layer{li}.b"), &layer.b));
            }
        }
        out.push(("dense.w".into(), &self.dense.w));
        out.push(("dense.b".into(), &self.dense.b));
        out.push(("head.w".into(), &self.head.w));
        out.push(("head.b".into(), &self.head.b));
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<(String, &mut Vec<f64>)> {
        let mut out: Vec<(String, &mut Vec<f64>)> = Vec::new();
        for (bi, branch) in self.branches.iter_mut().enumerate() {
            for (li, layer) in branch.layers.iter_mut().enumerate() {
                out.push((format!("branch{bi}.layer{li}.w"), &mut layer.w));
                out.push((format!("branch{bi}.layer{li}.b"), &mut layer.b));
            }
        }
        out.push(("dense.w".into(), &mut self.dense.w));
        out.push(("dense.b".into(), &mut self.dense.b));
        out.push(("head.w".into(), &mut self.head.w));
        out.push(("head.b".into(), &mut self.head.b));
        out
    }

    pub fn parameter_count(&self) -> usize {
        self.tensors().iter().map(|(_, t)| t.len()).sum()
    }
}

struct ForwardCache {
    branch_caches: Vec<Vec<ConvCache>>,
    concat: Vec<f64>,
    dense_out: Vec<f64>,
    /// Per-unit multiplier: 0 for dropped units, 1/(1-p) for kept ones, 1
    /// when dropout is off.
    dropout_mask: Vec<f64>,
    head_in: Vec<f64>,
    probs: Vec<f64>,
    min_abs_pre: f64,
}

fn check_grid(x: &Mat, arch: &Architecture) -> Result<()> {
    if x.rows() != arch.grid_rows || x.cols() != arch.in_channels {
        return Err(Error::InvalidParameter(format!(
            "grid is {}x{}, network expects {}x{}",
            x.rows(),
            x.cols(),
            arch.grid_rows,
            arch.in_channels
        )));
    }
    Ok(())
}

fn forward_cached(
    x: &Mat,
    params: &NetworkParams,
    dropout_rate: f64,
    training: bool,
    rng: &mut ChaCha8Rng,
) -> Result<ForwardCache> {
    check_grid(x, &params.arch)?;
    if !(0.0..1.0).contains(&dropout_rate) {
        return Err(Error::InvalidParameter(format!("dropout rate {dropout_rate} outside [0, 1)")));
    }
    let mut min_abs_pre = f64::INFINITY;

    // Branches run in filter-size order; outputs flatten row-major
    // (row, then channel) and concatenate in the same order.
    let mut branch_caches = Vec::with_capacity(params.branches.len());
    let mut concat = Vec::with_capacity(params.arch.dense_input_len());
    for branch in &params.branches {
        let mut caches: Vec<ConvCache> = Vec::with_capacity(branch.layers.len());
        for layer in &branch.layers {
            let input = caches.last().map_or(x, |c| &c.out);
            let cache = conv_forward_cached(input, layer)?;
            min_abs_pre = min_abs_pre.min(cache.min_abs_pre);
            caches.push(cache);
        }
        concat.extend_from_slice(caches.last().expect("branch has layers").out.as_slice());
        branch_caches.push(caches);
    }

    // Dense ReLU layer.
    let mut dense_out = params.dense.b.clone();
    for (o, unit) in dense_out.iter_mut().enumerate() {
        let row = &params.dense.w[o * params.dense.in_dim..(o + 1) * params.dense.in_dim];
        let mut acc = *unit;
        for (&w, &v) in row.iter().zip(&concat) {
            acc += w * v;
        }
        min_abs_pre = min_abs_pre.min(acc.abs());
        *unit = acc.max(0.0);
    }

    // Inverted dropout: scale kept units at train time so inference needs no
    // rescaling. With rate 0 the mask is all ones and the RNG is untouched.
    let dropout_mask: Vec<f64> = if training && dropout_rate > 0.0 {
        let keep = 1.0 - dropout_rate;
        (0..dense_out.len())
            .map(|_| if rng.gen::<f64>() < dropout_rate { 0.0 } else { 1.0 / keep })
            .collect()
    } else {
        vec![1.0; dense_out.len()]
    };
    let head_in: Vec<f64> = dense_out.iter().zip(&dropout_mask).map(|(&v, &m)| v * m).collect();

    // Affine head + softmax via the log-sum-exp trick.
    let mut logits = params.head.b.clone();
    for (o, logit) in logits.iter_mut().enumerate() {
        let row = &params.head.w[o * params.head.in_dim..(o + 1) * params.head.in_dim];
        for (&w, &v) in row.iter().zip(&head_in) {
            *logit += w * v;
        }
    }
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut probs: Vec<f64> = logits.iter().map(|&l| (l - max).exp()).collect();
    let z: f64 = probs.iter().sum();
    for p in &mut probs {
        *p /= z;
    }

    Ok(ForwardCache { branch_caches, concat, dense_out, dropout_mask, head_in, probs, min_abs_pre })
}

/// Class probability vector for one grid. With `training` set, dropout masks
/// are drawn from `rng`; otherwise the network is deterministic in its
/// parameters.
pub fn forward(
    x: &Mat,
    params: &NetworkParams,
    dropout_rate: f64,
    training: bool,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<f64>> {
    Ok(forward_cached(x, params, dropout_rate, training, rng)?.probs)
}

/// Smallest |preactivation| over all ReLU inputs for one grid, evaluated
/// without dropout. Gradient checks use this to stay clear of ReLU kinks.
pub fn preactivation_margin(x: &Mat, params: &NetworkParams) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    Ok(forward_cached(x, params, 0.0, false, &mut rng)?.min_abs_pre)
}

/// Mean softmax cross-entropy over a batch plus gradients for every
/// parameter. Dropout masks (when `dropout_rate > 0`) are drawn per example
/// in batch order.
pub fn loss_and_gradients(
    batch: &[(&Mat, usize)],
    params: &NetworkParams,
    dropout_rate: f64,
    rng: &mut ChaCha8Rng,
) -> Result<(f64, GradientTape)> {
    if batch.is_empty() {
        return Err(Error::EmptyInput("loss over an empty batch".into()));
    }
    let mut tape = params.zeros_like();
    let mut loss_sum = 0.0;
    for &(x, class) in batch {
        if class >= params.arch.num_classes {
            return Err(Error::InvalidParameter(format!(
                "class {class} outside 0..{}",
                params.arch.num_classes
            )));
        }
        let cache = forward_cached(x, params, dropout_rate, true, rng)?;
        loss_sum += -cache.probs[class].ln();
        backward(x, params, &cache, class, &mut tape)?;
    }
    let inv = 1.0 / batch.len() as f64;
    loss_sum *= inv;
    for (_, t) in tape.tensors_mut() {
        for g in t {
            *g *= inv;
        }
    }
    Ok((loss_sum, tape))
}

/// Accumulates one example's gradients into `tape`.
fn backward(x: &Mat, params: &NetworkParams, cache: &ForwardCache, class: usize, tape: &mut GradientTape) -> Result<()> {
    // Softmax cross-entropy: d loss / d logit = p - onehot.
    let mut d_logits = cache.probs.clone();
    d_logits[class] -= 1.0;

    // Head affine layer.
    let mut d_head_in = vec![0.0; params.head.in_dim];
    for (o, &dl) in d_logits.iter().enumerate() {
        tape.head.b[o] += dl;
        let w_row = &params.head.w[o * params.head.in_dim..(o + 1) * params.head.in_dim];
        let g_row = &mut tape.head.w[o * params.head.in_dim..(o + 1) * params.head.in_dim];
        for i in 0..params.head.in_dim {
            g_row[i] += dl * cache.head_in[i];
            d_head_in[i] += dl * w_row[i];
        }
    }

    // Dropout, then the dense ReLU gate.
    let mut d_dense_pre = d_head_in;
    for (d, (&mask, &out)) in d_dense_pre.iter_mut().zip(cache.dropout_mask.iter().zip(&cache.dense_out)) {
        *d *= mask;
        if out <= 0.0 {
            *d = 0.0;
        }
    }

    // Dense affine layer.
    let mut d_concat = vec![0.0; params.dense.in_dim];
    for (o, &dp) in d_dense_pre.iter().enumerate() {
        tape.dense.b[o] += dp;
        if dp == 0.0 {
            continue;
        }
        let w_row = &params.dense.w[o * params.dense.in_dim..(o + 1) * params.dense.in_dim];
        let g_row = &mut tape.dense.w[o * params.dense.in_dim..(o + 1) * params.dense.in_dim];
        for i in 0..params.dense.in_dim {
            g_row[i] += dp * cache.concat[i];
            d_concat[i] += dp * w_row[i];
        }
    }

    // Split the concatenated gradient back into branch outputs and run each
    // branch's layers in reverse.
    let mut offset = 0;
    for (bi, (branch, caches)) in params.branches.iter().zip(&cache.branch_caches).enumerate() {
        let last = caches.last().expect("branch has layers");
        let len = last.out.rows() * last.out.cols();
        let mut upstream = Mat::from_vec(last.out.rows(), last.out.cols(), d_concat[offset..offset + len].to_vec());
        offset += len;
        for (t, layer) in branch.layers.iter().enumerate().rev() {
            let input_rows = if t == 0 { x.rows() } else { caches[t - 1].out.rows() };
            let (d_input, grads) = conv_backward_cached(&caches[t], layer, &upstream, input_rows)?;
            let g_layer = &mut tape.branches[bi].layers[t];
            for (gw, w) in g_layer.w.iter_mut().zip(&grads.w) {
                *gw += w;
            }
            for (gb, b) in g_layer.b.iter_mut().zip(&grads.b) {
                *gb += b;
            }
            upstream = d_input;
        }
    }
    Ok(())
}
