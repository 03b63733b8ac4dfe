//! Adam optimizer in its standard bias-corrected form.

use crate::error::{Error, Result};
use crate::neural::network::{GradientTape, NetworkParams};

/// First and second moment estimates, one buffer per parameter tensor in
/// `NetworkParams::tensors` order, plus the step counter.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub t: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl AdamState {
    pub fn new(params: &NetworkParams) -> Self {
        let shapes: Vec<Vec<f64>> = params.tensors().iter().map(|(_, t)| vec![0.0; t.len()]).collect();
        AdamState { t: 0, m: shapes.clone(), v: shapes }
    }
}

/// One Adam update: m and v accumulate the gradient and its square with
/// exponential decay, both are bias-corrected by their decay horizon, and the
/// parameter moves against the corrected ratio.
///
///   m <- b1 m + (1 - b1) g        m_hat = m / (1 - b1^t)
///   v <- b2 v + (1 - b2) g^2      v_hat = v / (1 - b2^t)
///   p <- p - lr * m_hat / (sqrt(v_hat) + eps)
pub fn adam_step(
    params: &mut NetworkParams,
    tape: &GradientTape,
    state: &mut AdamState,
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
) -> Result<()> {
    state.t += 1;
    let bc1 = 1.0 - beta1.powi(state.t as i32);
    let bc2 = 1.0 - beta2.powi(state.t as i32);
    for (ti, ((_, tensor), (name, grad))) in params.tensors_mut().into_iter().zip(tape.tensors()).enumerate() {
        debug_assert_eq!(tensor.len(), grad.len(), "gradient shape mismatch for {name}");
        let (m, v) = (&mut state.m[ti], &mut state.v[ti]);
        for i in 0..tensor.len() {
            let g = grad[i];
            if !g.is_finite() {
                return Err(Error::NumericalError(format!("non-finite gradient in {name}[{i}]")));
            }
            m[i] = beta1 * m[i] + (1.0 - beta1) * g;
            v[i] = beta2 * v[i] + (1.0 - beta2) * g * g;
            let m_hat = m[i] / bc1;
            let v_hat = v[i] / bc2;
            tensor[i] -= lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
    Ok(())
}
