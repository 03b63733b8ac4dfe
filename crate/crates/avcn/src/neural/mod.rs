//! From-scratch dense network over aligned grids: 1-D vertex convolutions in
//! parallel branches, a dense ReLU layer with inverted dropout, a softmax
//! head, hand-written reverse-mode gradients, and Adam. Everything runs in
//! f64 so gradient checks against finite differences are meaningful.

mod adam;
mod conv;
mod network;

pub use adam::{adam_step, AdamState};
pub use conv::{stack_branch, vertex_conv_backward, vertex_conv_forward, ConvLayerParams};
pub use network::{
    forward, loss_and_gradients, preactivation_margin, Architecture, Branch, DenseParams, GradientTape, NetworkParams,
};
