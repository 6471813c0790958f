//! Dense-tensor numeric core: forward/backward layers, Adam, and a
//! finite-difference gradient checker.

mod adam;
pub mod layers;
mod tensor;

pub mod gradcheck;

pub use adam::{adam_step, AdamState};
pub use gradcheck::grad_check;
pub use layers::{
    conv1d_same, conv1d_same_backward, cross_entropy, dense, dense_backward, dropout,
    dropout_backward, embedding_lookup, embedding_lookup_backward, max_pool_time,
    max_pool_time_backward, softmax, softmax_ce_grad, Activation, ConvGrads, DenseGrads,
    DropoutMode, FilterBank,
};
pub use tensor::Tensor;
