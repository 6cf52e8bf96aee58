//! Dense tensors, the network's operator set with explicit backward passes,
//! an Adam optimizer, a finite-difference gradient checker and the small
//! amount of linear algebra the importance metrics need.

mod gradcheck;
pub mod linalg;
mod ops;
mod optim;
mod params;
pub mod rng;
mod tensor;

pub use gradcheck::finite_diff_check;
pub use ops::{
    affine_backward, affine_forward, neighbor_max_backward, neighbor_max_reduce, relu_backward,
    relu_forward, softmax_cross_entropy, AffineGrads,
};
pub use optim::{adam_step, AdamConfig, OptimizerState};
pub use params::{Gradients, ParamSet};
pub use tensor::Tensor;
