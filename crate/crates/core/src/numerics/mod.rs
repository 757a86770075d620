//! Dense linear algebra, activations, seeded randomness and the
//! finite-difference gradient checker used to verify every backward pass.

mod activation;
mod gradcheck;
mod linalg;
mod matrix;
mod params;
mod rng;

pub use activation::{relu, sigmoid, sigmoid_scalar, softmax_rows, softmax_rows_inplace, tanh};
pub use gradcheck::grad_check;
pub use linalg::{cholesky, spd_inverse};
pub use matrix::{gemm, Matrix};
pub use params::ParamSet;
pub use rng::{init_xavier, xavier_bound, Rng};
