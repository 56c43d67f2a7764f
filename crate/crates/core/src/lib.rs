pub mod artifact;
pub mod autodiff;
pub mod cca;
pub mod checkpoint;
pub mod cli;
pub mod data;
pub mod dcca;
pub mod downstream;
pub mod error;
pub mod fusion;
pub mod gradcheck;
pub mod iccn;
pub mod linalg;
pub mod loss;
pub mod nn;
pub mod optim;
pub mod rng;
pub mod tensor;

pub use error::{Error, Result};
pub use tensor::Tensor;
