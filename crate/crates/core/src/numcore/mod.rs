//! Dense `f64` tensors and a tape-based reverse-mode autodiff engine.
//!
//! A [`Graph`] is rebuilt for every forward pass. Trainable tensors live in a
//! [`ParamStore`] and are copied onto the tape as parameter leaves; calling
//! [`Graph::backward`] on a scalar node returns one gradient per parameter
//! that the loss depends on.

pub mod gradcheck;
mod graph;
mod params;
mod tensor;

pub use gradcheck::{check_gradients, GradCheck};
pub use graph::{Gradients, Graph, Var};
pub use params::{init_uniform, ParamId, ParamStore};
pub use tensor::{softmax, Tensor, TensorError};
