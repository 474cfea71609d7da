//! Minimal reverse-mode automatic differentiation over dense 2D tensors.
//!
//! Arithmetic is 64-bit throughout so gradient checks are meaningful;
//! checkpoints may narrow to 32-bit storage.

mod checkpoint;
mod gradcheck;
mod optim;
mod tape;
mod tensor;

pub use checkpoint::{Checkpoint, CheckpointError, Dtype, FORMAT_VERSION};
pub use gradcheck::finite_diff_check;
pub use optim::{Gradients, Optimizer, OptimizerConfig, OptimizerKind, ParamSet};
pub use tape::{attention, Tape, Var};
pub use tensor::Tensor;
