//! Feed-forward and 1D convolutional classifiers trained with Adam.
//!
//! Activations are stored per sample as flat channel-major vectors. Every
//! computation is `f64`.

mod config;
mod gradcheck;
mod model;
mod train;

pub use config::{Arch, CnnConfig, FnnConfig, Loss, TrainConfig};
pub use gradcheck::{
    grad_check, relative_error, GradCheckOptions, GradCheckReport, GroupError, MAX_CHECK_BATCH,
};
pub use model::{Gradients, Head, NnModel, ParamGroup};
pub use train::{loss, loss_and_grad, train, Curves, EvalSet};
