//! A small MLP encoder trained with the batch contrastive and distillation
//! losses.

mod checkpoint;
mod encoder;
mod grad;
mod sgd;

pub use checkpoint::{manifest_path, Checkpoint, Manifest, FORMAT_VERSION};
pub use encoder::{parameter_count, Activation, Encoder, EncoderConfig, ForwardCache};
pub use grad::{finite_diff_check, grad_total, total_loss, Batch, LossBreakdown, Objective};
pub use sgd::{Sgd, SgdConfig};

use crate::Result;

/// `θ ← θ − η (momentum-accumulated gradient)` on the encoder in place.
pub fn sgd_step(enc: &mut Encoder, grad: &[f64], opt: &mut Sgd) -> Result<()> {
    opt.step(enc.params_mut(), grad)
}
