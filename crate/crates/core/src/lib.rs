//! Contrastive continual learning at desk scale.
//!
//! The crate is organised bottom-up:
//!
//! * [`domain`] holds finite labeled distributions, unit-sphere embeddings and
//!   the exact enumeration of anchor/positive/negative tuples.
//! * [`losses`] evaluates the population contrastive and distillation losses
//!   exactly, and the batch SupCon / IRD losses used for training.
//! * [`bounds`] turns the contrastive/distillation inequalities and the
//!   training-loss bounds on the final test loss into executable checks.
//! * [`trainer`] is a small MLP encoder with hand-written backprop and SGD.
//! * [`continual`] drives the task loop with a replay buffer and the adaptive
//!   distillation coefficient.
//! * [`data`] generates synthetic task sequences and reads IDX image files.

pub mod bounds;
pub mod continual;
pub mod data;
pub mod domain;
pub mod error;
pub mod losses;
pub mod rng;
pub mod trainer;

pub use error::{Error, Result};
