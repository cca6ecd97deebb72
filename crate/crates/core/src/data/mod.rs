//! Task sequences: synthetic blobs, rotated variants, the worked bound
//! scenarios, Monte Carlo loss estimates and IDX image files.

mod blobs;
mod idx;
mod montecarlo;
mod scenario;

pub use blobs::{blob_centers, make_blob_sequence, make_rotated_sequence, rotate_split, BlobConfig, TaskSplit};
pub use idx::{idx_read, idx_task_sequence, idx_write, IdxImageSet, IdxSource, IMAGE_MAGIC, LABEL_MAGIC};
pub use montecarlo::{monte_carlo_contrastive, McEstimate};
pub use scenario::{example_weights, LossRule, ScenarioSpec, WeightRule};
