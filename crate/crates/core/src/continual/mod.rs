//! The task loop: replay buffer, adaptive distillation coefficient, and
//! linear-probe evaluation.

mod augment;
mod buffer;
mod probe;
mod run;
mod schedule;

pub use augment::Augmentation;
pub use buffer::{ReplayBuffer, Sample};
pub use probe::{linear_probe, ClassBalancedSampler, ProbeConfig, ProbeReport};
pub use run::{
    evaluate_bounds, final_probe, resume_sequence, run_sequence, run_task, BoundsConfig, EpochRow,
    ExperimentTrace, RunConfig, RunState, TaskRecord,
};
pub use schedule::{LambdaMode, LambdaSchedule, ScheduleConfig};
