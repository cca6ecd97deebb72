//! Executable forms of the performance bounds.
//!
//! [`lemma1_slack`] measures how far two consecutive models are from
//! violating the contrastive/distillation sandwich. [`theorem1_upper`] and
//! [`theorem1_lower`] bound the final test loss by a linear combination of
//! per-task training losses; [`compute_u`] and [`theorem2_step`] implement
//! the threshold scheduler for an increasing distillation coefficient;
//! [`turning_point`] finds where the upper bound stops decreasing in λ.

mod constants;
mod lemma;
mod schedule;
mod sequence;
mod surrogate;
mod theorem;
mod turning;

pub use constants::{constants, BoundConstants};
pub use lemma::{lemma1_slack, lemma1_slack_with, LemmaSlack};
pub use schedule::{compute_u, theorem2_step, ScheduleState};
pub use sequence::{sequence_report, SequenceInput};
pub use surrogate::{min_con_surrogate, population_contrastive_grad, SurrogateConfig, SurrogateMode};
pub use theorem::{
    bound_report, gamma, theorem1_lower, theorem1_upper, BoundInput, BoundReport, GammaProfile,
    LambdaSpec, LowerBound, UpperBound,
};
pub use turning::{bound_curve, lambda_grid, sweep_turning_point, turning_point, CurvePoint};
