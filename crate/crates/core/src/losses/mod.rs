//! Loss functionals.
//!
//! Population losses are exact expectations over the tuple distribution of
//! a finite [`TaskDistribution`](crate::domain::TaskDistribution). Batch
//! losses are the SupCon and IRD estimators the trainer optimizes; they are
//! sums over anchors, not means.

mod empirical;
mod link;
mod population;

pub use empirical::{
    empirical_contrastive, empirical_distillation, ird_with_grad, supcon_with_grad,
    BatchEmbeddings, Temperatures,
};
pub use link::{log_softmax, logistic_link, softmax, Margins};
pub use population::{
    decomposition_residual, distillation_cross_term, population_contrastive,
    population_distillation, population_self_entropy, population_test_loss,
    population_train_loss, similarity_prob, PriorTasks,
};
