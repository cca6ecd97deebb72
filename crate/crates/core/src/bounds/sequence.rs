use super::surrogate::{min_con_surrogate, SurrogateConfig, SurrogateMode};
use super::theorem::{bound_report, BoundInput, BoundReport, LambdaSpec};
use crate::domain::{mixture, EmbeddingModel, MixtureWeights, TaskDistribution};
use crate::losses::{population_test_loss, population_train_loss, PriorTasks};
use crate::{Error, Result};

/// A trained model sequence together with the task distributions it was
/// trained on.
pub struct SequenceInput<'a> {
    /// `f_1, …, f_T`.
    pub models: Vec<&'a dyn EmbeddingModel>,
    /// `D_1, …, D_T`.
    pub tasks: &'a [TaskDistribution],
    /// Weights of `D_{1:t−1}` for `t = 2..=T`.
    pub weights: Vec<MixtureWeights>,
    pub lambdas: LambdaSpec,
    pub k: usize,
    pub surrogate: SurrogateMode,
    pub surrogate_config: SurrogateConfig,
}

/// Exact population training losses of every model, the realized final
/// test loss, and both bounds.
pub fn sequence_report(input: &SequenceInput<'_>) -> Result<BoundReport> {
    let tasks = input.tasks.len();
    if input.models.len() != tasks {
        return Err(Error::InvalidArgument(format!(
            "{} models for {tasks} tasks",
            input.models.len()
        )));
    }
    if tasks < 2 || input.weights.len() != tasks - 1 {
        return Err(Error::InvalidWeights(format!(
            "{tasks} tasks need {} weight vectors, got {}",
            tasks.saturating_sub(1),
            input.weights.len()
        )));
    }
    let mut train_losses = Vec::with_capacity(tasks);
    train_losses.push(population_train_loss(input.models[0], &input.tasks[0], None, input.k)?);
    for t in 2..=tasks {
        let seen = mixture(&input.tasks[..t - 1], &input.weights[t - 2])?;
        let prior = PriorTasks {
            prev: input.models[t - 2],
            seen: &seen,
            lambda: input.lambdas.at(t)?,
        };
        train_losses.push(population_train_loss(
            input.models[t - 1],
            &input.tasks[t - 1],
            Some(prior),
            input.k,
        )?);
    }
    let min_con = input.tasks[1..]
        .iter()
        .map(|d| min_con_surrogate(d, input.k, input.surrogate, &input.surrogate_config))
        .collect::<Result<Vec<_>>>()?;
    let realized = population_test_loss(input.models[tasks - 1], input.tasks, input.k)?;
    let bounds = BoundInput {
        k: input.k,
        train_losses,
        weights: input.weights.clone(),
        lambdas: input.lambdas.clone(),
        min_con: Some(min_con),
        surrogate: input.surrogate,
    };
    bound_report(&bounds, Some(realized))
}
