use serde::Serialize;

use super::constants::{constants, BoundConstants};
use crate::domain::{EmbeddingModel, TaskDistribution};
use crate::losses::{population_contrastive, population_distillation};
use crate::Result;

/// Distance of each side of the consecutive-model sandwich from violation.
/// Both are non-negative when the inequalities hold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LemmaSlack {
    /// `α L_con(f_prev) + L_dis + β − L_con(f_t)`
    pub upper: f64,
    /// `L_con(f_t) − α L_con(f_prev) − L_dis − β′`
    pub lower: f64,
}

pub fn lemma1_slack(
    current: &dyn EmbeddingModel,
    prev: &dyn EmbeddingModel,
    dist: &TaskDistribution,
    k: usize,
) -> Result<LemmaSlack> {
    lemma1_slack_with(&constants(k)?, current, prev, dist)
}

/// As [`lemma1_slack`] with explicit constants (their `k` sets the number
/// of negatives).
pub fn lemma1_slack_with(
    c: &BoundConstants,
    current: &dyn EmbeddingModel,
    prev: &dyn EmbeddingModel,
    dist: &TaskDistribution,
) -> Result<LemmaSlack> {
    let con_t = population_contrastive(current, dist, c.k)?;
    let con_prev = population_contrastive(prev, dist, c.k)?;
    let dis = population_distillation(current, prev, dist, c.k)?;
    Ok(LemmaSlack {
        upper: c.alpha * con_prev + dis + c.beta - con_t,
        lower: con_t - c.alpha * con_prev - dis - c.beta_prime,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::ConstantModel;

    #[test]
    fn constant_models_single_negative() {
        let d = TaskDistribution::uniform(1, vec![vec![0.0], vec![1.0]], vec![0, 1]).unwrap();
        let c = ConstantModel::new(1, &[1.0, 0.0]).unwrap();
        let s = lemma1_slack(&c, &c, &d, 1).unwrap();
        // α log 2 + log 2 + β − log 2
        assert!((s.upper - 1.235_854_224_055_461).abs() < 1e-12);
        assert!(s.lower > 0.0);
    }
}
