use serde::{Deserialize, Serialize};

use super::constants::{constants, BoundConstants};
use super::surrogate::SurrogateMode;
use crate::domain::MixtureWeights;
use crate::{Error, Result};

/// `γ_t(λ)` and `γ′_t(λ)` for one task.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaProfile {
    pub task: usize,
    pub lambda: f64,
    /// `min({1/t} ∪ {λ k_tj})`
    pub gamma: f64,
    /// `max({1} ∪ {λ k_tj})`
    pub gamma_prime: f64,
}

pub fn gamma(task: usize, lambda: f64, weights: &MixtureWeights) -> Result<GammaProfile> {
    if task < 2 || weights.task_index() != task {
        return Err(Error::InvalidWeights(format!(
            "weights are for task {}, asked for task {task}",
            weights.task_index()
        )));
    }
    if !(lambda >= 0.0) {
        return Err(Error::NegativeLambda(lambda));
    }
    let scaled = weights.weights().iter().map(|k| lambda * k);
    let gamma = scaled.clone().fold(1.0 / task as f64, f64::min);
    let gamma_prime = scaled.fold(1.0, f64::max);
    Ok(GammaProfile {
        task,
        lambda,
        gamma,
        gamma_prime,
    })
}

/// One coefficient for every task, or one per task `t = 2..T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LambdaSpec {
    Fixed(f64),
    PerTask(Vec<f64>),
}

impl LambdaSpec {
    /// λ for task `t ≥ 2`.
    pub fn at(&self, task: usize) -> Result<f64> {
        match self {
            LambdaSpec::Fixed(l) => Ok(*l),
            LambdaSpec::PerTask(v) => v.get(task.wrapping_sub(2)).copied().ok_or_else(|| {
                Error::InvalidArgument(format!("no distillation coefficient for task {task}"))
            }),
        }
    }
}

/// Inputs of the final-test-loss bounds.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundInput {
    /// Number of negatives.
    pub k: usize,
    /// `L_train(f_1), …, L_train(f_T)`.
    pub train_losses: Vec<f64>,
    /// Mixture weights for tasks `2..=T`.
    pub weights: Vec<MixtureWeights>,
    pub lambdas: LambdaSpec,
    /// Plug-in values for `min_f L_con(f; D_t)`, tasks `2..=T`. `None` uses
    /// the analytic floor `log(1 + k e⁻²)`.
    pub min_con: Option<Vec<f64>>,
    pub surrogate: SurrogateMode,
}

impl BoundInput {
    /// Fixed-λ input with the analytic surrogate.
    pub fn new(k: usize, train_losses: Vec<f64>, weights: Vec<MixtureWeights>, lambda: f64) -> Self {
        BoundInput {
            k,
            train_losses,
            weights,
            lambdas: LambdaSpec::Fixed(lambda),
            min_con: None,
            surrogate: SurrogateMode::Analytic,
        }
    }

    pub fn with_lambdas(mut self, lambdas: LambdaSpec) -> Self {
        self.lambdas = lambdas;
        self
    }

    fn tasks(&self) -> Result<usize> {
        let t = self.train_losses.len();
        if t < 2 {
            return Err(Error::InvalidArgument(format!("bounds need at least 2 tasks, got {t}")));
        }
        if self.weights.len() != t - 1 {
            return Err(Error::InvalidWeights(format!(
                "{t} tasks need {} weight vectors, got {}",
                t - 1,
                self.weights.len()
            )));
        }
        for (i, w) in self.weights.iter().enumerate() {
            if w.task_index() != i + 2 {
                return Err(Error::InvalidWeights(format!(
                    "weight vector {i} is for task {}, expected {}",
                    w.task_index(),
                    i + 2
                )));
            }
        }
        if let Some(m) = &self.min_con {
            if m.len() != t - 1 {
                return Err(Error::InvalidArgument(format!(
                    "{t} tasks need {} min-loss surrogates, got {}",
                    t - 1,
                    m.len()
                )));
            }
        }
        Ok(t)
    }

    fn profiles(&self) -> Result<Vec<GammaProfile>> {
        self.weights
            .iter()
            .map(|w| gamma(w.task_index(), self.lambdas.at(w.task_index())?, w))
            .collect()
    }

    fn min_con_values(&self, c: &BoundConstants) -> Vec<f64> {
        match &self.min_con {
            Some(v) => v.clone(),
            None => {
                let floor = (1.0 + c.k as f64 * (-2.0f64).exp()).ln();
                vec![floor; self.train_losses.len() - 1]
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UpperBound {
    /// Coefficient of `L_train(f_t)` for `t = 1..=T`.
    pub coefficients: Vec<f64>,
    pub eta: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LowerBound {
    pub coefficients: Vec<f64>,
    pub eta_prime: f64,
    pub value: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `α^{T−1} L_train(f_1) + Σ_{t≥2} α^{T−t}/γ_t(λ_t) L_train(f_t) + η`.
pub fn theorem1_upper(input: &BoundInput) -> Result<UpperBound> {
    let c = constants(input.k)?;
    upper_with(&c, input)
}

pub(crate) fn upper_with(c: &BoundConstants, input: &BoundInput) -> Result<UpperBound> {
    let tasks = input.tasks()?;
    let profiles = input.profiles()?;
    let min_con = input.min_con_values(c);
    let mut coefficients = vec![c.alpha.powi(tasks as i32 - 1)];
    let mut eta = c.beta * c.accumulation(tasks);
    for (g, m) in profiles.iter().zip(&min_con) {
        if !(g.gamma > 0.0) {
            return Err(Error::ZeroGamma { task: g.task });
        }
        let decay = c.alpha.powi((tasks - g.task) as i32);
        coefficients.push(decay / g.gamma);
        eta += decay * (1.0 - 1.0 / g.gamma) * m;
    }
    let value = dot(&coefficients, &input.train_losses) + eta;
    Ok(UpperBound {
        coefficients,
        eta,
        value,
    })
}

/// `α^{T−1} L_train(f_1) + Σ_{t≥2} α^{T−t}/γ′_t(λ_t) L_train(f_t) + η′`.
pub fn theorem1_lower(input: &BoundInput) -> Result<LowerBound> {
    let c = constants(input.k)?;
    lower_with(&c, input)
}

pub(crate) fn lower_with(c: &BoundConstants, input: &BoundInput) -> Result<LowerBound> {
    let tasks = input.tasks()?;
    let profiles = input.profiles()?;
    let mut coefficients = vec![c.alpha.powi(tasks as i32 - 1)];
    for g in &profiles {
        coefficients.push(c.alpha.powi((tasks - g.task) as i32) / g.gamma_prime);
    }
    let eta_prime = c.beta_prime * c.accumulation(tasks);
    let value = dot(&coefficients, &input.train_losses) + eta_prime;
    Ok(LowerBound {
        coefficients,
        eta_prime,
        value,
    })
}

/// Both bounds with every input echoed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub tasks: usize,
    pub constants: BoundConstants,
    pub train_losses: Vec<f64>,
    pub weights: Vec<Vec<f64>>,
    pub lambdas: Vec<f64>,
    pub gammas: Vec<GammaProfile>,
    pub surrogate: SurrogateMode,
    pub min_con: Vec<f64>,
    pub upper_coefficients: Vec<f64>,
    pub lower_coefficients: Vec<f64>,
    pub eta: f64,
    pub eta_prime: f64,
    pub upper: f64,
    pub lower: f64,
    pub realized_test_loss: Option<f64>,
}

impl BoundReport {
    /// `lower − tol ≤ realized ≤ upper + tol`, or `None` without a realized loss.
    pub fn sandwich_holds(&self, tol: f64) -> Option<bool> {
        self.realized_test_loss
            .map(|r| self.lower - tol <= r && r <= self.upper + tol)
    }
}

pub fn bound_report(input: &BoundInput, realized_test_loss: Option<f64>) -> Result<BoundReport> {
    let c = constants(input.k)?;
    let up = upper_with(&c, input)?;
    let lo = lower_with(&c, input)?;
    let gammas = input.profiles()?;
    Ok(BoundReport {
        tasks: input.train_losses.len(),
        constants: c,
        train_losses: input.train_losses.clone(),
        weights: input.weights.iter().map(|w| w.weights().to_vec()).collect(),
        lambdas: gammas.iter().map(|g| g.lambda).collect(),
        gammas,
        surrogate: input.surrogate,
        min_con: input.min_con_values(&c),
        upper_coefficients: up.coefficients,
        lower_coefficients: lo.coefficients,
        eta: up.eta,
        eta_prime: lo.eta_prime,
        upper: up.value,
        lower: lo.value,
        realized_test_loss,
    })
}
