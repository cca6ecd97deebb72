use serde::{Deserialize, Serialize};

use crate::bounds::{theorem2_step, ScheduleState};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LambdaMode {
    /// `λ_t = λ_0`.
    Fixed,
    /// `λ_t = κ r`.
    Pure,
    /// `λ_t = min(1, κ r)`.
    Min,
    /// `λ_t = max(λ_0, κ r)`.
    #[default]
    Max,
    /// Start at `λ_0`, grow by `Δ` whenever `U_t` exceeds its threshold.
    /// Experimental.
    Theorem2,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleConfig {
    pub mode: LambdaMode,
    pub lambda0: f64,
    pub kappa: f64,
    /// Fixed `u_t` for [`LambdaMode::Theorem2`]; `None` uses the median of
    /// the `U` values observed so far.
    #[serde(default)]
    pub threshold: Option<f64>,
    #[serde(default = "default_delta")]
    pub delta: f64,
}

fn default_delta() -> f64 {
    0.1
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        ScheduleConfig {
            mode: LambdaMode::Max,
            lambda0: 1.0,
            kappa: 1.0,
            threshold: None,
            delta: default_delta(),
        }
    }
}

impl ScheduleConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda0 >= 0.0) || !self.lambda0.is_finite() {
            return Err(Error::NegativeLambda(self.lambda0));
        }
        if !(self.kappa > 0.0) {
            return Err(Error::InvalidArgument(format!("κ must be positive, got {}", self.kappa)));
        }
        if self.mode == LambdaMode::Min && self.lambda0 > 1.0 {
            return Err(Error::InvalidArgument("min mode caps λ at 1, so λ_0 must not exceed 1".into()));
        }
        if !(self.delta >= 0.0) {
            return Err(Error::InvalidArgument(format!("Δ must be non-negative, got {}", self.delta)));
        }
        if let Some(u) = self.threshold {
            if !(u > 0.0) {
                return Err(Error::InvalidArgument(format!("threshold must be positive, got {u}")));
            }
        }
        Ok(())
    }
}

/// Distillation-coefficient state threaded through a task sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaSchedule {
    config: ScheduleConfig,
    /// `Σ L̂_dis(j)` and `Σ L̂_con(j)` over completed tasks `j ≥ 2`.
    dis_sum: f64,
    con_sum: f64,
    /// Tasks already folded into the sums.
    recorded: Vec<usize>,
    /// Threshold-mode state.
    grown_lambda: f64,
    observed_u: Vec<f64>,
}

impl LambdaSchedule {
    pub fn new(config: ScheduleConfig) -> Result<Self> {
        config.validate()?;
        Ok(LambdaSchedule {
            config,
            dis_sum: 0.0,
            con_sum: 0.0,
            recorded: Vec::new(),
            grown_lambda: config.lambda0,
            observed_u: Vec::new(),
        })
    }

    pub fn config(&self) -> &ScheduleConfig {
        &self.config
    }

    /// `Σ L̂_dis / Σ L̂_con` over recorded tasks, if any.
    pub fn ratio(&self) -> Option<f64> {
        (!self.recorded.is_empty()).then(|| self.dis_sum / self.con_sum)
    }

    /// λ for task `t ≥ 2`.
    pub fn adaptive_lambda(&self, task: usize) -> Result<f64> {
        if task < 2 {
            return Err(Error::InvalidArgument(format!("task {task} has no distillation term")));
        }
        let c = &self.config;
        match c.mode {
            LambdaMode::Fixed => return Ok(c.lambda0),
            LambdaMode::Theorem2 => return Ok(self.grown_lambda),
            _ => {}
        }
        if task == 2 {
            return Ok(c.lambda0);
        }
        let expected: Vec<usize> = (2..task).collect();
        if self.recorded != expected {
            return Err(Error::InvalidArgument(format!(
                "λ_{task} needs losses of tasks 2..{task}, have {:?}",
                self.recorded
            )));
        }
        if self.con_sum == 0.0 {
            return Err(Error::DegenerateRatio { task });
        }
        let r = c.kappa * self.dis_sum / self.con_sum;
        Ok(match c.mode {
            LambdaMode::Pure => r,
            LambdaMode::Min => r.min(1.0),
            LambdaMode::Max => r.max(c.lambda0),
            LambdaMode::Fixed | LambdaMode::Theorem2 => unreachable!(),
        })
    }

    /// Adds the final losses of task `t`; tasks before the second carry no
    /// distillation and are ignored.
    pub fn record(&mut self, task: usize, contrastive: f64, distillation: f64) -> Result<()> {
        if task < 2 {
            return Ok(());
        }
        if self.recorded.contains(&task) {
            return Err(Error::InvalidArgument(format!("losses of task {task} already recorded")));
        }
        if !contrastive.is_finite() || !distillation.is_finite() {
            return Err(Error::InvalidArgument(format!("task {task} produced non-finite losses")));
        }
        self.dis_sum += distillation;
        self.con_sum += contrastive;
        self.recorded.push(task);
        Ok(())
    }

    /// Feeds `U_t` to the threshold rule and returns the next λ.
    pub fn observe_u(&mut self, task: usize, u: f64) -> f64 {
        let threshold = self.config.threshold.or_else(|| median(&self.observed_u));
        if let Some(threshold) = threshold {
            let state = ScheduleState {
                task,
                lambda: self.grown_lambda,
                threshold,
                delta: self.config.delta,
            };
            self.grown_lambda = theorem2_step(state, u).lambda;
        }
        self.observed_u.push(u);
        self.grown_lambda
    }
}

fn median(v: &[f64]) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    Some(if n % 2 == 1 { s[n / 2] } else { 0.5 * (s[n / 2 - 1] + s[n / 2]) })
}
