use serde::{Deserialize, Serialize};

use super::constants::constants;
use super::theorem::gamma;
use crate::domain::MixtureWeights;
use crate::{Error, Result};

/// `U_t = Σ_{j=2}^t α^{t−j}/γ_j(λ_t) · L_train(f_j)`, with the current λ_t
/// inside every γ_j.
///
/// `train_losses[j−1]` is `L_train(f_j)`; `weights[j−2]` holds `k_{j·}`.
pub fn compute_u(
    train_losses: &[f64],
    task: usize,
    lambda: f64,
    weights: &[MixtureWeights],
    k: usize,
) -> Result<f64> {
    if task < 2 || train_losses.len() < task || weights.len() < task - 1 {
        return Err(Error::InvalidArgument(format!(
            "U_{task} needs tasks 1..={task}: have {} losses and {} weight vectors",
            train_losses.len(),
            weights.len()
        )));
    }
    let alpha = constants(k)?.alpha;
    let mut u = 0.0;
    for j in 2..=task {
        let g = gamma(j, lambda, &weights[j - 2])?;
        if !(g.gamma > 0.0) {
            return Err(Error::ZeroGamma { task: j });
        }
        u += alpha.powi((task - j) as i32) / g.gamma * train_losses[j - 1];
    }
    Ok(u)
}

/// Threshold scheduler state: λ grows by `delta` whenever `U_t` exceeds
/// `threshold`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScheduleState {
    pub task: usize,
    pub lambda: f64,
    pub threshold: f64,
    pub delta: f64,
}

impl ScheduleState {
    pub fn new(task: usize, lambda: f64, threshold: f64, delta: f64) -> Result<Self> {
        if !(threshold > 0.0) {
            return Err(Error::InvalidArgument(format!("threshold must be positive, got {threshold}")));
        }
        if !(delta >= 0.0) {
            return Err(Error::InvalidArgument(format!("step must be non-negative, got {delta}")));
        }
        if !(lambda >= 0.0) {
            return Err(Error::NegativeLambda(lambda));
        }
        Ok(ScheduleState {
            task,
            lambda,
            threshold,
            delta,
        })
    }
}

/// `λ_{t+1} = λ_t + Δ_t` if `U_t > u_t`, else `λ_t`.
pub fn theorem2_step(state: ScheduleState, u: f64) -> ScheduleState {
    let lambda = if u > state.threshold {
        state.lambda + state.delta
    } else {
        state.lambda
    };
    ScheduleState {
        task: state.task + 1,
        lambda,
        ..state
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform(tasks: usize) -> Vec<MixtureWeights> {
        (2..=tasks).map(|t| MixtureWeights::uniform(t).unwrap()).collect()
    }

    #[test]
    fn u_examples() {
        let w = uniform(3);
        let u2 = compute_u(&[1.0, 0.7], 2, 1.0, &w, 1).unwrap();
        assert!((u2 - 1.4).abs() < 1e-15);
        let alpha = constants(1).unwrap().alpha;
        let u3 = compute_u(&[1.0; 3], 3, 1.0, &w, 1).unwrap();
        assert!((u3 - (2.0 * alpha + 3.0)).abs() < 1e-12);
        assert!((u3 - 6.523).abs() < 1e-3);
        assert!(compute_u(&[1.0; 3], 1, 1.0, &w, 1).is_err());
    }

    #[test]
    fn step_rule() {
        let s = ScheduleState::new(2, 1.0, 3.0, 0.5).unwrap();
        assert_eq!(theorem2_step(s, 5.0).lambda, 1.5);
        assert_eq!(theorem2_step(s, 2.0).lambda, 1.0);
        assert_eq!(theorem2_step(s, 2.0).task, 3);
        assert!(ScheduleState::new(2, 1.0, 0.0, 0.5).is_err());
        assert!(ScheduleState::new(2, 1.0, 1.0, -0.5).is_err());
    }
}
