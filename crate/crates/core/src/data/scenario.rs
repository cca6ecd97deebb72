use serde::{Deserialize, Serialize};

use crate::bounds::{BoundInput, LambdaSpec, SurrogateMode};
use crate::domain::MixtureWeights;
use crate::{Error, Result};

/// How the seen-task weights `k_{t·}` are built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "rule")]
pub enum WeightRule {
    /// `k_{t1} = 2/t`, others `1/t`; `k_{21} = 1`.
    Example1,
    /// `k_{t1} = 1 − (t−2)/(ρt)`, others `1/(ρt)`.
    Example2 { rho: f64 },
    /// `k_{t1} = 2.9/t`, `k_{t2} = 0.1/t`, others `1/t`; `k_{21} = 1`.
    Example3,
    /// Row `t−2` holds `k_{t·}`.
    Custom { matrix: Vec<Vec<f64>> },
}

/// Declared training losses `L_train(f_1..f_T)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "rule")]
pub enum LossRule {
    Equal { value: f64 },
    /// `L_t = first · ratio^{t−1}`.
    Geometric { ratio: f64, first: f64 },
    Measured { values: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub tasks: usize,
    pub weights: WeightRule,
    pub losses: LossRule,
}

/// `k_{t·}` for task `t ≥ 2`.
pub fn example_weights(spec: &ScenarioSpec, task: usize) -> Result<MixtureWeights> {
    if task < 2 || task > spec.tasks {
        return Err(Error::InvalidArgument(format!(
            "task {task} outside 2..={}",
            spec.tasks
        )));
    }
    let t = task as f64;
    let w = match &spec.weights {
        WeightRule::Example1 => {
            if task == 2 {
                vec![1.0]
            } else {
                let mut v = vec![1.0 / t; task - 1];
                v[0] = 2.0 / t;
                v
            }
        }
        WeightRule::Example2 { rho } => {
            if !(*rho > 0.0) {
                return Err(Error::InvalidArgument(format!("ρ must be positive, got {rho}")));
            }
            let mut v = vec![1.0 / (rho * t); task - 1];
            v[0] = 1.0 - (t - 2.0) / (rho * t);
            v
        }
        WeightRule::Example3 => {
            if task == 2 {
                vec![1.0]
            } else {
                let mut v = vec![1.0 / t; task - 1];
                v[0] = 2.9 / t;
                v[1] = 0.1 / t;
                v
            }
        }
        WeightRule::Custom { matrix } => matrix
            .get(task - 2)
            .cloned()
            .ok_or_else(|| Error::InvalidWeights(format!("no weight row for task {task}")))?,
    };
    MixtureWeights::new(task, w)
}

impl ScenarioSpec {
    pub fn all_weights(&self) -> Result<Vec<MixtureWeights>> {
        (2..=self.tasks).map(|t| example_weights(self, t)).collect()
    }

    pub fn train_losses(&self) -> Result<Vec<f64>> {
        let v = match &self.losses {
            LossRule::Equal { value } => vec![*value; self.tasks],
            LossRule::Geometric { ratio, first } => {
                (0..self.tasks).map(|i| first * ratio.powi(i as i32)).collect()
            }
            LossRule::Measured { values } => {
                if values.len() != self.tasks {
                    return Err(Error::InvalidArgument(format!(
                        "{} measured losses for {} tasks",
                        values.len(),
                        self.tasks
                    )));
                }
                values.clone()
            }
        };
        if v.iter().any(|l| !l.is_finite() || *l < 0.0) {
            return Err(Error::InvalidArgument("training losses must be finite and non-negative".into()));
        }
        Ok(v)
    }

    /// Theorem inputs with the analytic surrogate.
    pub fn bound_input(&self, k: usize, lambdas: LambdaSpec) -> Result<BoundInput> {
        Ok(BoundInput {
            k,
            train_losses: self.train_losses()?,
            weights: self.all_weights()?,
            lambdas,
            min_con: None,
            surrogate: SurrogateMode::Analytic,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(weights: WeightRule) -> ScenarioSpec {
        ScenarioSpec {
            tasks: 6,
            weights,
            losses: LossRule::Equal { value: 1.0 },
        }
    }

    fn close(a: &[f64], b: &[f64]) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-15)
    }

    #[test]
    fn published_constructions() {
        let w1 = example_weights(&spec(WeightRule::Example1), 5).unwrap();
        assert!(close(w1.weights(), &[0.4, 0.2, 0.2, 0.2]));
        let w3 = example_weights(&spec(WeightRule::Example3), 5).unwrap();
        assert!(close(w3.weights(), &[0.58, 0.02, 0.2, 0.2]));
        let w2 = example_weights(&spec(WeightRule::Example2 { rho: 1.0 }), 4).unwrap();
        assert!(close(w2.weights(), &[0.5, 0.25, 0.25]));
        assert_eq!(example_weights(&spec(WeightRule::Example3), 2).unwrap().weights(), &[1.0]);
        assert!(example_weights(&spec(WeightRule::Example2 { rho: 0.0 }), 3).is_err());
    }

    #[test]
    fn loss_rules() {
        let mut s = spec(WeightRule::Example1);
        s.losses = LossRule::Geometric { ratio: 0.5, first: 2.0 };
        assert_eq!(s.train_losses().unwrap()[..3], [2.0, 1.0, 0.5]);
        s.losses = LossRule::Measured { values: vec![1.0] };
        assert!(s.train_losses().is_err());
        s.losses = LossRule::Equal { value: 1.0 };
        assert_eq!(s.bound_input(1, LambdaSpec::Fixed(1.0)).unwrap().weights.len(), 5);
    }

    #[test]
    fn json_shape() {
        let s: ScenarioSpec = serde_json::from_str(
            r#"{"tasks": 3, "weights": {"rule": "example2", "rho": 1.05}, "losses": {"rule": "equal", "value": 1.0}}"#,
        )
        .unwrap();
        assert_eq!(s.weights, WeightRule::Example2 { rho: 1.05 });
    }
}
