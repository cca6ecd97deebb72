use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SgdConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    /// Samples per minibatch; each contributes two views.
    pub batch_size: usize,
    pub momentum: f64,
    /// Divide summed batch losses by the number of views before stepping.
    #[serde(default = "yes")]
    pub divide_by_views: bool,
}

fn yes() -> bool {
    true
}

impl Default for SgdConfig {
    fn default() -> Self {
        SgdConfig {
            learning_rate: 0.05,
            epochs: 200,
            batch_size: 32,
            momentum: 0.9,
            divide_by_views: true,
        }
    }
}

impl SgdConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::InvalidArgument(format!("learning rate must be positive, got {}", self.learning_rate)));
        }
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::InvalidArgument("epochs and batch size must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::InvalidArgument(format!("momentum must lie in [0, 1), got {}", self.momentum)));
        }
        Ok(())
    }
}

/// Heavy-ball SGD: `v ← μ v + g`, `θ ← θ − η v`.
#[derive(Debug, Clone, PartialEq)]
pub struct Sgd {
    learning_rate: f64,
    momentum: f64,
    velocity: Vec<f64>,
}

impl Sgd {
    pub fn new(cfg: &SgdConfig, parameters: usize) -> Result<Self> {
        cfg.validate()?;
        Ok(Sgd {
            learning_rate: cfg.learning_rate,
            momentum: cfg.momentum,
            velocity: vec![0.0; parameters],
        })
    }

    /// Applies one step. Parameters are untouched if any gradient component
    /// is not finite.
    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) -> Result<()> {
        if params.len() != grad.len() || grad.len() != self.velocity.len() {
            return Err(Error::DimensionMismatch {
                expected: self.velocity.len(),
                found: grad.len(),
            });
        }
        if let Some(index) = grad.iter().position(|g| !g.is_finite()) {
            return Err(Error::NonFiniteGradient { index });
        }
        for ((p, v), g) in params.iter_mut().zip(&mut self.velocity).zip(grad) {
            *v = self.momentum * *v + g;
            *p -= self.learning_rate * *v;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(lr: f64, momentum: f64) -> SgdConfig {
        SgdConfig {
            learning_rate: lr,
            momentum,
            ..SgdConfig::default()
        }
    }

    #[test]
    fn zero_gradient_keeps_parameters() {
        let mut s = Sgd::new(&cfg(0.1, 0.9), 2).unwrap();
        let mut p = [1.0, -2.0];
        s.step(&mut p, &[0.0, 0.0]).unwrap();
        assert_eq!(p, [1.0, -2.0]);
    }

    #[test]
    fn quadratic_steps() {
        // f(θ) = θ₁² + 3θ₂², ∇f = (2θ₁, 6θ₂) at (1, 1) is (2, 6).
        let mut s = Sgd::new(&cfg(0.1, 0.5), 2).unwrap();
        let mut p = [1.0, 1.0];
        let g = [2.0 * p[0], 6.0 * p[1]];
        s.step(&mut p, &g).unwrap();
        assert!((p[0] - 0.8).abs() < 1e-15 && (p[1] - 0.4).abs() < 1e-15);
        // v = 0.5 (2, 6) + (1.6, 2.4) = (2.6, 5.4)
        let g = [2.0 * p[0], 6.0 * p[1]];
        s.step(&mut p, &g).unwrap();
        assert!((p[0] - 0.54).abs() < 1e-15 && (p[1] + 0.14).abs() < 1e-15);
    }

    #[test]
    fn zero_momentum_is_vanilla() {
        let mut s = Sgd::new(&cfg(0.1, 0.0), 1).unwrap();
        let mut p = [1.0];
        s.step(&mut p, &[1.0]).unwrap();
        s.step(&mut p, &[1.0]).unwrap();
        assert!((p[0] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn non_finite_gradient_aborts() {
        let mut s = Sgd::new(&cfg(0.1, 0.0), 2).unwrap();
        let mut p = [1.0, 1.0];
        assert!(matches!(s.step(&mut p, &[0.0, f64::NAN]), Err(Error::NonFiniteGradient { index: 1 })));
        assert_eq!(p, [1.0, 1.0]);
        assert!(Sgd::new(&cfg(0.1, 1.0), 1).is_err());
    }
}
