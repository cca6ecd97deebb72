use serde::{Deserialize, Serialize};

use crate::{Error, Result};

const E2: f64 = std::f64::consts::E * std::f64::consts::E;

/// Closed-form constants of the sandwich for `k` negatives.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundConstants {
    pub k: usize,
    pub alpha: f64,
    pub beta: f64,
    pub beta_prime: f64,
}

/// `α = 2e²/(k+e²)`, `β = 2 − α + α log(α/2)`,
/// `β′ = −α log(1+ke²) − 2ke²/(1+ke²)`.
pub fn constants(k: usize) -> Result<BoundConstants> {
    if k == 0 {
        return Err(Error::InvalidArgument("number of negatives must be at least 1".into()));
    }
    Ok(BoundConstants::from_alpha(k, 2.0 * E2 / (k as f64 + E2)))
}

impl BoundConstants {
    /// Derives β and β′ from a given α. Only [`constants`] yields valid
    /// values; other α are for fault-injection tests.
    pub fn from_alpha(k: usize, alpha: f64) -> Self {
        let kf = k as f64;
        BoundConstants {
            k,
            alpha,
            beta: 2.0 - alpha + alpha * (alpha / 2.0).ln(),
            beta_prime: -alpha * (1.0 + kf * E2).ln() - 2.0 * kf * E2 / (1.0 + kf * E2),
        }
    }

    /// The single-negative form `β′ = −α log(1+e²) − α`, which agrees with
    /// `beta_prime` at k = 1 because `2e²/(1+e²) = α` there.
    pub fn beta_prime_single_negative(&self) -> f64 {
        -self.alpha * (1.0 + E2).ln() - self.alpha
    }

    /// `(T − 1 − Tα + α^T) / (1 − α)²`, which equals `Σ_{t=2}^T (t−1) α^{T−t}`.
    pub fn accumulation(&self, tasks: usize) -> f64 {
        let t = tasks as f64;
        let a = self.alpha;
        (t - 1.0 - t * a + a.powi(tasks as i32)) / ((1.0 - a) * (1.0 - a))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // Reference values from a 40-digit evaluation of the closed forms.
    const ALPHA1: f64 = 1.761_594_155_955_764_888;
    const BETA1: f64 = 0.014_810_201_563_845_972;
    const BETA_PRIME1: f64 = -5.508_378_110_347_683_804;

    #[test]
    fn single_negative_constants() {
        let c = constants(1).unwrap();
        assert!((c.alpha - ALPHA1).abs() < 1e-12);
        assert!((c.beta - BETA1).abs() < 1e-12);
        assert!((c.beta_prime - BETA_PRIME1).abs() < 1e-12);
        assert!((c.beta_prime - c.beta_prime_single_negative()).abs() < 1e-12);
        assert!(c.alpha > 1.0 && c.beta > 0.0 && c.beta_prime < 0.0);
    }

    #[test]
    fn multi_negative_constants() {
        let c = constants(2).unwrap();
        assert!((c.alpha - 1.573_972_084_323_197).abs() < 1e-12);
        assert!((c.beta - 0.048_991_140_697_830_49).abs() < 1e-12);
        assert!((c.beta_prime + 6.215_238_780_006_528).abs() < 1e-12);
        let c5 = constants(5).unwrap();
        assert!((c5.alpha - 1.192_836_006_218_170).abs() < 1e-12);
        assert!(constants(0).is_err());
    }

    #[test]
    fn accumulation_matches_direct_sum() {
        for k in [1, 2, 5] {
            let c = constants(k).unwrap();
            for t in 2..9 {
                let direct: f64 = (2..=t).map(|s| (s - 1) as f64 * c.alpha.powi((t - s) as i32)).sum();
                assert!((c.accumulation(t) - direct).abs() < 1e-10 * direct.max(1.0));
            }
            assert!((c.accumulation(2) - 1.0).abs() < 1e-12);
        }
    }
}
