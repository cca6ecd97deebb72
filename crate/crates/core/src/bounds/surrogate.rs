use serde::{Deserialize, Serialize};

use crate::domain::{for_each_tuple, normalize, TableModel, TaskDistribution, UnitVector};
use crate::losses::population_contrastive;
use crate::rng::{stream_rng, Stream};
use crate::{Error, Result};

/// How `min_f L_con(f; D)` is replaced by a number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SurrogateMode {
    /// `log(1 + k e⁻²)`, a certified lower bound on the minimum.
    #[default]
    Analytic,
    /// Loss reached by direct optimization. Not certified: it can only
    /// overestimate the minimum.
    Optimized,
}

/// Settings for [`SurrogateMode::Optimized`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurrogateConfig {
    pub steps: usize,
    pub learning_rate: f64,
    /// Embedding dimension of the optimized table.
    pub dim: usize,
    pub seed: u64,
}

impl Default for SurrogateConfig {
    fn default() -> Self {
        SurrogateConfig {
            steps: 200,
            learning_rate: 0.5,
            dim: 8,
            seed: 0,
        }
    }
}

/// Exact `L_con` of a per-point embedding table and its gradient with
/// respect to each (unit) embedding.
pub fn population_contrastive_grad(
    embeddings: &[UnitVector],
    dist: &TaskDistribution,
    k: usize,
) -> Result<(f64, Vec<Vec<f64>>)> {
    if embeddings.len() != dist.len() {
        return Err(Error::DimensionMismatch {
            expected: dist.len(),
            found: embeddings.len(),
        });
    }
    let n = dist.len();
    let d = embeddings[0].dim();
    let sim: Vec<f64> = (0..n * n)
        .map(|ij| embeddings[ij / n].dot(&embeddings[ij % n]))
        .collect();
    let mut grad = vec![vec![0.0; d]; n];
    let mut loss = 0.0;
    let mut q = vec![0.0; k];
    for_each_tuple(dist, k, |a, p, negs, w| {
        // v_i = z_aᵀz_p − z_aᵀz_{n_i}; stable log(1 + Σ e^{−v_i}).
        let pos = sim[a * n + p];
        let mut shift = 0.0f64;
        for (qi, &j) in q.iter_mut().zip(negs) {
            *qi = sim[a * n + j] - pos;
            shift = shift.max(*qi);
        }
        let mut denom = (-shift).exp();
        for qi in q.iter_mut() {
            *qi = (*qi - shift).exp();
            denom += *qi;
        }
        loss += w * (shift + denom.ln());
        let za = embeddings[a].as_slice();
        let zp = embeddings[p].as_slice();
        for (qi, &j) in q.iter().zip(negs) {
            // ∂ℓ/∂v_i = −q_i
            let c = w * qi / denom;
            let zn = embeddings[j].as_slice();
            for r in 0..d {
                grad[a][r] -= c * (zp[r] - zn[r]);
                grad[p][r] -= c * za[r];
                grad[j][r] += c * za[r];
            }
        }
    })?;
    Ok((loss, grad))
}

/// Plug-in value for `min_f L_con(f; D)`.
///
/// The optimized mode runs projected gradient descent on free per-point
/// embeddings and never reports more than the constant-embedding value
/// `log(1 + k)`.
pub fn min_con_surrogate(
    dist: &TaskDistribution,
    k: usize,
    mode: SurrogateMode,
    cfg: &SurrogateConfig,
) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidArgument("number of negatives must be at least 1".into()));
    }
    let floor = (1.0 + k as f64 * (-2.0f64).exp()).ln();
    match mode {
        SurrogateMode::Analytic => Ok(floor),
        SurrogateMode::Optimized => {
            if cfg.dim < 2 || !(cfg.learning_rate > 0.0) {
                return Err(Error::InvalidArgument(
                    "optimized surrogate needs dim ≥ 2 and a positive learning rate".into(),
                ));
            }
            let mut rng = stream_rng(cfg.seed, Stream::Init, 0);
            let table = TableModel::random(dist.points(), cfg.dim, &mut rng)?;
            let mut z = table.embeddings().to_vec();
            let mut best = (1.0 + k as f64).ln();
            for _ in 0..cfg.steps {
                let (loss, grad) = population_contrastive_grad(&z, dist, k)?;
                best = best.min(loss);
                for (zi, gi) in z.iter_mut().zip(&grad) {
                    let s = zi.as_slice();
                    let radial: f64 = s.iter().zip(gi).map(|(a, b)| a * b).sum();
                    let moved: Vec<f64> = s
                        .iter()
                        .zip(gi)
                        .map(|(a, g)| a - cfg.learning_rate * (g - radial * a))
                        .collect();
                    *zi = normalize(&moved)?;
                }
            }
            let last = population_contrastive(&TableModel::new(dist.points(), z)?, dist, k)?;
            Ok(best.min(last).max(floor))
        }
    }
}
