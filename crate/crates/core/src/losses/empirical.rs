use serde::{Deserialize, Serialize};

use super::link::{log_softmax, softmax};
use crate::domain::UnitVector;
use crate::{Error, Result};

/// Temperatures for the batch losses. They stay fixed across tasks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Temperatures {
    /// SupCon temperature τ.
    pub contrastive: f64,
    /// IRD temperature τ for the model being trained.
    pub current: f64,
    /// IRD temperature τ* for the frozen previous model.
    pub past: f64,
}

impl Default for Temperatures {
    fn default() -> Self {
        Temperatures {
            contrastive: 0.5,
            current: 0.2,
            past: 0.01,
        }
    }
}

/// Embeddings of a batch of `2N` augmented views, views `2i` and `2i+1`
/// coming from the same sample.
#[derive(Debug, Clone)]
pub struct BatchEmbeddings {
    z: Vec<UnitVector>,
    labels: Vec<usize>,
    temperature: f64,
}

impl BatchEmbeddings {
    pub fn new(z: Vec<UnitVector>, labels: Vec<usize>, temperature: f64) -> Result<Self> {
        if z.len() != labels.len() {
            return Err(Error::InvalidArgument(format!(
                "{} embeddings but {} labels",
                z.len(),
                labels.len()
            )));
        }
        if z.len() < 2 || z.len() % 2 != 0 {
            return Err(Error::InvalidArgument(format!(
                "a batch holds an even number (≥ 2) of views, got {}",
                z.len()
            )));
        }
        if let Some(i) = labels.chunks(2).position(|c| c[0] != c[1]) {
            return Err(Error::InvalidArgument(format!(
                "views {} and {} of one sample carry different labels",
                2 * i,
                2 * i + 1
            )));
        }
        if !(temperature > 0.0) {
            return Err(Error::InvalidArgument(format!("temperature must be positive, got {temperature}")));
        }
        Ok(BatchEmbeddings { z, labels, temperature })
    }

    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    pub fn embeddings(&self) -> &[UnitVector] {
        &self.z
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    /// Scaled similarities `z_iᵀz_j / τ` to every other view, in index order
    /// with `i` skipped.
    fn row_logits(&self, i: usize) -> Vec<f64> {
        let zi = &self.z[i];
        (0..self.z.len())
            .filter(|&j| j != i)
            .map(|j| zi.dot(&self.z[j]) / self.temperature)
            .collect()
    }
}

/// Column index of view `j` in anchor `i`'s row (which skips `i`).
#[inline]
fn other(i: usize, col: usize) -> usize {
    if col < i {
        col
    } else {
        col + 1
    }
}

fn add_scaled(acc: &mut [f64], v: &[f64], s: f64) {
    for (a, x) in acc.iter_mut().zip(v) {
        *a += s * x;
    }
}

/// SupCon: `Σ_i −1/|P(i)| Σ_{j∈P(i)} log(exp(z_iᵀz_j/τ) / Σ_{k≠i} exp(z_iᵀz_k/τ))`.
pub fn empirical_contrastive(batch: &BatchEmbeddings) -> Result<f64> {
    supcon_with_grad(batch).map(|(l, _)| l)
}

/// SupCon value and its gradient with respect to each embedding.
pub fn supcon_with_grad(batch: &BatchEmbeddings) -> Result<(f64, Vec<Vec<f64>>)> {
    let n = batch.len();
    let d = batch.z[0].dim();
    let tau = batch.temperature;
    let mut grad = vec![vec![0.0; d]; n];
    let mut total = 0.0;
    for i in 0..n {
        let logits = batch.row_logits(i);
        let positives: Vec<usize> = (0..n - 1)
            .filter(|&c| batch.labels[other(i, c)] == batch.labels[i])
            .collect();
        if positives.is_empty() {
            return Err(Error::EmptyPositiveSet { anchor: i });
        }
        let logp = log_softmax(&logits);
        let inv = 1.0 / positives.len() as f64;
        total -= inv * positives.iter().map(|&c| logp[c]).sum::<f64>();

        // ∂/∂s_ij = (softmax_ij − 1[j∈P]/|P|) / τ
        let mut coef: Vec<f64> = logp.iter().map(|l| l.exp()).collect();
        for &c in &positives {
            coef[c] -= inv;
        }
        for (c, g) in coef.iter().enumerate() {
            let j = other(i, c);
            let g = g / tau;
            let (zi, zj) = (batch.z[i].as_slice().to_vec(), batch.z[j].as_slice());
            add_scaled(&mut grad[i], zj, g);
            add_scaled(&mut grad[j], &zi, g);
        }
    }
    Ok((total, grad))
}

/// IRD: `Σ_i −p(f_prev, τ*; x̃_i) · log p(f_t, τ; x̃_i)` over the other
/// `2N − 1` views of each anchor.
pub fn empirical_distillation(current: &BatchEmbeddings, past: &BatchEmbeddings) -> Result<f64> {
    ird_with_grad(current, past).map(|(l, _)| l)
}

/// IRD value and its gradient with respect to the current embeddings; the
/// past batch is treated as constant.
pub fn ird_with_grad(current: &BatchEmbeddings, past: &BatchEmbeddings) -> Result<(f64, Vec<Vec<f64>>)> {
    if current.len() != past.len() {
        return Err(Error::BatchMismatch {
            current: current.len(),
            past: past.len(),
        });
    }
    let n = current.len();
    let d = current.z[0].dim();
    let tau = current.temperature;
    let mut grad = vec![vec![0.0; d]; n];
    let mut total = 0.0;
    for i in 0..n {
        let target = softmax(&past.row_logits(i));
        let logp = log_softmax(&current.row_logits(i));
        total -= target.iter().zip(&logp).map(|(t, l)| t * l).sum::<f64>();
        for (c, (t, l)) in target.iter().zip(&logp).enumerate() {
            let j = other(i, c);
            let g = (l.exp() - t) / tau;
            let zi = current.z[i].as_slice().to_vec();
            add_scaled(&mut grad[i], current.z[j].as_slice(), g);
            add_scaled(&mut grad[j], &zi, g);
        }
    }
    Ok((total, grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::normalize;

    fn batch(vs: &[[f64; 2]], labels: &[usize], tau: f64) -> BatchEmbeddings {
        BatchEmbeddings::new(
            vs.iter().map(|v| normalize(v).unwrap()).collect(),
            labels.to_vec(),
            tau,
        )
        .unwrap()
    }

    #[test]
    fn single_sample_losses_are_exactly_zero() {
        let b = batch(&[[1.0, 0.2], [0.3, -1.0]], &[4, 4], 0.5);
        let p = batch(&[[0.1, 0.2], [0.9, -1.0]], &[4, 4], 0.01);
        assert_eq!(empirical_contrastive(&b).unwrap(), 0.0);
        assert_eq!(empirical_distillation(&b, &p).unwrap(), 0.0);
        let (_, g) = supcon_with_grad(&b).unwrap();
        assert!(g.iter().flatten().all(|x| *x == 0.0));
    }

    #[test]
    fn identical_embeddings_give_uniform_rows() {
        let b = batch(&[[1.0, 0.0]; 4], &[0, 0, 0, 0], 0.5);
        let want = 4.0 * 3f64.ln();
        assert!((empirical_contrastive(&b).unwrap() - want).abs() < 1e-12);
        let b2 = batch(&[[1.0, 0.0]; 4], &[0, 0, 1, 1], 0.2);
        let p2 = batch(&[[0.0, 1.0]; 4], &[0, 0, 1, 1], 0.01);
        assert!((empirical_distillation(&b2, &p2).unwrap() - 4.394_449_154_672_439).abs() < 1e-12);
    }

    #[test]
    fn constructor_checks() {
        let z = vec![normalize(&[1.0, 0.0]).unwrap(); 2];
        assert!(BatchEmbeddings::new(z.clone(), vec![0, 1], 0.5).is_err());
        assert!(BatchEmbeddings::new(z.clone(), vec![0, 0], 0.0).is_err());
        assert!(BatchEmbeddings::new(z[..1].to_vec(), vec![0], 0.5).is_err());
        let a = BatchEmbeddings::new(z.clone(), vec![0, 0], 0.5).unwrap();
        let b = BatchEmbeddings::new([z.clone(), z].concat(), vec![0, 0, 1, 1], 0.5).unwrap();
        assert!(matches!(empirical_distillation(&a, &b), Err(Error::BatchMismatch { .. })));
    }
}
