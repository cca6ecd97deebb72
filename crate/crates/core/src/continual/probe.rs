use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{EmbeddingModel, TaskDistribution};
use crate::losses::softmax;
use crate::rng::{stream_rng, Stream};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig {
            epochs: 100,
            batch_size: 32,
            learning_rate: 1.0,
        }
    }
}

/// Two-step draw: a class uniformly among those present, then an instance
/// uniformly within it.
#[derive(Debug, Clone)]
pub struct ClassBalancedSampler {
    by_class: Vec<Vec<usize>>,
}

impl ClassBalancedSampler {
    pub fn new(labels: &[usize]) -> Result<Self> {
        let mut classes: Vec<usize> = labels.to_vec();
        classes.sort_unstable();
        classes.dedup();
        if classes.is_empty() {
            return Err(Error::InvalidArgument("class-balanced sampler needs at least one sample".into()));
        }
        let by_class = classes
            .iter()
            .map(|c| (0..labels.len()).filter(|&i| labels[i] == *c).collect())
            .collect();
        Ok(ClassBalancedSampler { by_class })
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let members = &self.by_class[rng.random_range(0..self.by_class.len())];
        members[rng.random_range(0..members.len())]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    /// Test accuracy in `[0, 1]` on each task's held-out split.
    pub per_task: Vec<f64>,
    pub average: f64,
    /// Classes the classifier knows about but never saw in training.
    pub untrainable_classes: Vec<usize>,
}

/// Linear softmax classifier on frozen embeddings.
///
/// Trains for exactly `cfg.epochs` epochs of `⌈n / batch⌉` class-balanced
/// minibatches each, then scores every test split over all `classes`.
pub fn linear_probe(
    model: &dyn EmbeddingModel,
    train_points: &[Vec<f64>],
    train_labels: &[usize],
    tests: &[TaskDistribution],
    classes: &[usize],
    cfg: &ProbeConfig,
    seed: u64,
) -> Result<ProbeReport> {
    if train_points.len() != train_labels.len() || train_points.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "probe needs matching, non-empty points and labels ({} vs {})",
            train_points.len(),
            train_labels.len()
        )));
    }
    if cfg.batch_size == 0 || !(cfg.learning_rate > 0.0) {
        return Err(Error::InvalidArgument("probe batch size and learning rate must be positive".into()));
    }
    let mut classes = classes.to_vec();
    classes.sort_unstable();
    classes.dedup();
    let slot = |label: usize| classes.binary_search(&label);
    let targets = train_labels
        .iter()
        .map(|&l| slot(l).map_err(|_| Error::InvalidArgument(format!("label {l} is not a probe class"))))
        .collect::<Result<Vec<_>>>()?;
    let untrainable_classes = classes
        .iter()
        .filter(|c| !train_labels.contains(c))
        .copied()
        .collect();

    let feats: Vec<Vec<f64>> = model.embed_all(train_points).into_iter().map(|z| z.into_inner()).collect();
    let d = model.output_dim();
    let c = classes.len();
    // Row-major `c × d` weights followed by `c` biases.
    let mut w = vec![0.0; c * d + c];
    let logits = |w: &[f64], x: &[f64]| -> Vec<f64> {
        (0..c)
            .map(|k| w[c * d + k] + w[k * d..(k + 1) * d].iter().zip(x).map(|(a, b)| a * b).sum::<f64>())
            .collect()
    };

    let sampler = ClassBalancedSampler::new(train_labels)?;
    let mut rng = stream_rng(seed, Stream::Probe, 0);
    let steps = train_points.len().div_ceil(cfg.batch_size);
    let mut grad = vec![0.0; w.len()];
    for _ in 0..cfg.epochs {
        for _ in 0..steps {
            grad.iter_mut().for_each(|g| *g = 0.0);
            for _ in 0..cfg.batch_size {
                let i = sampler.draw(&mut rng);
                let mut p = softmax(&logits(&w, &feats[i]));
                p[targets[i]] -= 1.0;
                for (k, pk) in p.iter().enumerate() {
                    for (g, x) in grad[k * d..(k + 1) * d].iter_mut().zip(&feats[i]) {
                        *g += pk * x;
                    }
                    grad[c * d + k] += pk;
                }
            }
            let scale = cfg.learning_rate / cfg.batch_size as f64;
            for (wi, g) in w.iter_mut().zip(&grad) {
                *wi -= scale * g;
            }
        }
    }

    let per_task: Vec<f64> = tests
        .iter()
        .map(|t| {
            let z = model.embed_all(t.points());
            let hits = z
                .iter()
                .zip(t.labels())
                .filter(|(zi, &label)| {
                    let l = logits(&w, zi.as_slice());
                    let best = (0..c).fold(0, |b, k| if l[k] > l[b] { k } else { b });
                    classes[best] == label
                })
                .count();
            hits as f64 / t.len() as f64
        })
        .collect();
    let average = if per_task.is_empty() {
        0.0
    } else {
        per_task.iter().sum::<f64>() / per_task.len() as f64
    };
    Ok(ProbeReport {
        per_task,
        average,
        untrainable_classes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{TableModel, UnitVector};

    #[test]
    fn balanced_draws() {
        let mut labels = vec![0; 90];
        labels.extend(vec![1; 10]);
        let s = ClassBalancedSampler::new(&labels).unwrap();
        let mut rng = stream_rng(4, Stream::Probe, 1);
        let ones = (0..10_000).filter(|_| labels[s.draw(&mut rng)] == 1).count();
        assert!((ones as f64 / 10_000.0 - 0.5).abs() < 0.02);
    }

    #[test]
    fn separated_embeddings_are_perfect() {
        let pts: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64]).collect();
        let labels = vec![0, 0, 1, 1, 2, 2];
        let emb = labels
            .iter()
            .map(|&l| {
                let mut v = vec![0.0; 3];
                v[l] = 1.0;
                crate::domain::normalize(&v).unwrap()
            })
            .collect::<Vec<UnitVector>>();
        let model = TableModel::new(&pts, emb).unwrap();
        let test = TaskDistribution::uniform(1, pts.clone(), labels.clone()).unwrap();
        let r = linear_probe(&model, &pts, &labels, &[test], &[0, 1, 2, 3], &ProbeConfig::default(), 1).unwrap();
        assert_eq!(r.per_task, vec![1.0]);
        assert_eq!(r.untrainable_classes, vec![3]);
    }
}
