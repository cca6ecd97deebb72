use super::link::{log_softmax, softmax, Margins};
use crate::domain::{expectation, EmbeddingModel, TaskDistribution, TupleOutcome};
use crate::{Error, Result};

/// Pairwise similarities `f(x_a)ᵀ f(x_b)` over a distribution's support.
pub(crate) struct Gram {
    n: usize,
    sim: Vec<f64>,
}

impl Gram {
    pub(crate) fn new(model: &dyn EmbeddingModel, dist: &TaskDistribution) -> Result<Self> {
        if model.input_dim() != dist.dimension() {
            return Err(Error::DimensionMismatch {
                expected: model.input_dim(),
                found: dist.dimension(),
            });
        }
        let z = model.embed_all(dist.points());
        let n = z.len();
        let mut sim = vec![0.0; n * n];
        for a in 0..n {
            for b in a..n {
                let s = z[a].dot(&z[b]);
                sim[a * n + b] = s;
                sim[b * n + a] = s;
            }
        }
        Ok(Gram { n, sim })
    }

    #[inline]
    pub(crate) fn get(&self, a: usize, b: usize) -> f64 {
        self.sim[a * self.n + b]
    }

    /// Logits `(f(x)ᵀf(x⁺), f(x)ᵀf(x₁⁻), …)`.
    fn logits(&self, a: usize, p: usize, negs: &[usize]) -> Vec<f64> {
        std::iter::once(self.get(a, p))
            .chain(negs.iter().map(|&n| self.get(a, n)))
            .collect()
    }

    fn margins(&self, a: usize, p: usize, negs: &[usize]) -> Margins {
        let pos = self.get(a, p);
        Margins::new(negs.iter().map(|&n| pos - self.get(a, n)).collect())
    }
}

/// Softmax over `(f(x)ᵀf(x⁺), f(x)ᵀf(x₁⁻), …)`; the first entry is the
/// positive pair. Tuple indices refer to `dist`'s support.
pub fn similarity_prob(model: &dyn EmbeddingModel, dist: &TaskDistribution, tuple: &TupleOutcome) -> Vec<f64> {
    let pts = dist.points();
    let z = model.embed(&pts[tuple.anchor]);
    let logits: Vec<f64> = std::iter::once(tuple.positive)
        .chain(tuple.negatives.iter().copied())
        .map(|i| z.dot(&model.embed(&pts[i])))
        .collect();
    softmax(&logits)
}

/// `L_con(f; D) = E ℓ(v(f; x, x⁺, x⁻…))` with `k` negatives.
pub fn population_contrastive(model: &dyn EmbeddingModel, dist: &TaskDistribution, k: usize) -> Result<f64> {
    let g = Gram::new(model, dist)?;
    // Inlined `logistic_link` over the margins; avoids a per-tuple
    // allocation in the innermost loop.
    expectation(dist, k, |a, p, negs| {
        let pos = g.get(a, p);
        let shift = negs.iter().fold(0.0f64, |m, &n| m.max(g.get(a, n) - pos));
        let s: f64 = (-shift).exp() + negs.iter().map(|&n| (g.get(a, n) - pos - shift).exp()).sum::<f64>();
        shift + s.ln()
    })
}

/// `L_dis(f_t; f_prev, D) = E[−p(f_prev) · log p(f_t)]`.
pub fn population_distillation(
    current: &dyn EmbeddingModel,
    prev: &dyn EmbeddingModel,
    dist: &TaskDistribution,
    k: usize,
) -> Result<f64> {
    let gc = Gram::new(current, dist)?;
    let gp = Gram::new(prev, dist)?;
    expectation(dist, k, |a, p, negs| {
        let target = softmax(&gp.logits(a, p, negs));
        let logp = log_softmax(&gc.logits(a, p, negs));
        -target.iter().zip(&logp).map(|(t, l)| t * l).sum::<f64>()
    })
}

/// `E[H(p(f_prev))]`, the floor `population_distillation` reaches when the
/// current model reproduces `prev`'s similarity distributions.
pub fn population_self_entropy(prev: &dyn EmbeddingModel, dist: &TaskDistribution, k: usize) -> Result<f64> {
    let gp = Gram::new(prev, dist)?;
    expectation(dist, k, |a, p, negs| {
        let logits = gp.logits(a, p, negs);
        let pr = softmax(&logits);
        let lp = log_softmax(&logits);
        -pr.iter().zip(&lp).map(|(x, l)| x * l).sum::<f64>()
    })
}

/// `E[Σ_i q_i(f_prev) v_i(f_t)]`.
pub fn distillation_cross_term(
    current: &dyn EmbeddingModel,
    prev: &dyn EmbeddingModel,
    dist: &TaskDistribution,
    k: usize,
) -> Result<f64> {
    let gc = Gram::new(current, dist)?;
    let gp = Gram::new(prev, dist)?;
    expectation(dist, k, |a, p, negs| {
        let q = gp.margins(a, p, negs).q_negatives();
        let v = gc.margins(a, p, negs);
        q.iter().zip(v.values()).map(|(q, v)| q * v).sum()
    })
}

/// `L_dis − L_con(f_t) − E[Σ q_i(f_prev) v_i(f_t)]`, each term computed by
/// its own pass. The per-tuple identity makes this zero up to rounding.
pub fn decomposition_residual(
    current: &dyn EmbeddingModel,
    prev: &dyn EmbeddingModel,
    dist: &TaskDistribution,
    k: usize,
) -> Result<f64> {
    let dis = population_distillation(current, prev, dist, k)?;
    let con = population_contrastive(current, dist, k)?;
    let cross = distillation_cross_term(current, prev, dist, k)?;
    Ok(dis - con - cross)
}

/// The distillation half of the training loss for tasks after the first.
#[derive(Clone, Copy)]
pub struct PriorTasks<'a> {
    pub prev: &'a dyn EmbeddingModel,
    /// The seen-data mixture `D_{1:t−1}`.
    pub seen: &'a TaskDistribution,
    pub lambda: f64,
}

/// `L_con(f_t; D_t) + λ L_dis(f_t; f_{t−1}, D_{1:t−1})`; the first task has
/// no distillation term and passes `None`.
pub fn population_train_loss(
    current: &dyn EmbeddingModel,
    task: &TaskDistribution,
    prior: Option<PriorTasks<'_>>,
    k: usize,
) -> Result<f64> {
    let con = population_contrastive(current, task, k)?;
    match prior {
        None => Ok(con),
        Some(p) => {
            if !(p.lambda >= 0.0) {
                return Err(Error::NegativeLambda(p.lambda));
            }
            Ok(con + p.lambda * population_distillation(current, p.prev, p.seen, k)?)
        }
    }
}

/// `L_test(f_T) = Σ_t L_con(f_T; D_t)`.
pub fn population_test_loss(model: &dyn EmbeddingModel, tasks: &[TaskDistribution], k: usize) -> Result<f64> {
    if tasks.is_empty() {
        return Err(Error::InvalidArgument("test loss needs at least one task".into()));
    }
    tasks
        .iter()
        .map(|d| population_contrastive(model, d, k))
        .sum()
}

// Reference path for `population_contrastive` on a single tuple, used by the
// unit tests below.
#[cfg(test)]
fn tuple_loss(g: &Gram, a: usize, p: usize, negs: &[usize]) -> f64 {
    super::link::logistic_link(g.margins(a, p, negs).values())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::losses::logistic_link;
    use crate::domain::{enumerate_tuples, ConstantModel, TableModel};
    use crate::rng::{stream_rng, Stream};

    fn antipodal() -> (TaskDistribution, TableModel) {
        let pts = vec![vec![0.0], vec![1.0]];
        let d = TaskDistribution::uniform(1, pts.clone(), vec![0, 1]).unwrap();
        let t = TableModel::new(
            &pts,
            vec![
                crate::domain::normalize(&[1.0, 0.0]).unwrap(),
                crate::domain::normalize(&[-1.0, 0.0]).unwrap(),
            ],
        )
        .unwrap();
        (d, t)
    }

    fn random_dist(n: usize, seed: u64) -> TaskDistribution {
        use rand::Rng;
        let mut rng = stream_rng(seed, Stream::Trials, 0);
        let pts: Vec<Vec<f64>> = (0..n).map(|i| vec![i as f64]).collect();
        let labels: Vec<usize> = (0..n).map(|i| i % 2).collect();
        let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..1.0)).collect();
        let s: f64 = raw.iter().sum();
        TaskDistribution::new(1, pts, labels, raw.iter().map(|m| m / s).collect()).unwrap()
    }

    #[test]
    fn constant_model_gives_log_k_plus_one() {
        let d = random_dist(5, 1);
        let c = ConstantModel::new(1, &[0.3, 0.4, 0.5]).unwrap();
        assert!((population_contrastive(&c, &d, 1).unwrap() - 2f64.ln()).abs() < 1e-12);
        assert!((population_contrastive(&c, &d, 3).unwrap() - 4f64.ln()).abs() < 1e-12);
        assert!((population_distillation(&c, &c, &d, 1).unwrap() - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn antipodal_classes() {
        let (d, t) = antipodal();
        // Same-class negatives give v = 0, cross-class negatives v = 2.
        let want = 0.5 * 2f64.ln() + 0.5 * logistic_link(&[2.0]);
        let got = population_contrastive(&t, &d, 1).unwrap();
        assert!((got - want).abs() < 1e-15, "{got} vs {want}");
        assert!((got - 0.410_037_595_801_458_9).abs() < 1e-12);
    }

    #[test]
    fn fast_path_matches_per_tuple_link() {
        let d = random_dist(4, 3);
        let mut rng = stream_rng(3, Stream::Trials, 1);
        let t = TableModel::random(d.points(), 3, &mut rng).unwrap();
        let g = Gram::new(&t, &d).unwrap();
        for k in [1, 2, 3] {
            let slow: f64 = enumerate_tuples(&d, k)
                .unwrap()
                .map(|o| o.weight * tuple_loss(&g, o.anchor, o.positive, &o.negatives))
                .sum();
            let fast = population_contrastive(&t, &d, k).unwrap();
            assert!((slow - fast).abs() < 1e-12);
        }
    }

    #[test]
    fn similarity_prob_cases() {
        let (d, t) = antipodal();
        let tup = TupleOutcome {
            anchor: 0,
            positive: 0,
            negatives: vec![1],
            weight: 0.25,
        };
        let p = similarity_prob(&t, &d, &tup);
        assert!((p[0] - 0.880_797_077_977_882_3).abs() < 1e-12);
        assert!((p[1] - 0.119_202_922_022_117_6).abs() < 1e-12);
        let c = ConstantModel::new(1, &[1.0, 1.0]).unwrap();
        let tup3 = TupleOutcome {
            negatives: vec![1, 0, 1],
            ..tup
        };
        for x in similarity_prob(&c, &d, &tup3) {
            assert!((x - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn train_and_test_aggregates() {
        let d = random_dist(4, 5);
        let mut rng = stream_rng(5, Stream::Trials, 2);
        let f = TableModel::random(d.points(), 3, &mut rng).unwrap();
        let g = TableModel::random(d.points(), 3, &mut rng).unwrap();
        let con = population_contrastive(&f, &d, 1).unwrap();
        let dis = population_distillation(&f, &g, &d, 1).unwrap();
        assert_eq!(population_train_loss(&f, &d, None, 1).unwrap(), con);
        let prior = |lambda| PriorTasks { prev: &g, seen: &d, lambda };
        assert_eq!(population_train_loss(&f, &d, Some(prior(0.0)), 1).unwrap(), con);
        assert!((population_train_loss(&f, &d, Some(prior(2.0)), 1).unwrap() - (con + 2.0 * dis)).abs() < 1e-14);
        assert!(matches!(
            population_train_loss(&f, &d, Some(prior(-1.0)), 1),
            Err(Error::NegativeLambda(_))
        ));

        let c = ConstantModel::new(1, &[1.0, 0.0]).unwrap();
        let cp = PriorTasks { prev: &c, seen: &d, lambda: 1.0 };
        assert!((population_train_loss(&c, &d, Some(cp), 1).unwrap() - 2.0 * 2f64.ln()).abs() < 1e-12);

        let tasks = vec![d.clone(), d.clone(), d.clone()];
        assert!((population_test_loss(&c, &tasks, 1).unwrap() - 3.0 * 2f64.ln()).abs() < 1e-12);
        assert!((population_test_loss(&f, &tasks, 1).unwrap() - 3.0 * con).abs() < 1e-12);
        assert_eq!(population_test_loss(&f, &tasks[..1], 1).unwrap(), con);
        assert!(population_test_loss(&f, &[], 1).is_err());
    }

    #[test]
    fn residual_vanishes_for_constant_models() {
        let d = random_dist(3, 9);
        let c = ConstantModel::new(1, &[1.0, 0.0]).unwrap();
        assert!(decomposition_residual(&c, &c, &d, 1).unwrap().abs() < 1e-15);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let d = random_dist(3, 9);
        let c = ConstantModel::new(2, &[1.0, 0.0]).unwrap();
        assert!(population_contrastive(&c, &d, 1).is_err());
    }
}
