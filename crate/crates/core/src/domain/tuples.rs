use rayon::prelude::*;

use super::distribution::TaskDistribution;
use crate::{Error, Result};

/// One joint draw `(x, x⁺, x₁⁻, …, x_k⁻)` with its probability.
///
/// Points are referenced by their index in the enumerated distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct TupleOutcome {
    pub anchor: usize,
    pub positive: usize,
    pub negatives: Vec<usize>,
    pub weight: f64,
}

/// Positive-weight `(anchor, positive)` pairs and negative candidates.
///
/// Anchor and positive are independent draws from the same class
/// conditional, so `P(a, p) = μ(c) D_c(a) D_c(p) = m_a m_p / μ(c)`. A
/// negative's class is drawn from `μ` and the point from `D_c`, which
/// marginalizes to the point mass itself.
struct Plan {
    pairs: Vec<(usize, usize, f64)>,
    negatives: Vec<(usize, f64)>,
}

impl Plan {
    fn new(dist: &TaskDistribution) -> Self {
        let mass = dist.mass();
        let mut pairs = Vec::new();
        for slot in 0..dist.class_slots() {
            let class_mass = dist.slot_mass(slot);
            let members = dist.slot_members(slot);
            for &a in members.iter().filter(|&&i| mass[i] > 0.0) {
                for &p in members.iter().filter(|&&i| mass[i] > 0.0) {
                    pairs.push((a, p, mass[a] * mass[p] / class_mass));
                }
            }
        }
        let negatives = (0..dist.len())
            .filter(|&i| mass[i] > 0.0)
            .map(|i| (i, mass[i]))
            .collect();
        Plan { pairs, negatives }
    }

    /// Calls `f(negatives, weight)` for every negative k-tuple.
    fn for_each_negative_tuple(&self, k: usize, buf: &mut Vec<usize>, mut f: impl FnMut(&[usize], f64)) {
        let m = self.negatives.len();
        let mut odo = vec![0usize; k];
        buf.clear();
        buf.extend(odo.iter().map(|&j| self.negatives[j].0));
        loop {
            let w: f64 = odo.iter().map(|&j| self.negatives[j].1).product();
            f(buf, w);
            let mut pos = k;
            loop {
                if pos == 0 {
                    return;
                }
                pos -= 1;
                odo[pos] += 1;
                if odo[pos] < m {
                    buf[pos] = self.negatives[odo[pos]].0;
                    break;
                }
                odo[pos] = 0;
                buf[pos] = self.negatives[0].0;
            }
        }
    }
}

fn check_k(k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::InvalidArgument("number of negatives must be at least 1".into()));
    }
    Ok(())
}

/// Number of positive-weight outcomes `enumerate_tuples` yields.
pub fn tuple_count(dist: &TaskDistribution, k: usize) -> usize {
    let plan = Plan::new(dist);
    plan.pairs.len() * plan.negatives.len().pow(k as u32)
}

/// Visits every positive-weight tuple as `f(anchor, positive, negatives, weight)`.
pub fn for_each_tuple(
    dist: &TaskDistribution,
    k: usize,
    mut f: impl FnMut(usize, usize, &[usize], f64),
) -> Result<()> {
    check_k(k)?;
    let plan = Plan::new(dist);
    let mut buf = Vec::with_capacity(k);
    for &(a, p, wp) in &plan.pairs {
        plan.for_each_negative_tuple(k, &mut buf, |negs, wn| f(a, p, negs, wp * wn));
    }
    Ok(())
}

/// Streams every joint outcome with positive probability.
///
/// `x = x⁺` outcomes are included, and negatives may share the anchor's
/// class or even be the anchor point itself.
pub fn enumerate_tuples(dist: &TaskDistribution, k: usize) -> Result<TupleIter> {
    check_k(k)?;
    let plan = Plan::new(dist);
    let done = plan.pairs.is_empty() || plan.negatives.is_empty();
    Ok(TupleIter {
        plan,
        pair: 0,
        odo: vec![0; k],
        done,
    })
}

/// Lazy iterator returned by [`enumerate_tuples`].
pub struct TupleIter {
    plan: Plan,
    pair: usize,
    odo: Vec<usize>,
    done: bool,
}

impl Iterator for TupleIter {
    type Item = TupleOutcome;

    fn next(&mut self) -> Option<TupleOutcome> {
        if self.done {
            return None;
        }
        let (anchor, positive, wp) = self.plan.pairs[self.pair];
        let negs = &self.plan.negatives;
        let out = TupleOutcome {
            anchor,
            positive,
            negatives: self.odo.iter().map(|&j| negs[j].0).collect(),
            weight: wp * self.odo.iter().map(|&j| negs[j].1).product::<f64>(),
        };
        let mut pos = self.odo.len();
        loop {
            if pos == 0 {
                self.pair += 1;
                self.done = self.pair == self.plan.pairs.len();
                break;
            }
            pos -= 1;
            self.odo[pos] += 1;
            if self.odo[pos] < negs.len() {
                break;
            }
            self.odo[pos] = 0;
        }
        Some(out)
    }
}

/// `E[g(x, x⁺, x⁻…)]` over the tuple distribution.
///
/// Partial sums are formed per `(anchor, positive)` pair, possibly on
/// several threads, then reduced in pair order, so the result does not
/// depend on the thread count.
pub(crate) fn expectation<F>(dist: &TaskDistribution, k: usize, g: F) -> Result<f64>
where
    F: Fn(usize, usize, &[usize]) -> f64 + Sync,
{
    check_k(k)?;
    let plan = Plan::new(dist);
    let work_per_pair = plan.negatives.len().pow(k as u32);
    let partial = |&(a, p, wp): &(usize, usize, f64)| {
        let mut buf = Vec::with_capacity(k);
        let mut acc = 0.0;
        plan.for_each_negative_tuple(k, &mut buf, |negs, wn| acc += wn * g(a, p, negs));
        wp * acc
    };
    let partials: Vec<f64> = if plan.pairs.len() * work_per_pair >= 1 << 14 {
        plan.pairs.par_iter().map(partial).collect()
    } else {
        plan.pairs.iter().map(partial).collect()
    };
    Ok(partials.iter().sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_class_one_point() -> TaskDistribution {
        TaskDistribution::new(1, vec![vec![0.0], vec![1.0]], vec![0, 1], vec![0.5, 0.5]).unwrap()
    }

    #[test]
    fn single_point_single_outcome() {
        let d = TaskDistribution::new(1, vec![vec![0.0]], vec![3], vec![1.0]).unwrap();
        let all: Vec<_> = enumerate_tuples(&d, 1).unwrap().collect();
        assert_eq!(all.len(), 1);
        assert_eq!(all[0].weight, 1.0);
        assert_eq!(all[0].negatives, vec![0]);
    }

    #[test]
    fn two_classes_positive_weight_outcomes() {
        let d = two_class_one_point();
        let k1: Vec<_> = enumerate_tuples(&d, 1).unwrap().collect();
        // Two choices of the anchor class (anchor and positive coincide)
        // times two negatives.
        assert_eq!(k1.len(), 4);
        assert!((k1.iter().map(|t| t.weight).sum::<f64>() - 1.0).abs() < 1e-15);
        let k2: Vec<_> = enumerate_tuples(&d, 2).unwrap().collect();
        assert_eq!(k2.len(), 8);
        assert!((k2.iter().map(|t| t.weight).sum::<f64>() - 1.0).abs() < 1e-15);
        assert!(k2.iter().all(|t| t.weight > 0.0));
    }

    #[test]
    fn zero_negatives_rejected() {
        assert!(enumerate_tuples(&two_class_one_point(), 0).is_err());
    }

    #[test]
    fn zero_mass_points_are_skipped() {
        let d = TaskDistribution::new(1, vec![vec![0.0], vec![1.0], vec![2.0]], vec![0, 0, 1], vec![0.5, 0.0, 0.5])
            .unwrap();
        assert!(enumerate_tuples(&d, 1).unwrap().all(|t| t.weight > 0.0 && t.anchor != 1 && t.negatives[0] != 1));
        assert_eq!(tuple_count(&d, 1), 4);
    }
}
