use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use serde::Serialize;

use crate::domain::{EmbeddingModel, TaskDistribution};
use crate::losses::logistic_link;
use crate::rng::{stream_rng, Stream};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub draws: usize,
}

fn weighted(w: &[f64]) -> Result<WeightedIndex<f64>> {
    WeightedIndex::new(w).map_err(|e| Error::InvalidDistribution(e.to_string()))
}

/// Sample mean of `ℓ(v)` over `draws` independent tuples and its standard
/// error.
pub fn monte_carlo_contrastive(
    model: &dyn EmbeddingModel,
    dist: &TaskDistribution,
    k: usize,
    draws: usize,
    seed: u64,
) -> Result<McEstimate> {
    if draws == 0 || k == 0 {
        return Err(Error::InvalidArgument("need at least one draw and one negative".into()));
    }
    if model.input_dim() != dist.dimension() {
        return Err(Error::DimensionMismatch {
            expected: dist.dimension(),
            found: model.input_dim(),
        });
    }
    let z = model.embed_all(dist.points());
    let classes = dist.classes();
    let class_pick = weighted(&classes.iter().map(|&c| dist.class_prob(c)).collect::<Vec<_>>())?;
    let within: Vec<(Vec<usize>, WeightedIndex<f64>)> = classes
        .iter()
        .map(|&c| {
            let members = dist.within_class(c);
            let w = weighted(&members.iter().map(|m| m.1).collect::<Vec<_>>())?;
            Ok((members.into_iter().map(|m| m.0).collect(), w))
        })
        .collect::<Result<_>>()?;
    let point_pick = weighted(dist.mass())?;

    let mut rng = stream_rng(seed, Stream::Trials, 0);
    let mut v = vec![0.0; k];
    // Welford running mean and sum of squared deviations.
    let (mut mean, mut m2) = (0.0f64, 0.0f64);
    for n in 1..=draws {
        let (members, w) = &within[class_pick.sample(&mut rng)];
        let a = members[w.sample(&mut rng)];
        let p = members[w.sample(&mut rng)];
        let pos = z[a].dot(&z[p]);
        for vi in v.iter_mut() {
            *vi = pos - z[a].dot(&z[point_pick.sample(&mut rng)]);
        }
        let x = logistic_link(&v);
        let delta = x - mean;
        mean += delta / n as f64;
        m2 += delta * (x - mean);
    }
    let std_error = if draws > 1 {
        (m2 / (draws - 1) as f64 / draws as f64).sqrt()
    } else {
        0.0
    };
    Ok(McEstimate {
        estimate: mean,
        std_error,
        draws,
    })
}
