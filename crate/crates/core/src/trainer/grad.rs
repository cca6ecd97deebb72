use serde::{Deserialize, Serialize};

use super::encoder::Encoder;
use crate::losses::{ird_with_grad, supcon_with_grad, BatchEmbeddings, Temperatures};
use crate::{Error, Result};

/// Batch loss values in summed form, as consumed by the λ ratio rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub contrastive: f64,
    /// `None` when there is no previous model.
    pub distillation: Option<f64>,
    /// The optimized objective: `(L̂_con + λ L̂_dis)`, divided by the number
    /// of views when batch division is on.
    pub objective: f64,
}

/// One training batch: `2N` views, views `2i` and `2i+1` from sample `i`.
#[derive(Debug, Clone, Copy)]
pub struct Batch<'a> {
    pub views: &'a [Vec<f64>],
    pub labels: &'a [usize],
}

/// What the gradient is taken of.
#[derive(Debug, Clone, Copy)]
pub struct Objective<'a> {
    /// Frozen previous model providing the distillation targets.
    pub prev: Option<&'a Encoder>,
    pub lambda: f64,
    pub temperatures: Temperatures,
    /// Divide the summed batch losses by the number of views.
    pub divide_by_views: bool,
}

impl Objective<'_> {
    fn scale(&self, views: usize) -> f64 {
        if self.divide_by_views {
            1.0 / views as f64
        } else {
            1.0
        }
    }
}

/// Loss values only.
pub fn total_loss(enc: &Encoder, batch: Batch<'_>, obj: &Objective<'_>) -> Result<LossBreakdown> {
    let z = enc.forward_batch(batch.views)?;
    let con = BatchEmbeddings::new(z.clone(), batch.labels.to_vec(), obj.temperatures.contrastive)?;
    let contrastive = supcon_with_grad(&con)?.0;
    let distillation = match obj.prev {
        None => None,
        Some(prev) => {
            let cur = BatchEmbeddings::new(z, batch.labels.to_vec(), obj.temperatures.current)?;
            let past = BatchEmbeddings::new(prev.forward_batch(batch.views)?, batch.labels.to_vec(), obj.temperatures.past)?;
            Some(ird_with_grad(&cur, &past)?.0)
        }
    };
    let objective = (contrastive + obj.lambda * distillation.unwrap_or(0.0)) * obj.scale(batch.views.len());
    Ok(LossBreakdown {
        contrastive,
        distillation,
        objective,
    })
}

/// Loss values and the gradient of the objective with respect to the
/// parameters of `enc`. The previous model receives no gradient.
pub fn grad_total(enc: &Encoder, batch: Batch<'_>, obj: &Objective<'_>) -> Result<(LossBreakdown, Vec<f64>)> {
    if !(obj.lambda >= 0.0) {
        return Err(Error::NegativeLambda(obj.lambda));
    }
    let caches = batch
        .views
        .iter()
        .map(|v| enc.forward_cached(v))
        .collect::<Result<Vec<_>>>()?;
    let z: Vec<_> = caches.iter().map(|c| c.output().clone()).collect();
    let con = BatchEmbeddings::new(z.clone(), batch.labels.to_vec(), obj.temperatures.contrastive)?;
    let (contrastive, mut dz) = supcon_with_grad(&con)?;
    let distillation = match obj.prev {
        None => None,
        Some(prev) => {
            let cur = BatchEmbeddings::new(z, batch.labels.to_vec(), obj.temperatures.current)?;
            let past = BatchEmbeddings::new(prev.forward_batch(batch.views)?, batch.labels.to_vec(), obj.temperatures.past)?;
            let (dis, dz_dis) = ird_with_grad(&cur, &past)?;
            if obj.lambda != 0.0 {
                for (a, b) in dz.iter_mut().zip(&dz_dis) {
                    for (x, y) in a.iter_mut().zip(b) {
                        *x += obj.lambda * y;
                    }
                }
            }
            Some(dis)
        }
    };
    let scale = obj.scale(batch.views.len());
    let mut grad = vec![0.0; enc.params().len()];
    for (cache, g) in caches.iter().zip(&mut dz) {
        g.iter_mut().for_each(|x| *x *= scale);
        enc.backward(cache, g, &mut grad);
    }
    let objective = (contrastive + obj.lambda * distillation.unwrap_or(0.0)) * scale;
    Ok((
        LossBreakdown {
            contrastive,
            distillation,
            objective,
        },
        grad,
    ))
}

/// Largest componentwise `|a − f| / max(1e-8, |a| + |f|)` between the
/// analytic gradient `a` and central differences `f` with step `h`.
pub fn finite_diff_check(enc: &Encoder, batch: Batch<'_>, obj: &Objective<'_>, h: f64) -> Result<f64> {
    if !(h > 0.0) {
        return Err(Error::InvalidArgument(format!("finite-difference step must be positive, got {h}")));
    }
    let (_, analytic) = grad_total(enc, batch, obj)?;
    let mut probe = enc.clone();
    let mut worst = 0.0f64;
    for (i, &a) in analytic.iter().enumerate() {
        let orig = enc.params()[i];
        probe.params_mut()[i] = orig + h;
        let up = total_loss(&probe, batch, obj)?.objective;
        probe.params_mut()[i] = orig - h;
        let down = total_loss(&probe, batch, obj)?.objective;
        probe.params_mut()[i] = orig;
        let f = (up - down) / (2.0 * h);
        worst = worst.max((a - f).abs() / (a.abs() + f.abs()).max(1e-8));
    }
    Ok(worst)
}
