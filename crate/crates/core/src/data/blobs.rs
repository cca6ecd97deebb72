use std::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::domain::TaskDistribution;
use crate::rng::{stream_rng, Stream};
use crate::{Error, Result};

/// Train and held-out parts of one task, each with uniform mass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskSplit {
    pub train: TaskDistribution,
    pub test: TaskDistribution,
}

impl TaskSplit {
    pub fn classes(&self) -> &[usize] {
        self.train.classes()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlobConfig {
    pub tasks: usize,
    pub classes_per_task: usize,
    pub points_per_class: usize,
    /// Input dimension, at least 2. Centers lie on a circle in the first
    /// two coordinates.
    pub dim: usize,
    pub radius: f64,
    /// Standard deviation of the isotropic Gaussian noise around a center.
    pub spread: f64,
    pub train_fraction: f64,
}

impl Default for BlobConfig {
    fn default() -> Self {
        BlobConfig {
            tasks: 5,
            classes_per_task: 2,
            points_per_class: 20,
            dim: 2,
            radius: 1.0,
            spread: 0.2,
            train_fraction: 0.8,
        }
    }
}

impl BlobConfig {
    pub fn total_classes(&self) -> usize {
        self.tasks * self.classes_per_task
    }

    /// Angle between neighbouring class centers.
    pub fn angular_margin(&self) -> f64 {
        2.0 * PI / self.total_classes() as f64
    }

    fn validate(&self) -> Result<()> {
        if self.tasks == 0 || self.classes_per_task == 0 || self.points_per_class < 2 {
            return Err(Error::InvalidArgument(
                "blob sequences need tasks ≥ 1, classes per task ≥ 1 and points per class ≥ 2".into(),
            ));
        }
        if self.dim < 2 {
            return Err(Error::InvalidArgument("blob inputs need at least 2 dimensions".into()));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "train fraction must lie in (0, 1), got {}",
                self.train_fraction
            )));
        }
        if !(self.radius > 0.0) || !(self.spread >= 0.0) {
            return Err(Error::InvalidArgument("radius must be positive and spread non-negative".into()));
        }
        Ok(())
    }
}

/// Class centers, indexed by global class id.
pub fn blob_centers(cfg: &BlobConfig) -> Vec<Vec<f64>> {
    (0..cfg.total_classes())
        .map(|c| {
            let angle = cfg.angular_margin() * c as f64;
            let mut v = vec![0.0; cfg.dim];
            v[0] = cfg.radius * angle.cos();
            v[1] = cfg.radius * angle.sin();
            v
        })
        .collect()
}

/// Splits per class: the first `⌈fraction·n⌉` points (clamped so both sides
/// are non-empty) after a seeded shuffle go to training.
fn split_class<R: Rng>(mut pts: Vec<Vec<f64>>, fraction: f64, rng: &mut R) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    pts.shuffle(rng);
    let n = pts.len();
    let cut = ((fraction * n as f64).round() as usize).clamp(1, n - 1);
    let test = pts.split_off(cut);
    (pts, test)
}

fn assemble(dim: usize, parts: Vec<(usize, Vec<Vec<f64>>, Vec<Vec<f64>>)>) -> Result<TaskSplit> {
    let mut train = (Vec::new(), Vec::new());
    let mut test = (Vec::new(), Vec::new());
    for (label, tr, te) in parts {
        train.1.extend(std::iter::repeat_n(label, tr.len()));
        train.0.extend(tr);
        test.1.extend(std::iter::repeat_n(label, te.len()));
        test.0.extend(te);
    }
    Ok(TaskSplit {
        train: TaskDistribution::uniform(dim, train.0, train.1)?,
        test: TaskDistribution::uniform(dim, test.0, test.1)?,
    })
}

/// Gaussian blobs around evenly spaced directions, `classes_per_task`
/// consecutive global classes per task.
pub fn make_blob_sequence(cfg: &BlobConfig, seed: u64) -> Result<Vec<TaskSplit>> {
    cfg.validate()?;
    let centers = blob_centers(cfg);
    (0..cfg.tasks)
        .map(|t| {
            let mut rng = stream_rng(seed, Stream::Data, t as u64);
            let parts = (0..cfg.classes_per_task)
                .map(|j| {
                    let class = t * cfg.classes_per_task + j;
                    let pts: Vec<Vec<f64>> = (0..cfg.points_per_class)
                        .map(|_| {
                            centers[class]
                                .iter()
                                .map(|c| c + cfg.spread * rng.sample::<f64, _>(StandardNormal))
                                .collect()
                        })
                        .collect();
                    let (tr, te) = split_class(pts, cfg.train_fraction, &mut rng);
                    (class, tr, te)
                })
                .collect();
            assemble(cfg.dim, parts)
        })
        .collect()
}

fn rotate(dist: &TaskDistribution, angle: f64, label_of: &dyn Fn(usize) -> usize) -> Result<TaskDistribution> {
    let (s, c) = angle.sin_cos();
    let points = dist
        .points()
        .iter()
        .map(|p| vec![c * p[0] - s * p[1], s * p[0] + c * p[1]])
        .collect();
    let labels = dist.labels().iter().map(|&l| label_of(l)).collect();
    TaskDistribution::new(2, points, labels, dist.mass().to_vec())
}

/// Rotates a planar task by `angle` and shifts its classes to
/// `offset + rank`, where `rank` is the position of the class among the
/// task's classes.
pub fn rotate_split(split: &TaskSplit, angle: f64, offset: usize) -> Result<TaskSplit> {
    if split.train.dimension() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: split.train.dimension(),
        });
    }
    let classes = split.classes().to_vec();
    let label_of = |l: usize| {
        offset
            + classes
                .binary_search(&l)
                .expect("test classes are a subset of train classes")
    };
    Ok(TaskSplit {
        train: rotate(&split.train, angle, &label_of)?,
        test: rotate(&split.test, angle, &label_of)?,
    })
}

/// Domain-shift sequence: task `t` is `base` under a seeded rotation in
/// `[0, π)`, with its own block of class ids.
pub fn make_rotated_sequence(tasks: usize, base: &TaskSplit, seed: u64) -> Result<Vec<TaskSplit>> {
    let width = base.classes().len();
    (0..tasks)
        .map(|t| {
            let angle = stream_rng(seed, Stream::Data, t as u64).random_range(0.0..PI);
            rotate_split(base, angle, t * width)
        })
        .collect()
}
