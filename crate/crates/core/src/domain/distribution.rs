use serde::{Deserialize, Serialize};

use crate::{Error, Result};

const MASS_TOLERANCE: f64 = 1e-12;

/// A labeled distribution with finite support.
///
/// Holds the per-point probability mass together with the derived class
/// marginal and the within-class conditionals. Class ids are global across
/// tasks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDistribution", into = "RawDistribution")]
pub struct TaskDistribution {
    dimension: usize,
    points: Vec<Vec<f64>>,
    labels: Vec<usize>,
    mass: Vec<f64>,
    classes: Vec<usize>,
    class_mass: Vec<f64>,
    members: Vec<Vec<usize>>,
}

/// On-disk JSON layout: `{dimension, points, labels, mass}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDistribution {
    dimension: usize,
    points: Vec<Vec<f64>>,
    labels: Vec<usize>,
    mass: Vec<f64>,
}

impl TryFrom<RawDistribution> for TaskDistribution {
    type Error = Error;

    fn try_from(raw: RawDistribution) -> Result<Self> {
        TaskDistribution::new(raw.dimension, raw.points, raw.labels, raw.mass)
    }
}

impl From<TaskDistribution> for RawDistribution {
    fn from(d: TaskDistribution) -> Self {
        RawDistribution {
            dimension: d.dimension,
            points: d.points,
            labels: d.labels,
            mass: d.mass,
        }
    }
}

impl TaskDistribution {
    pub fn new(
        dimension: usize,
        points: Vec<Vec<f64>>,
        labels: Vec<usize>,
        mass: Vec<f64>,
    ) -> Result<Self> {
        let bad = |msg: String| Err(Error::InvalidDistribution(msg));
        if dimension == 0 {
            return bad("dimension must be positive".into());
        }
        if points.is_empty() {
            return bad("support is empty".into());
        }
        if labels.len() != points.len() || mass.len() != points.len() {
            return bad(format!(
                "{} points, {} labels, {} masses",
                points.len(),
                labels.len(),
                mass.len()
            ));
        }
        for (i, p) in points.iter().enumerate() {
            if p.len() != dimension {
                return Err(Error::DimensionMismatch {
                    expected: dimension,
                    found: p.len(),
                });
            }
            if p.iter().any(|x| !x.is_finite()) {
                return bad(format!("point {i} has a non-finite coordinate"));
            }
        }
        if let Some(i) = mass.iter().position(|m| !(m.is_finite() && *m >= 0.0)) {
            return bad(format!("mass of point {i} is {}", mass[i]));
        }
        let total: f64 = mass.iter().sum();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return bad(format!("masses sum to {total}"));
        }

        let mut classes = labels.clone();
        classes.sort_unstable();
        classes.dedup();
        let slot_of_point: Vec<usize> = labels
            .iter()
            .map(|l| classes.binary_search(l).expect("label present"))
            .collect();
        let mut class_mass = vec![0.0; classes.len()];
        let mut members = vec![Vec::new(); classes.len()];
        for (i, &s) in slot_of_point.iter().enumerate() {
            class_mass[s] += mass[i];
            members[s].push(i);
        }
        if let Some(s) = class_mass.iter().position(|m| *m <= 0.0) {
            return bad(format!("class {} has zero total mass", classes[s]));
        }

        Ok(TaskDistribution {
            dimension,
            points,
            labels,
            mass,
            classes,
            class_mass,
            members,
        })
    }

    /// Uniform mass over the given points.
    pub fn uniform(dimension: usize, points: Vec<Vec<f64>>, labels: Vec<usize>) -> Result<Self> {
        let n = points.len();
        let mass = vec![1.0 / n.max(1) as f64; n];
        Self::new(dimension, points, labels, mass)
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    /// Sorted distinct class ids.
    pub fn classes(&self) -> &[usize] {
        &self.classes
    }

    /// Class marginal; zero for ids not in the support.
    pub fn class_prob(&self, class: usize) -> f64 {
        self.classes
            .binary_search(&class)
            .map(|s| self.class_mass[s])
            .unwrap_or(0.0)
    }

    /// Conditional distribution of points given `class`, as
    /// `(point index, probability)` pairs.
    pub fn within_class(&self, class: usize) -> Vec<(usize, f64)> {
        match self.classes.binary_search(&class) {
            Ok(s) => self.members[s]
                .iter()
                .map(|&i| (i, self.mass[i] / self.class_mass[s]))
                .collect(),
            Err(_) => Vec::new(),
        }
    }

    pub(crate) fn class_slots(&self) -> usize {
        self.classes.len()
    }

    pub(crate) fn slot_mass(&self, slot: usize) -> f64 {
        self.class_mass[slot]
    }

    pub(crate) fn slot_members(&self, slot: usize) -> &[usize] {
        &self.members[slot]
    }
}

/// Convex weights `k_{t1..t,t-1}` over the tasks seen before task `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureWeights {
    task_index: usize,
    weights: Vec<f64>,
}

impl MixtureWeights {
    pub fn new(task_index: usize, weights: Vec<f64>) -> Result<Self> {
        if task_index < 2 {
            return Err(Error::InvalidWeights(format!(
                "task index must be at least 2, got {task_index}"
            )));
        }
        if weights.len() != task_index - 1 {
            return Err(Error::InvalidWeights(format!(
                "task {task_index} needs {} weights, got {}",
                task_index - 1,
                weights.len()
            )));
        }
        if let Some(j) = weights.iter().position(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::InvalidWeights(format!(
                "weight k_{{{task_index},{}}} = {} is not positive",
                j + 1,
                weights[j]
            )));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::InvalidWeights(format!("weights sum to {total}")));
        }
        Ok(MixtureWeights {
            task_index,
            weights,
        })
    }

    /// Equal weight on every previous task.
    pub fn uniform(task_index: usize) -> Result<Self> {
        let n = task_index.saturating_sub(1).max(1);
        Self::new(task_index, vec![1.0 / n as f64; n])
    }

    pub fn task_index(&self) -> usize {
        self.task_index
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

/// The seen-data distribution `Σ_j k_tj D_j`: every point of task `j` keeps
/// its label and has its mass scaled by `k_tj`.
pub fn mixture(dists: &[TaskDistribution], weights: &MixtureWeights) -> Result<TaskDistribution> {
    if dists.len() != weights.weights.len() {
        return Err(Error::InvalidWeights(format!(
            "{} distributions but {} weights",
            dists.len(),
            weights.weights.len()
        )));
    }
    let dimension = dists[0].dimension;
    let n: usize = dists.iter().map(|d| d.len()).sum();
    let mut points = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    let mut mass = Vec::with_capacity(n);
    for (d, &k) in dists.iter().zip(&weights.weights) {
        if d.dimension != dimension {
            return Err(Error::DimensionMismatch {
                expected: dimension,
                found: d.dimension,
            });
        }
        points.extend(d.points.iter().cloned());
        labels.extend_from_slice(&d.labels);
        mass.extend(d.mass.iter().map(|m| m * k));
    }
    TaskDistribution::new(dimension, points, labels, mass)
}
