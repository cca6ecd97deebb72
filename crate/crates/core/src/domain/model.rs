use std::collections::HashMap;

use rand::Rng;
use rand_distr::StandardNormal;

use super::vector::{normalize, UnitVector};
use crate::{Error, Result};

/// Maps input points to the unit sphere.
pub trait EmbeddingModel: Send + Sync {
    fn input_dim(&self) -> usize;

    fn output_dim(&self) -> usize;

    /// Embeds one point. Implementations always return a unit vector.
    fn embed(&self, x: &[f64]) -> UnitVector;

    /// Flattened trainable parameters; empty for fixed models.
    fn parameters(&self) -> Vec<f64> {
        Vec::new()
    }

    fn embed_all(&self, points: &[Vec<f64>]) -> Vec<UnitVector> {
        points.iter().map(|p| self.embed(p)).collect()
    }
}

/// Sends every input to the same direction.
#[derive(Debug, Clone)]
pub struct ConstantModel {
    input_dim: usize,
    direction: UnitVector,
}

impl ConstantModel {
    pub fn new(input_dim: usize, direction: &[f64]) -> Result<Self> {
        Ok(ConstantModel {
            input_dim,
            direction: normalize(direction)?,
        })
    }
}

impl EmbeddingModel for ConstantModel {
    fn input_dim(&self) -> usize {
        self.input_dim
    }

    fn output_dim(&self) -> usize {
        self.direction.dim()
    }

    fn embed(&self, _x: &[f64]) -> UnitVector {
        self.direction.clone()
    }
}

/// An embedding defined pointwise on a finite set of inputs.
///
/// Points are matched bit-for-bit. Inputs outside the table map to the first
/// basis vector, the same fallback [`normalize`] uses for zero vectors.
#[derive(Debug, Clone)]
pub struct TableModel {
    input_dim: usize,
    output_dim: usize,
    index: HashMap<Vec<u64>, usize>,
    embeddings: Vec<UnitVector>,
}

fn key(x: &[f64]) -> Vec<u64> {
    x.iter().map(|v| v.to_bits()).collect()
}

impl TableModel {
    pub fn new(points: &[Vec<f64>], embeddings: Vec<UnitVector>) -> Result<Self> {
        if points.len() != embeddings.len() || points.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "table needs one embedding per point ({} points, {} embeddings)",
                points.len(),
                embeddings.len()
            )));
        }
        let input_dim = points[0].len();
        let output_dim = embeddings[0].dim();
        let mut index = HashMap::with_capacity(points.len());
        for (i, (p, e)) in points.iter().zip(&embeddings).enumerate() {
            if p.len() != input_dim {
                return Err(Error::DimensionMismatch {
                    expected: input_dim,
                    found: p.len(),
                });
            }
            if e.dim() != output_dim {
                return Err(Error::DimensionMismatch {
                    expected: output_dim,
                    found: e.dim(),
                });
            }
            index.insert(key(p), i);
        }
        Ok(TableModel {
            input_dim,
            output_dim,
            index,
            embeddings,
        })
    }

    /// Freezes `model` on `points`.
    pub fn snapshot(model: &dyn EmbeddingModel, points: &[Vec<f64>]) -> Result<Self> {
        Self::new(points, model.embed_all(points))
    }

    /// Independent uniformly random directions per point.
    pub fn random<R: Rng + ?Sized>(points: &[Vec<f64>], output_dim: usize, rng: &mut R) -> Result<Self> {
        let embeddings = points
            .iter()
            .map(|_| {
                let v: Vec<f64> = (0..output_dim).map(|_| rng.sample(StandardNormal)).collect();
                normalize(&v)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(points, embeddings)
    }

    pub fn embeddings(&self) -> &[UnitVector] {
        &self.embeddings
    }
}

impl EmbeddingModel for TableModel {
    fn input_dim(&self) -> usize {
        self.input_dim
    }

    fn output_dim(&self) -> usize {
        self.output_dim
    }

    fn embed(&self, x: &[f64]) -> UnitVector {
        match self.index.get(&key(x)) {
            Some(&i) => self.embeddings[i].clone(),
            None => UnitVector::basis(self.output_dim),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream_rng, Stream};

    #[test]
    fn table_lookup_and_fallback() {
        let pts = vec![vec![0.0, 1.0], vec![2.0, 3.0]];
        let mut rng = stream_rng(1, Stream::Trials, 0);
        let t = TableModel::random(&pts, 3, &mut rng).unwrap();
        assert_eq!(t.embed(&pts[1]), t.embeddings()[1]);
        assert_eq!(t.embed(&[9.0, 9.0]), UnitVector::basis(3));
        for e in t.embeddings() {
            assert!((e.dot(e) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn snapshot_copies_the_model() {
        let c = ConstantModel::new(2, &[0.0, 2.0]).unwrap();
        let pts = vec![vec![0.0, 0.0], vec![1.0, 1.0]];
        let t = TableModel::snapshot(&c, &pts).unwrap();
        assert_eq!(t.embed(&pts[0]).as_slice(), &[0.0, 1.0]);
    }
}
