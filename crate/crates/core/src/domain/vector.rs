use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Norms below this are treated as zero by [`normalize`].
pub const ZERO_NORM: f64 = 1e-12;

// Vectors whose norm is this close to one are returned bit-for-bit, which
// makes `normalize` exactly idempotent.
const UNIT_SLACK: f64 = 1e-14;

/// A point on the unit sphere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct UnitVector(Vec<f64>);

impl UnitVector {
    /// The first standard basis vector of dimension `dim`.
    pub fn basis(dim: usize) -> Self {
        let mut v = vec![0.0; dim];
        if dim > 0 {
            v[0] = 1.0;
        }
        UnitVector(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn dot(&self, other: &UnitVector) -> f64 {
        dot(&self.0, &other.0)
    }

    /// Wraps a vector that is already known to be unit-norm.
    #[cfg(test)]
    pub(crate) fn from_raw_unchecked(v: Vec<f64>) -> Self {
        UnitVector(v)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Scales `v` onto the unit sphere.
///
/// A vector with norm below `1e-12` maps to the first standard basis vector
/// instead of failing, so untrained or zero-initialized encoders still
/// produce valid embeddings.
pub fn normalize(v: &[f64]) -> Result<UnitVector> {
    if v.is_empty() {
        return Err(Error::EmptyVector);
    }
    let norm = dot(v, v).sqrt();
    if !(norm >= ZERO_NORM) {
        return Ok(UnitVector::basis(v.len()));
    }
    if (norm - 1.0).abs() <= UNIT_SLACK {
        return Ok(UnitVector(v.to_vec()));
    }
    Ok(UnitVector(v.iter().map(|x| x / norm).collect()))
}
