//! Finite labeled distributions, unit-sphere embeddings and the tuple
//! outcome space over which every population loss is an exact sum.

mod distribution;
mod model;
mod tuples;
mod vector;

pub use distribution::{mixture, MixtureWeights, TaskDistribution};
pub use model::{ConstantModel, EmbeddingModel, TableModel};
pub use tuples::{enumerate_tuples, for_each_tuple, tuple_count, TupleIter, TupleOutcome};
pub(crate) use tuples::expectation;
pub use vector::{normalize, UnitVector};
