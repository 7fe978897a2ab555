//! Linear relations, boundary triplets and index computations for self-adjoint
//! boundary problems on finite-dimensional and exact one-dimensional models.

pub mod cayley;
pub mod error;
pub mod famindex;
pub mod fixtures;
pub mod gelfand;
pub mod linalg;
pub mod relspace;
pub mod sturm;
pub mod suites;
pub mod symbols;
pub mod triplet;

pub use error::{Error, Result};
