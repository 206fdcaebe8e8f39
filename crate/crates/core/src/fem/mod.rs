//! Finite-element spaces, quadrature and sparse assembly.

mod assembly;
mod element;
mod quadrature;
mod sparse;
mod space;

pub use assembly::*;
pub use element::{local_edges, shape_dlambda, shape_values, CellGeometry, Family, Tabulation};
pub use quadrature::{gauss_legendre, QuadratureRule};
pub use space::{Discretization, FeSpace, FieldVector};
pub use sparse::SparseMatrix;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum FemError {
    #[error("space mismatch: {0}")]
    SpaceMismatch(String),
    #[error("non-finite values in {0}")]
    NonFinite(String),
    #[error("mesh has no wall facets")]
    NoWall,
}
