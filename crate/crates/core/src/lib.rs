//! Exact Voronoi cell complexes of positive definite quadratic forms modulo
//! `GL_N(Z)` or `SL_N(Z)`, their differentials and integral homology.

pub mod complex;
pub mod error;
pub mod forms;
pub mod homology;
pub mod isometry;
pub mod linalg;
pub mod pipeline;
pub mod polyhedral;
pub mod report;
pub mod voronoi;

pub use error::{Error, Result};
