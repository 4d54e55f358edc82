//! Sparse and dense linear algebra support.

pub mod eigen;
pub mod snf;
pub mod sparse;

pub use eigen::{dense_eigenvalues, smallest_eigenpairs, EigenOptions, Eigenpairs};
pub use sparse::Csr;
