//! Sample-and-query linear algebra: sampling access structures over vectors
//! and matrices, and the sublinear estimators built on top of them —
//! inner products, matrix-vector sampling, low-rank approximation,
//! nearest-centroid distance, and principal component extraction.

pub mod analysis;
pub mod centroid;
pub mod dense;
pub mod error;
pub mod estimators;
pub mod io;
pub mod lowrank;
pub mod matvec;
pub mod oracle;
pub mod pca;
pub mod sq;
pub mod stats;
pub mod svd;
pub mod synth;

pub use error::{Result, SqError};
pub use sq::{SqAccess, SqMatrix, SqMatrixAccess, SqVector};
