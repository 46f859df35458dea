//! Dense and sparse matrices used by the propagation kernels and the
//! trainable layers.

mod dense;
mod sparse;

pub use dense::DenseMatrix;
pub use sparse::SparseMatrix;
