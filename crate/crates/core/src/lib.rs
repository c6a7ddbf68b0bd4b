//! Two-grid optimal interpolation for nonsymmetric matrices.
//!
//! A nonsymmetric operator `A` is recast as the symmetric indefinite block
//! operator `[[0, A], [A^T, 0]]`, smoothed with Kaczmarz relaxation, and the
//! optimal coarse space is read off the generalized eigenproblem of the block
//! operator against the symmetrized smoother. The crate builds every piece
//! densely and checks the predicted two-grid rate `1 - lambda_{nc+1}` against
//! exact spectral radii and power iteration.

pub mod analysis;
pub mod blocksys;
pub mod cli;
pub mod dense;
pub mod eigsolve;
pub mod error;
pub mod hqr;
pub mod matgen;
pub mod mmio;
pub mod report;
pub mod rng;
pub mod smoother;
pub mod sparse;
pub mod twogrid;

pub use error::{Error, Result};
pub use sparse::SparseMatrix;
