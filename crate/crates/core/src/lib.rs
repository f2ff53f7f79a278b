//! Recursive skeletonization of kernel matrices.
//!
//! Compresses dense kernel matrices into a multilevel telescoping
//! representation, applies them in linear time, and builds a direct solver
//! from the same structure. Boundary integral helpers for planar curves sit on
//! top.

#![allow(clippy::excessive_precision, clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod bie;
pub mod container;
pub mod error;
pub mod geom;
pub mod kernels;
pub mod linalg;
pub mod lowrank;
pub mod scalar;
pub mod skel;
pub mod solver;

pub use error::{Error, Result};
pub use scalar::{RealScalar, Scalar};

pub use num_complex::{Complex32, Complex64};

pub type CompressedMatrixF64 = skel::CompressedMatrix<f64>;
pub type CompressedMatrixC64 = skel::CompressedMatrix<Complex64>;
pub type FactoredInverseF64 = solver::FactoredInverse<f64>;
pub type FactoredInverseC64 = solver::FactoredInverse<Complex64>;
pub type MatF64 = linalg::Mat<f64>;
pub type MatC64 = linalg::Mat<Complex64>;
