//! Representation theory of `Spin(3,1)` at truncated desk scale.
//!
//! Matrix realisations of the irreducible `(g, K)`-modules `V_{lambda,rho}`
//! and `F^A_gamma`, Clebsch-Gordan decompositions of `F^A_gamma (x) V_{lambda,rho}`,
//! Wigner-Eckart projection operators and Jordan-Schwinger ladder operators.
//!
//! Numeric routines are generic over [`Real`] (`f32` or `f64`); the `*64`
//! aliases below fix the double-precision instantiation used by the CLI.

pub mod composite;
pub mod coupling;
pub mod dense;
pub mod error;
pub mod half;
pub mod repr;
pub mod scalar;
pub mod sparse;
pub mod tensorop;
pub mod su2;
pub mod tridiag;
pub mod verify;

pub use error::{Error, Result};
pub use half::HalfInt;
pub use repr::{Classification, FiniteLabel, Generator, IrrepLabel, TruncatedModule};
pub use scalar::{Real, C};
pub use sparse::{Basis, SparseOperator, State};

pub type Complex64 = num_complex::Complex<f64>;
pub type IrrepLabel64 = IrrepLabel<f64>;
pub type TruncatedModule64 = TruncatedModule<f64>;
pub type SparseOperator64 = SparseOperator<f64>;
pub type CouplingProblem64 = coupling::CouplingProblem<f64>;
pub type CgTable64 = coupling::CgTable<f64>;
pub type TensorOperator64 = tensorop::TensorOperator<f64>;
