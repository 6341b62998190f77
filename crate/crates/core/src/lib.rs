//! Numerical machinery for first-eigenvalue upper bounds on closed surfaces.
//!
//! A holomorphic curve in complex projective space is modelled inside the
//! Euclidean space of Hermitian matrices (inner product `2 tr AB`). From the
//! curve we build the test maps `phi_a = A + a B`, balance their center of
//! mass with a projectivity, and turn the resulting Rayleigh quotient into the
//! closed-form bound `F(n, d, delta, a)`. A cotangent Laplacian on triangle
//! meshes supplies discrete eigenvalues to compare against.
//!
//! Modules:
//!
//! - [`matspace`]: Hermitian matrices, the embedded projective space, its
//!   convex hull and projectivities.
//! - [`curve`]: genus-0 curves given by polynomial charts; pointwise `A`,
//!   Gauss map `B`, metric density, curvature and branch data.
//! - [`quad`]: quadrature over the two-chart atlas and the integral identities.
//! - [`balance`]: the center-of-mass map and a solver that balances it.
//! - [`bounds`]: the bound function, its minimization, Brill–Noether degrees
//!   and the asymptotic constant.
//! - [`spectral`]: meshes and the discrete first eigenvalue.

#![forbid(unsafe_code)]
// `!(x > 0.0)` style guards are used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod balance;
pub mod bounds;
pub mod curve;
pub mod io;
pub mod matspace;
pub mod poly;
pub mod quad;
pub mod spectral;

mod error;

pub use error::{Error, Result};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;

/// Dense complex matrix.
pub type CMat = nalgebra::DMatrix<C64>;

/// Dense complex (homogeneous coordinate) vector.
pub type CVec = nalgebra::DVector<C64>;
