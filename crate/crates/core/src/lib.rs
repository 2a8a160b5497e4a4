//! Finite-truncation laboratory for commutative Banach algebras generated by
//! Toeplitz operators with quasi-radial and generalized pseudo-homogeneous
//! symbols on weighted Bergman spaces of the unit ball.
//!
//! Every operator in these algebras is block diagonal with respect to the
//! decomposition of the Bergman space into the finite-dimensional spaces
//! `H_kappa`, and on each of them it factors as a tensor product of small
//! per-group matrices. The modules follow that structure:
//!
//! * [`lattice`]: multi-indices, block bases and monomial norms.
//! * [`quad`]: simplex and torus quadrature, Dirichlet closed forms.
//! * [`expr`] and [`symbols`]: symbol models and the expression language.
//! * [`assembly`]: eigenvalue sequences, per-group blocks, truncated operators
//!   and projections.
//! * [`spectra`]: eigenvalues, planar regions and polynomial hulls, Berezin
//!   probes, inverse-closedness.
//! * [`gelfand`]: finite sums, sampled maximal ideal space, Gelfand transform.
//! * [`radical`]: diagonalizability, h-polynomials, radical generators and the
//!   division decomposition.

pub mod assembly;
pub mod error;
pub mod expr;
pub mod gelfand;
pub mod lattice;
pub mod quad;
pub mod radical;
pub mod spectra;
pub mod symbols;

mod par;
mod special;

pub use error::{Error, Result};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;
/// Dense complex matrix.
pub type CMatrix = nalgebra::DMatrix<C64>;
/// Dense complex vector.
pub type CVector = nalgebra::DVector<C64>;
