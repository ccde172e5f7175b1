//! Dual-primal isogeometric tearing and interconnecting (IETI-DP) solver for
//! symmetric interior penalty dG discretizations of the generalized Poisson
//! problem on non-conforming multi-patch B-spline domains, T-junctions included.
//!
//! The crate is organised bottom-up:
//!
//! * [`bspline`] univariate and tensor-product B-spline machinery,
//! * [`geometry`] patch maps and multi-patch topology with vertex classification,
//! * [`assembly`] extended local systems with artificial interfaces,
//! * [`refsolver`] the untorn global SIPG system used as a direct-solve oracle,
//! * [`ieti`] primal selection (fat vertices), jump matrices, the dual operator
//!   and the scaled Dirichlet preconditioner,
//! * [`linalg`] sparse storage, LDLᵀ factorization, eigenvalues and PCG,
//! * [`experiment`] built-in domains, configuration files and the experiment drivers
//!   behind the `ietidp` binary.

pub mod assembly;
pub mod bspline;
pub mod error;
pub mod experiment;
pub mod geometry;
pub mod ieti;
pub mod linalg;
pub mod refsolver;

pub use error::{Error, Result};
