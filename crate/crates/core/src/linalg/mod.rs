//! Shared numerical kernels: compressed sparse rows, envelope LDLᵀ with
//! reverse Cuthill–McKee ordering, dense symmetric eigenvalues and PCG with
//! a Lanczos condition estimate.

mod eigen;
mod ldl;
mod ordering;
mod pcg;
mod sparse;

pub use eigen::{generalized_condition, pencil_extremes, symmetric_eigenvalues};
pub use ldl::{Inertia, LdlFactor};
pub use ordering::reverse_cuthill_mckee;
pub use pcg::{lanczos_extreme_eigenvalues, pcg, PcgOutcome};
pub use sparse::{CsrMatrix, TripletBuilder};

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}
