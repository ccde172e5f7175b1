//! Dual-primal tearing and interconnecting on the extended local spaces.
//!
//! Primal dofs follow the fat-vertex rule: every basis function that does
//! not vanish at a vertex is primal, together with all of its artificial
//! copies. Remaining interface and artificial dofs are dual and are glued
//! by Lagrange multipliers; the multiplier system is solved by PCG with the
//! coefficient-scaled Dirichlet preconditioner.

mod jump;
mod operator;
mod partition;
mod primal;
mod report;

pub use jump::{build_jump_matrices, JumpMatrices, JumpRow};
pub use operator::{IetiOperator, Recovered};
pub use partition::{BlockPartition, DofClass, DofPartition};
pub use primal::{select_primal, PrimalGroup};
pub use report::{bound_factor, solve, SolveOptions, SolveReport};
