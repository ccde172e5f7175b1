//! SIPG assembly: volume terms, interface consistency and penalty terms, and
//! the extended local systems on `V_e^(k)` (patch space plus artificial
//! interface spaces holding neighbor traces).

mod forms;
mod local;

pub use forms::{interface_terms, volume_terms, DofRef, Problem, ScalarField, VectorField};
pub use local::{build_local_system, trace_basis_on_edge, ArtificialInterfaceBasis, ExtendedLocalSystem, LocalInterface};
pub(crate) use forms::{eval_patch, interface_breaks};
