//! Built-in domain families, JSON domain files and the experiment drivers.

mod builtin;
mod config;
mod driver;

pub use builtin::Builtin;
pub use config::{DomainConfig, GeometryConfig, PatchConfig};
pub use driver::{
    fitted_slope, kappa_spread, run_convergence, run_growth_study, run_jump_sweep, run_slide_sweep, run_solve,
    sine_gradient, sine_solution, write_csv, Batch, ConvergenceLevel, ConvergenceStudy, DomainSource,
    ExperimentSpec, GrowthLevel, GrowthStudy, Study,
};
