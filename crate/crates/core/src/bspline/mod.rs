//! Univariate and tensor-product B-spline machinery.

mod knots;
mod quadrature;
mod tensor;

pub use knots::{BasisEval, KnotVector};
pub use quadrature::{gauss_rule, QuadratureRule};
pub use tensor::{Side, TensorSplineSpace};
