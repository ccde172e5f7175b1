use nalgebra::Matrix2;
use serde::{Deserialize, Serialize};

use crate::bspline::KnotVector;
use crate::{Error, Result};

/// Tensor-product B-spline map `[0,1]² → ℝ²` with control points in lattice
/// order (`i + n_u * j`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometryMap {
    pub kv_u: KnotVector,
    pub kv_v: KnotVector,
    pub control_points: Vec<[f64; 2]>,
}

impl GeometryMap {
    pub fn new(kv_u: KnotVector, kv_v: KnotVector, control_points: Vec<[f64; 2]>) -> Result<Self> {
        if control_points.len() != kv_u.len() * kv_v.len() {
            return Err(Error::Config(format!(
                "geometry needs {} control points, got {}",
                kv_u.len() * kv_v.len(),
                control_points.len()
            )));
        }
        Ok(Self {
            kv_u,
            kv_v,
            control_points,
        })
    }

    /// Bilinear map through corners in the order `G(0,0), G(1,0), G(0,1), G(1,1)`.
    pub fn bilinear(corners: [[f64; 2]; 4]) -> Self {
        let kv = KnotVector::uniform(1, 1).expect("linear knot vector");
        Self {
            kv_u: kv.clone(),
            kv_v: kv,
            control_points: corners.to_vec(),
        }
    }

    /// Axis-aligned rectangle `[x0, x1] × [y0, y1]`.
    pub fn rectangle(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Self::bilinear([[x0, y0], [x1, y0], [x0, y1], [x1, y1]])
    }

    pub fn unit_square() -> Self {
        Self::rectangle(0.0, 0.0, 1.0, 1.0)
    }

    pub fn eval(&self, u: f64, v: f64) -> Result<[f64; 2]> {
        let eu = self.kv_u.eval_basis(u, 0)?;
        let ev = self.kv_v.eval_basis(v, 0)?;
        let nu = self.kv_u.len();
        let mut x = [0.0; 2];
        for (b, bv) in ev.ders[0].iter().enumerate() {
            for (a, bu) in eu.ders[0].iter().enumerate() {
                let c = self.control_points[eu.first + a + nu * (ev.first + b)];
                let w = bu * bv;
                x[0] += w * c[0];
                x[1] += w * c[1];
            }
        }
        Ok(x)
    }

    /// Jacobian with columns `∂G/∂u`, `∂G/∂v`.
    pub fn jacobian(&self, u: f64, v: f64) -> Result<Matrix2<f64>> {
        let eu = self.kv_u.eval_basis(u, 1)?;
        let ev = self.kv_v.eval_basis(v, 1)?;
        let nu = self.kv_u.len();
        let mut j = Matrix2::zeros();
        for b in 0..ev.ders[0].len() {
            for a in 0..eu.ders[0].len() {
                let c = self.control_points[eu.first + a + nu * (ev.first + b)];
                let du = eu.ders[1][a] * ev.ders[0][b];
                let dv = eu.ders[0][a] * ev.ders[1][b];
                for r in 0..2 {
                    j[(r, 0)] += du * c[r];
                    j[(r, 1)] += dv * c[r];
                }
            }
        }
        Ok(j)
    }

    /// Point and Jacobian in one pass.
    pub fn eval_with_jacobian(&self, u: f64, v: f64) -> Result<([f64; 2], Matrix2<f64>)> {
        Ok((self.eval(u, v)?, self.jacobian(u, v)?))
    }
}
