use nalgebra::DMatrix;

use super::{dot, norm2, symmetric_eigenvalues};
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct PcgOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// `‖r_k‖₂` for k = 0..=iterations.
    pub residuals: Vec<f64>,
    pub alphas: Vec<f64>,
    pub betas: Vec<f64>,
}

impl PcgOutcome {
    /// Extreme eigenvalues of the preconditioned operator estimated from the
    /// Lanczos tridiagonal matrix built out of the PCG coefficients.
    pub fn eigen_estimate(&self) -> Option<(f64, f64)> {
        lanczos_extreme_eigenvalues(&self.alphas, &self.betas)
    }

    pub fn condition_estimate(&self) -> Option<f64> {
        self.eigen_estimate().map(|(lo, hi)| hi / lo)
    }
}

/// Preconditioned conjugate gradients from the zero vector.
///
/// Stops once `‖r_k‖₂ ≤ tol·‖b‖₂` or after `max_iter` iterations. A direction
/// with `pᵀ A p ≤ 0` aborts with [`Error::Indefinite`].
pub fn pcg<A, M>(apply_a: A, apply_m: M, b: &[f64], tol: f64, max_iter: usize) -> Result<PcgOutcome>
where
    A: Fn(&[f64]) -> Vec<f64>,
    M: Fn(&[f64]) -> Vec<f64>,
{
    let n = b.len();
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let bnorm = norm2(b);
    let mut out = PcgOutcome {
        x: Vec::new(),
        iterations: 0,
        converged: true,
        residuals: vec![bnorm],
        alphas: Vec::new(),
        betas: Vec::new(),
    };
    if bnorm == 0.0 {
        out.x = x;
        return Ok(out);
    }
    let target = tol * bnorm;
    let mut z = apply_m(&r);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    out.converged = false;
    for it in 0..max_iter {
        let q = apply_a(&p);
        let curvature = dot(&p, &q);
        if !(curvature > 0.0) {
            return Err(Error::Indefinite {
                iteration: it,
                curvature,
            });
        }
        let alpha = rz / curvature;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * q[i];
        }
        out.alphas.push(alpha);
        out.iterations = it + 1;
        let rnorm = norm2(&r);
        out.residuals.push(rnorm);
        if rnorm <= target {
            out.converged = true;
            break;
        }
        z = apply_m(&r);
        let rz_new = dot(&r, &z);
        if !(rz_new > 0.0) {
            return Err(Error::Indefinite {
                iteration: it,
                curvature: rz_new,
            });
        }
        let beta = rz_new / rz;
        out.betas.push(beta);
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    out.x = x;
    Ok(out)
}

/// Extreme eigenvalues of the Lanczos matrix
/// `T_jj = 1/α_j + β_{j-1}/α_{j-1}`, `T_{j,j+1} = √β_j / α_j`.
pub fn lanczos_extreme_eigenvalues(alphas: &[f64], betas: &[f64]) -> Option<(f64, f64)> {
    let k = alphas.len();
    if k == 0 {
        return None;
    }
    let mut t = DMatrix::zeros(k, k);
    for j in 0..k {
        t[(j, j)] = 1.0 / alphas[j];
        if j > 0 {
            t[(j, j)] += betas[j - 1] / alphas[j - 1];
        }
        if j + 1 < k {
            let off = betas[j].sqrt() / alphas[j];
            t[(j, j + 1)] = off;
            t[(j + 1, j)] = off;
        }
    }
    let ev = symmetric_eigenvalues(&t).ok()?;
    Some((ev[0], ev[k - 1]))
}
