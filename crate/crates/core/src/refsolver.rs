//! Untorn global SIPG system on `V = V^(1) × … × V^(K)`, solved directly.
//! Serves as the oracle for the IETI-DP solver and for error measurement.

use rayon::prelude::*;
use serde::Serialize;

use crate::assembly::{interface_terms, volume_terms, DofRef, Problem};
use crate::bspline::gauss_rule;
use crate::geometry::MultiPatchDomain;
use crate::linalg::{norm2, pencil_extremes, CsrMatrix, LdlFactor, TripletBuilder};
use crate::{Error, Result};

const DENSE_MARGIN_LIMIT: usize = 1500;

#[derive(Debug, Clone)]
pub struct GlobalSipgSystem {
    pub matrix: CsrMatrix,
    pub load: Vec<f64>,
    /// `offsets[k]..offsets[k+1]` are the dofs of patch `k`.
    pub offsets: Vec<usize>,
}

impl GlobalSipgSystem {
    pub fn dim(&self) -> usize {
        self.load.len()
    }

    pub fn patch_slice<'a>(&self, x: &'a [f64], k: usize) -> &'a [f64] {
        &x[self.offsets[k]..self.offsets[k + 1]]
    }
}

pub fn patch_offsets(domain: &MultiPatchDomain) -> Vec<usize> {
    let mut off = vec![0];
    for p in domain.patches() {
        off.push(off.last().unwrap() + p.space.dim());
    }
    off
}

fn assemble(domain: &MultiPatchDomain, problem: &Problem, consistency: bool) -> Result<GlobalSipgSystem> {
    let offsets = patch_offsets(domain);
    let n = *offsets.last().unwrap();
    let parts = (0..domain.num_patches())
        .into_par_iter()
        .map(|k| {
            let (vol, load) = volume_terms(k, domain.patch(k), problem)?;
            let ok = offsets[k];
            let mut trip: Vec<(usize, usize, f64)> = vol.into_iter().map(|(i, j, v)| (ok + i, ok + j, v)).collect();
            for view in domain.views(k) {
                let ol = offsets[view.other];
                let g = |r: DofRef| match r {
                    DofRef::Own(i) => ok + i,
                    DofRef::Neighbor(j) => ol + j,
                };
                trip.extend(
                    interface_terms(domain, &view, problem.delta, consistency)?
                        .into_iter()
                        .map(|(r, c, v)| (g(r), g(c), v)),
                );
            }
            Ok((trip, load))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut tb = TripletBuilder::square(n);
    let mut load = Vec::with_capacity(n);
    for (trip, l) in parts {
        tb.extend(trip);
        load.extend(l);
    }
    Ok(GlobalSipgSystem {
        matrix: tb.build(),
        load,
        offsets,
    })
}

/// `a_h` and `⟨f, ·⟩` on the concatenated patch dofs.
pub fn assemble_global(domain: &MultiPatchDomain, problem: &Problem) -> Result<GlobalSipgSystem> {
    assemble(domain, problem, true)
}

/// Matrix of the dG norm `d(u, v)` (volume and penalty terms only).
pub fn assemble_dg_norm(domain: &MultiPatchDomain, problem: &Problem) -> Result<CsrMatrix> {
    Ok(assemble(domain, problem, false)?.matrix)
}

pub fn direct_solve(system: &GlobalSipgSystem) -> Result<Vec<f64>> {
    let b = &system.load;
    let nb = norm2(b);
    if nb == 0.0 {
        return Ok(vec![0.0; b.len()]);
    }
    let f = LdlFactor::new_spd(&system.matrix, "global SIPG matrix")?;
    let mut x = f.solve(b);
    // one step of iterative refinement
    let r: Vec<f64> = b.iter().zip(system.matrix.mul_vec(&x)).map(|(b, ax)| b - ax).collect();
    let dx = f.solve(&r);
    for (xi, d) in x.iter_mut().zip(dx) {
        *xi += d;
    }
    let res: Vec<f64> = b.iter().zip(system.matrix.mul_vec(&x)).map(|(b, ax)| b - ax).collect();
    let rel = norm2(&res) / nb;
    if rel > 1e-10 {
        return Err(Error::Invariant(format!("direct solve residual {rel:.3e} exceeds 1e-10")));
    }
    Ok(x)
}

/// Smallest eigenvalue of `a_h` relative to the dG norm, computed densely;
/// `None` above the size limit.
pub fn coercivity_margin(domain: &MultiPatchDomain, problem: &Problem) -> Result<Option<f64>> {
    let a = assemble_global(domain, problem)?.matrix;
    if a.nrows() > DENSE_MARGIN_LIMIT || a.nrows() == 0 {
        return Ok(None);
    }
    let d = assemble_dg_norm(domain, problem)?;
    let (lo, _) = pencil_extremes(&a.to_dense(), &d.to_dense())?;
    Ok(Some(lo))
}

/// Value and physical gradient of the discrete function with patch
/// coefficients `coeffs` at parameter `(u, v)` of patch `k`.
pub fn evaluate(domain: &MultiPatchDomain, k: usize, coeffs: &[f64], u: f64, v: f64) -> Result<([f64; 2], f64, [f64; 2])> {
    let pe = crate::assembly::eval_patch(k, domain.patch(k), u, v)?;
    let mut val = 0.0;
    let mut grad = [0.0; 2];
    for f in &pe.funcs {
        val += coeffs[f.dof] * f.value;
        grad[0] += coeffs[f.dof] * f.grad[0];
        grad[1] += coeffs[f.dof] * f.grad[1];
    }
    Ok((pe.x, val, grad))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorNorms {
    pub l2: f64,
    pub h1_broken: f64,
    pub max_jump: f64,
}

/// Errors of the discrete solution `x` (concatenated patch coefficients)
/// against `exact` and its gradient.
pub fn measure_error<U, G>(domain: &MultiPatchDomain, x: &[f64], exact: U, exact_grad: G) -> Result<ErrorNorms>
where
    U: Fn([f64; 2]) -> f64,
    G: Fn([f64; 2]) -> [f64; 2],
{
    let offsets = patch_offsets(domain);
    let p = domain.degree();
    let rule = gauss_rule(p + 3)?;
    let (mut l2, mut h1) = (0.0, 0.0);
    for k in 0..domain.num_patches() {
        let c = &x[offsets[k]..offsets[k + 1]];
        let patch = domain.patch(k);
        for (v0, v1) in patch.space.kv_v().spans() {
            for (u0, u1) in patch.space.kv_u().spans() {
                for (v, wv) in rule.mapped(v0, v1) {
                    for (u, wu) in rule.mapped(u0, u1) {
                        let det = patch.geometry.jacobian(u, v)?.determinant().abs();
                        let (pt, val, g) = evaluate(domain, k, c, u, v)?;
                        let w = wu * wv * det;
                        let ge = exact_grad(pt);
                        l2 += w * (val - exact(pt)).powi(2);
                        h1 += w * ((g[0] - ge[0]).powi(2) + (g[1] - ge[1]).powi(2));
                    }
                }
            }
        }
    }
    let mut max_jump: f64 = 0.0;
    let prule = gauss_rule(p + 1)?;
    for (id, itf) in domain.interfaces().iter().enumerate() {
        let view = itf.view_from(id, itf.k).expect("interface owner");
        for seg in crate::assembly::interface_breaks(domain, &view).windows(2) {
            for (t, _) in prule.mapped(seg[0], seg[1]) {
                let [u, v] = view.this_side.point(t);
                let (_, a, _) = evaluate(domain, itf.k, &x[offsets[itf.k]..offsets[itf.k + 1]], u, v)?;
                let [u, v] = view.other_side.point(view.to_other(t).clamp(0.0, 1.0));
                let (_, b, _) = evaluate(domain, itf.l, &x[offsets[itf.l]..offsets[itf.l + 1]], u, v)?;
                max_jump = max_jump.max((a - b).abs());
            }
        }
    }
    Ok(ErrorNorms {
        l2: l2.sqrt(),
        h1_broken: h1.sqrt(),
        max_jump,
    })
}
