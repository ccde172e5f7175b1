use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use nalgebra::{Matrix2, Vector2};

use crate::bspline::{gauss_rule, KnotVector};
use crate::geometry::{InterfaceView, MultiPatchDomain, Patch};
use crate::{Error, Result};

pub type ScalarField = Arc<dyn Fn([f64; 2]) -> f64 + Send + Sync>;
pub type VectorField = Arc<dyn Fn([f64; 2]) -> [f64; 2] + Send + Sync>;

/// Penalty parameter and right-hand side.
#[derive(Clone)]
pub struct Problem {
    pub delta: f64,
    pub source: ScalarField,
    /// Optional field `W` contributing `∫ W·∇v` to the load.
    pub vector_source: Option<VectorField>,
}

impl fmt::Debug for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Problem")
            .field("delta", &self.delta)
            .field("vector_source", &self.vector_source.is_some())
            .finish_non_exhaustive()
    }
}

impl Default for Problem {
    fn default() -> Self {
        Self::constant_source(12.0, 1.0)
    }
}

impl Problem {
    pub fn constant_source(delta: f64, value: f64) -> Self {
        Self {
            delta,
            source: Arc::new(move |_| value),
            vector_source: None,
        }
    }

    pub fn zero(delta: f64) -> Self {
        Self::constant_source(delta, 0.0)
    }

    /// Right-hand side of `-Δu = f` for `u = sin(πx) sin(πy)`.
    pub fn manufactured_sine(delta: f64) -> Self {
        Self {
            delta,
            source: Arc::new(|[x, y]| 2.0 * PI * PI * (PI * x).sin() * (PI * y).sin()),
            vector_source: None,
        }
    }

    pub fn with_vector_source(mut self, w: VectorField) -> Self {
        self.vector_source = Some(w);
        self
    }
}

/// Degree of freedom referenced by an interface term: a dof of the patch
/// the interface is viewed from, or a dof of the neighbor patch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DofRef {
    Own(usize),
    Neighbor(usize),
}

/// Sorted union of the breakpoints of two knot vectors.
fn merged_breaks(a: &KnotVector, b: &KnotVector) -> Vec<f64> {
    let mut x: Vec<f64> = a.breakpoints().into_iter().chain(b.breakpoints()).collect();
    x.sort_by(f64::total_cmp);
    x.dedup_by(|p, q| (*p - *q).abs() <= 1e-14);
    x
}

pub(crate) struct FunctionEval {
    pub dof: usize,
    pub value: f64,
    pub grad: Vector2<f64>,
}

pub(crate) struct PointEval {
    pub x: [f64; 2],
    pub jac: Matrix2<f64>,
    pub jac_inv_t: Matrix2<f64>,
    pub funcs: Vec<FunctionEval>,
}

/// Values and physical gradients of the active non-Dirichlet functions of a
/// patch at a parameter point.
pub(crate) fn eval_patch(k: usize, patch: &Patch, u: f64, v: f64) -> Result<PointEval> {
    let (x, jac) = patch.geometry.eval_with_jacobian(u, v)?;
    let det = jac.determinant();
    if det.abs() <= 1e-14 * jac.norm_squared() || !det.is_finite() {
        return Err(Error::SingularJacobian { patch: k, u, v, det });
    }
    let jac_inv_t = jac.try_inverse().ok_or(Error::SingularJacobian { patch: k, u, v, det })?.transpose();
    let space = &patch.space;
    let eu = space.kv_u().eval_basis(u, 1)?;
    let ev = space.kv_v().eval_basis(v, 1)?;
    let mut funcs = Vec::with_capacity(eu.ders[0].len() * ev.ders[0].len());
    for b in 0..ev.ders[0].len() {
        for a in 0..eu.ders[0].len() {
            let Some(dof) = space.dof(eu.first + a, ev.first + b) else {
                continue;
            };
            let value = eu.ders[0][a] * ev.ders[0][b];
            let g = Vector2::new(eu.ders[1][a] * ev.ders[0][b], eu.ders[0][a] * ev.ders[1][b]);
            if value == 0.0 && g == Vector2::zeros() {
                continue;
            }
            funcs.push(FunctionEval {
                dof,
                value,
                grad: jac_inv_t * g,
            });
        }
    }
    Ok(PointEval {
        x,
        jac,
        jac_inv_t,
        funcs,
    })
}

/// Volume stiffness `α ∫ ∇u·∇v` (as triplets over patch dofs) and load
/// `∫ f v + ∫ W·∇v` of patch `k`.
pub fn volume_terms(k: usize, patch: &Patch, problem: &Problem) -> Result<(Vec<(usize, usize, f64)>, Vec<f64>)> {
    let p = patch.space.degree();
    let rule = gauss_rule(p + 1)?;
    let bu = merged_breaks(patch.space.kv_u(), &patch.geometry.kv_u);
    let bv = merged_breaks(patch.space.kv_v(), &patch.geometry.kv_v);
    let mut trip = Vec::new();
    let mut load = vec![0.0; patch.space.dim()];
    for sv in bv.windows(2) {
        for su in bu.windows(2) {
            for (v, wv) in rule.mapped(sv[0], sv[1]) {
                for (u, wu) in rule.mapped(su[0], su[1]) {
                    let pe = eval_patch(k, patch, u, v)?;
                    let w = wu * wv * pe.jac.determinant().abs();
                    let f = (problem.source)(pe.x);
                    let wf = problem.vector_source.as_ref().map(|g| g(pe.x));
                    for fi in &pe.funcs {
                        load[fi.dof] += w * f * fi.value;
                        if let Some([w0, w1]) = wf {
                            load[fi.dof] += w * (w0 * fi.grad[0] + w1 * fi.grad[1]);
                        }
                        for fj in &pe.funcs {
                            let a = patch.alpha * w * fi.grad.dot(&fj.grad);
                            if a != 0.0 {
                                trip.push((fi.dof, fj.dof, a));
                            }
                        }
                    }
                }
            }
        }
    }
    Ok((trip, load))
}

/// Edge parameters on the viewing side at which the integrand of the
/// interface terms is smooth: both sides' space and geometry breakpoints,
/// restricted to the interface range.
pub(crate) fn interface_breaks(domain: &MultiPatchDomain, view: &InterfaceView) -> Vec<f64> {
    let me = domain.patch(view.this);
    let other = domain.patch(view.other);
    let [a, b] = view.this_range;
    let geo_edge = |p: &Patch, side: crate::bspline::Side| match side {
        crate::bspline::Side::West | crate::bspline::Side::East => p.geometry.kv_v.breakpoints(),
        _ => p.geometry.kv_u.breakpoints(),
    };
    let mut t: Vec<f64> = vec![a, b];
    t.extend(me.space.edge_kv(view.this_side).breakpoints());
    t.extend(geo_edge(me, view.this_side));
    for s in other
        .space
        .edge_kv(view.other_side)
        .breakpoints()
        .into_iter()
        .chain(geo_edge(other, view.other_side))
    {
        t.push(view.from_other(s));
    }
    t.retain(|&x| x >= a && x <= b);
    t.sort_by(f64::total_cmp);
    t.dedup_by(|p, q| (*p - *q).abs() <= 1e-13);
    t
}

/// Consistency (`m`) and penalty (`r`) contributions of the interface seen
/// from `view.this`. Neighbor references point into the neighbor's patch
/// dofs. With `include_consistency = false` only `r` is returned.
pub fn interface_terms(
    domain: &MultiPatchDomain,
    view: &InterfaceView,
    delta: f64,
    include_consistency: bool,
) -> Result<Vec<(DofRef, DofRef, f64)>> {
    let k = view.this;
    let me = domain.patch(k);
    let other = domain.patch(view.other);
    let p = me.space.degree();
    let alpha = me.alpha;
    let h = domain.metrics()[k].h.min(domain.metrics()[view.other].h);
    let sigma = alpha * delta * (p * p) as f64 / h;
    let half = if include_consistency { 0.5 * alpha } else { 0.0 };
    let rule = gauss_rule(p + 1)?;
    let n_hat = Vector2::from(view.this_side.reference_normal());
    let tangent = Vector2::from(view.this_side.tangent());
    let edge_kv = other.space.edge_kv(view.other_side);

    check_normal_orientation(domain, view)?;

    let mut out = Vec::new();
    for seg in interface_breaks(domain, view).windows(2) {
        if seg[1] - seg[0] <= 0.0 {
            continue;
        }
        for (t, wt) in rule.mapped(seg[0], seg[1]) {
            let [u, v] = view.this_side.point(t);
            let pe = eval_patch(k, me, u, v)?;
            let normal = {
                let n = pe.jac_inv_t * n_hat;
                n / n.norm()
            };
            let w = wt * (pe.jac * tangent).norm();

            let s = view.to_other(t).clamp(0.0, 1.0);
            let e = edge_kv.eval_basis(s, 0)?;
            let nb: Vec<(usize, f64)> = e
                .values()
                .iter()
                .enumerate()
                .filter(|(_, &val)| val != 0.0)
                .filter_map(|(j, &val)| other.space.edge_dof(view.other_side, e.first + j).map(|d| (d, val)))
                .collect();
            let own: Vec<(usize, f64, f64)> = pe
                .funcs
                .iter()
                .map(|f| (f.dof, f.value, f.grad.dot(&normal)))
                .collect();

            for &(i, vi, dni) in &own {
                for &(j, vj, dnj) in &own {
                    let a = w * (sigma * vi * vj - half * (dnj * vi + dni * vj));
                    if a != 0.0 {
                        out.push((DofRef::Own(i), DofRef::Own(j), a));
                    }
                }
                for &(j, vj) in &nb {
                    let a = w * (half * dni * vj - sigma * vi * vj);
                    if a != 0.0 {
                        out.push((DofRef::Own(i), DofRef::Neighbor(j), a));
                        out.push((DofRef::Neighbor(j), DofRef::Own(i), a));
                    }
                }
            }
            for &(i, vi) in &nb {
                for &(j, vj) in &nb {
                    out.push((DofRef::Neighbor(i), DofRef::Neighbor(j), w * sigma * vi * vj));
                }
            }
        }
    }
    Ok(out)
}

/// The computed normal must point away from the patch interior.
fn check_normal_orientation(domain: &MultiPatchDomain, view: &InterfaceView) -> Result<()> {
    let patch = domain.patch(view.this);
    let t = 0.5 * (view.this_range[0] + view.this_range[1]);
    let uv = view.this_side.point(t);
    let n_hat = view.this_side.reference_normal();
    let eps = 1e-4;
    let inner = [uv[0] - eps * n_hat[0], uv[1] - eps * n_hat[1]];
    let (x, jac) = patch.geometry.eval_with_jacobian(uv[0], uv[1])?;
    let jac_inv_t = jac.try_inverse().map(|m| m.transpose()).ok_or(Error::SingularJacobian {
        patch: view.this,
        u: uv[0],
        v: uv[1],
        det: 0.0,
    })?;
    let n = jac_inv_t * Vector2::from(n_hat);
    let y = patch.geometry.eval(inner[0], inner[1])?;
    if n[0] * (y[0] - x[0]) + n[1] * (y[1] - x[1]) >= 0.0 {
        return Err(Error::Invariant(format!(
            "normal on interface {} points into patch {}",
            view.index, view.this
        )));
    }
    Ok(())
}
