use serde::{Deserialize, Serialize};

use super::GeometryMap;
use crate::bspline::{Side, TensorSplineSpace};
use crate::{Error, Result};

const JACOBIAN_SAMPLES: usize = 17;
const INTERFACE_SAMPLES: usize = 17;
const INTERFACE_TOL: f64 = 1e-9;
const VERTEX_TOL: f64 = 1e-9;
const BOUNDARY_SAMPLES: usize = 33;

/// One patch: geometry, diffusion coefficient and discretization space.
/// Dirichlet sides are carried by the space.
#[derive(Debug, Clone)]
pub struct Patch {
    pub geometry: GeometryMap,
    pub alpha: f64,
    pub space: TensorSplineSpace,
}

/// Declared coupling between a sub-range of an edge of patch `k` and a
/// sub-range of an edge of patch `l`. The correspondence between the two
/// ranges is affine; `reversed` flips its direction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interface {
    pub k: usize,
    pub side_k: Side,
    pub range_k: [f64; 2],
    pub l: usize,
    pub side_l: Side,
    pub range_l: [f64; 2],
    #[serde(default)]
    pub reversed: bool,
}

fn affine(t: f64, from: [f64; 2], to: [f64; 2], reversed: bool) -> f64 {
    let mut s = (t - from[0]) / (from[1] - from[0]);
    if reversed {
        s = 1.0 - s;
    }
    to[0] + s * (to[1] - to[0])
}

impl Interface {
    /// Edge parameter on side `l` corresponding to `t` on side `k`.
    pub fn map_k_to_l(&self, t: f64) -> f64 {
        affine(t, self.range_k, self.range_l, self.reversed)
    }

    pub fn map_l_to_k(&self, s: f64) -> f64 {
        affine(s, self.range_l, self.range_k, self.reversed)
    }

    /// The interface as seen from `patch`, which must be `k` or `l`.
    pub fn view_from(&self, index: usize, patch: usize) -> Option<InterfaceView> {
        if patch == self.k {
            Some(InterfaceView {
                index,
                this: self.k,
                this_side: self.side_k,
                this_range: self.range_k,
                other: self.l,
                other_side: self.side_l,
                other_range: self.range_l,
                reversed: self.reversed,
            })
        } else if patch == self.l {
            Some(InterfaceView {
                index,
                this: self.l,
                this_side: self.side_l,
                this_range: self.range_l,
                other: self.k,
                other_side: self.side_k,
                other_range: self.range_k,
                reversed: self.reversed,
            })
        } else {
            None
        }
    }
}

/// An interface oriented from one of its two patches.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterfaceView {
    pub index: usize,
    pub this: usize,
    pub this_side: Side,
    pub this_range: [f64; 2],
    pub other: usize,
    pub other_side: Side,
    pub other_range: [f64; 2],
    pub reversed: bool,
}

impl InterfaceView {
    pub fn to_other(&self, t: f64) -> f64 {
        affine(t, self.this_range, self.other_range, self.reversed)
    }

    pub fn from_other(&self, s: f64) -> f64 {
        affine(s, self.other_range, self.this_range, self.reversed)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum VertexKind {
    Regular,
    TJunction,
}

/// A patch touching a vertex, with the parametric location of the vertex.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VertexIncidence {
    pub patch: usize,
    pub uv: [f64; 2],
    /// Sides of the parameter square containing `uv` (two at a corner).
    pub sides: Vec<Side>,
}

impl VertexIncidence {
    pub fn is_corner(&self) -> bool {
        self.sides.len() == 2
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Vertex {
    pub point: [f64; 2],
    pub incidences: Vec<VertexIncidence>,
    pub kind: VertexKind,
    /// Patches having the vertex strictly inside one of their edges.
    pub long_side: Vec<usize>,
}

impl Vertex {
    /// Number of adjacent patches.
    pub fn valence(&self) -> usize {
        self.incidences.len()
    }

    pub fn incidence(&self, patch: usize) -> Option<&VertexIncidence> {
        self.incidences.iter().find(|i| i.patch == patch)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PatchMetrics {
    /// H_k, diameter of the sampled patch boundary.
    pub diameter: f64,
    pub h_hat: f64,
    pub h_hat_min: f64,
    /// h_k = ĥ_k H_k.
    pub h: f64,
    /// ĥ_k / ĥ_min,k.
    pub quasi_uniformity: f64,
}

/// Validated multi-patch domain. Immutable after construction.
#[derive(Debug, Clone)]
pub struct MultiPatchDomain {
    patches: Vec<Patch>,
    interfaces: Vec<Interface>,
    vertices: Vec<Vertex>,
    metrics: Vec<PatchMetrics>,
}

fn side_of_point(uv: [f64; 2]) -> Vec<Side> {
    let mut s = Vec::new();
    if uv[0] == 0.0 {
        s.push(Side::West);
    }
    if uv[0] == 1.0 {
        s.push(Side::East);
    }
    if uv[1] == 0.0 {
        s.push(Side::South);
    }
    if uv[1] == 1.0 {
        s.push(Side::North);
    }
    s
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

impl MultiPatchDomain {
    pub fn new(patches: Vec<Patch>, interfaces: Vec<Interface>) -> Result<Self> {
        if patches.is_empty() {
            return Err(Error::Config("domain has no patches".into()));
        }
        let p = patches[0].space.degree();
        for (k, patch) in patches.iter().enumerate() {
            if !(patch.alpha.is_finite() && patch.alpha > 0.0) {
                return Err(Error::Config(format!("patch {k}: alpha must be positive, got {}", patch.alpha)));
            }
            if patch.space.degree() != p {
                return Err(Error::Config(format!(
                    "patch {k} has degree {} but patch 0 has degree {p}; mixed degrees are not supported",
                    patch.space.degree()
                )));
            }
            check_jacobian(k, &patch.geometry)?;
        }
        for (id, itf) in interfaces.iter().enumerate() {
            check_interface_decl(id, itf, &patches)?;
        }
        check_disjoint(&interfaces, patches.len())?;

        let metrics = patches.iter().map(compute_metrics).collect::<Result<Vec<_>>>()?;
        let mut domain = Self {
            patches,
            interfaces,
            vertices: Vec::new(),
            metrics,
        };
        for id in 0..domain.interfaces.len() {
            domain.validate_interface(id, INTERFACE_SAMPLES, INTERFACE_TOL)?;
        }
        domain.vertices = domain.classify_vertices()?;
        Ok(domain)
    }

    pub fn patches(&self) -> &[Patch] {
        &self.patches
    }

    pub fn patch(&self, k: usize) -> &Patch {
        &self.patches[k]
    }

    pub fn num_patches(&self) -> usize {
        self.patches.len()
    }

    pub fn interfaces(&self) -> &[Interface] {
        &self.interfaces
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn metrics(&self) -> &[PatchMetrics] {
        &self.metrics
    }

    pub fn degree(&self) -> usize {
        self.patches[0].space.degree()
    }

    pub fn alphas(&self) -> Vec<f64> {
        self.patches.iter().map(|p| p.alpha).collect()
    }

    /// Total number of patch degrees of freedom.
    pub fn num_dofs(&self) -> usize {
        self.patches.iter().map(|p| p.space.dim()).sum()
    }

    /// Interfaces of patch `k`, oriented from `k`, in declaration order.
    pub fn views(&self, k: usize) -> Vec<InterfaceView> {
        self.interfaces
            .iter()
            .enumerate()
            .filter_map(|(i, itf)| itf.view_from(i, k))
            .collect()
    }

    /// Largest number of patches meeting at a vertex.
    pub fn max_valence(&self) -> usize {
        self.vertices.iter().map(Vertex::valence).max().unwrap_or(0)
    }

    /// max_k log(H_k / h_k).
    pub fn max_log_h_ratio(&self) -> f64 {
        self.metrics
            .iter()
            .map(|m| (m.diameter / m.h).ln())
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Same geometry and topology with every space refined `levels` times.
    pub fn refined(&self, levels: usize) -> Result<Self> {
        let patches = self
            .patches
            .iter()
            .map(|p| {
                Ok(Patch {
                    geometry: p.geometry.clone(),
                    alpha: p.alpha,
                    space: p.space.refined(levels)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(patches, self.interfaces.clone())
    }

    /// Same domain with new coefficients.
    pub fn with_alphas(&self, alphas: &[f64]) -> Result<Self> {
        if alphas.len() != self.patches.len() {
            return Err(Error::Config(format!(
                "{} coefficients given for {} patches",
                alphas.len(),
                self.patches.len()
            )));
        }
        let mut out = self.clone();
        for (p, &a) in out.patches.iter_mut().zip(alphas) {
            if !(a.is_finite() && a > 0.0) {
                return Err(Error::Config(format!("alpha must be positive, got {a}")));
            }
            p.alpha = a;
        }
        Ok(out)
    }

    /// Samples the interface on `n_samples` parameters and returns the
    /// largest distance between the two mapped sides.
    pub fn validate_interface(&self, id: usize, n_samples: usize, tol: f64) -> Result<f64> {
        let itf = self
            .interfaces
            .get(id)
            .ok_or_else(|| Error::Config(format!("unknown interface {id}")))?;
        let gk = &self.patches[itf.k].geometry;
        let gl = &self.patches[itf.l].geometry;
        let n = n_samples.max(2);
        let mut worst = (0.0, itf.range_k[0]);
        for i in 0..n {
            let t = itf.range_k[0] + (itf.range_k[1] - itf.range_k[0]) * i as f64 / (n - 1) as f64;
            let [u, v] = itf.side_k.point(t);
            let xk = gk.eval(u, v)?;
            let [u, v] = itf.side_l.point(itf.map_k_to_l(t).clamp(0.0, 1.0));
            let xl = gl.eval(u, v)?;
            let d = dist(xk, xl);
            if d > worst.0 {
                worst = (d, t);
            }
        }
        let limit = tol * self.metrics[itf.k].diameter;
        if worst.0 > limit {
            return Err(Error::InterfaceMismatch {
                interface: id,
                deviation: worst.0,
                parameter: worst.1,
                tolerance: limit,
            });
        }
        Ok(worst.0)
    }

    /// Clusters interface endpoints into vertices and classifies them.
    pub fn classify_vertices(&self) -> Result<Vec<Vertex>> {
        let max_h = self.metrics.iter().map(|m| m.diameter).fold(0.0, f64::max);
        let tol = VERTEX_TOL * max_h;

        // (cluster representative point, incidences)
        let mut clusters: Vec<([f64; 2], Vec<VertexIncidence>)> = Vec::new();
        for (id, itf) in self.interfaces.iter().enumerate() {
            for (patch, side, range) in [(itf.k, itf.side_k, itf.range_k), (itf.l, itf.side_l, itf.range_l)] {
                for t in range {
                    let uv = side.point(t);
                    let x = self.patches[patch].geometry.eval(uv[0], uv[1])?;
                    let c = match clusters.iter().position(|(p, _)| dist(*p, x) <= tol) {
                        Some(c) => c,
                        None => {
                            clusters.push((x, Vec::new()));
                            clusters.len() - 1
                        }
                    };
                    let incs = &mut clusters[c].1;
                    match incs.iter().find(|i| i.patch == patch) {
                        Some(prev) if prev.uv != uv => {
                            return Err(Error::Config(format!(
                                "interface {id}: patch {patch} meets vertex ({:.6}, {:.6}) at two parameter locations {:?} and {:?}",
                                x[0], x[1], prev.uv, uv
                            )));
                        }
                        Some(_) => {}
                        None => incs.push(VertexIncidence {
                            patch,
                            uv,
                            sides: side_of_point(uv),
                        }),
                    }
                }
            }
        }

        Ok(clusters
            .into_iter()
            .map(|(point, mut incidences)| {
                incidences.sort_by_key(|i| i.patch);
                let long_side: Vec<usize> = incidences.iter().filter(|i| !i.is_corner()).map(|i| i.patch).collect();
                let kind = if long_side.is_empty() {
                    VertexKind::Regular
                } else {
                    VertexKind::TJunction
                };
                Vertex {
                    point,
                    incidences,
                    kind,
                    long_side,
                }
            })
            .collect())
    }

    /// T-junctions lying on a knot of multiplicity ≥ p of a long-side edge,
    /// where only one function per side is positive at the junction.
    pub fn c0_t_junctions(&self) -> Vec<usize> {
        let p = self.degree();
        self.vertices
            .iter()
            .enumerate()
            .filter(|(_, v)| {
                v.incidences.iter().filter(|i| !i.is_corner()).any(|inc| {
                    let side = inc.sides[0];
                    let t = side.edge_param(inc.uv);
                    let kv = self.patches[inc.patch].space.edge_kv(side);
                    kv.knots().iter().filter(|&&x| x == t).count() >= p
                })
            })
            .map(|(i, _)| i)
            .collect()
    }
}

fn check_jacobian(k: usize, g: &GeometryMap) -> Result<()> {
    let n = JACOBIAN_SAMPLES;
    let mut dets = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            let (u, v) = (i as f64 / (n - 1) as f64, j as f64 / (n - 1) as f64);
            dets.push((u, v, g.jacobian(u, v)?.determinant()));
        }
    }
    let scale = dets.iter().map(|d| d.2.abs()).fold(0.0, f64::max);
    let sign = dets[0].2.signum();
    for &(u, v, det) in &dets {
        if det.abs() <= 1e-12 * scale || det.signum() != sign || scale == 0.0 {
            return Err(Error::SingularJacobian { patch: k, u, v, det });
        }
    }
    Ok(())
}

fn check_interface_decl(id: usize, itf: &Interface, patches: &[Patch]) -> Result<()> {
    let bad = |msg: String| Err(Error::Config(format!("interface {id}: {msg}")));
    if itf.k >= patches.len() || itf.l >= patches.len() {
        return bad(format!("patch index out of range ({}, {})", itf.k, itf.l));
    }
    if itf.k == itf.l {
        return bad("connects a patch to itself".into());
    }
    for (r, name) in [(itf.range_k, "range_k"), (itf.range_l, "range_l")] {
        if !(0.0 <= r[0] && r[0] < r[1] && r[1] <= 1.0) {
            return bad(format!("{name} {r:?} must satisfy 0 <= a < b <= 1"));
        }
    }
    if patches[itf.k].space.is_dirichlet(itf.side_k) || patches[itf.l].space.is_dirichlet(itf.side_l) {
        return bad("lies on a Dirichlet side".into());
    }
    Ok(())
}

fn check_disjoint(interfaces: &[Interface], n_patches: usize) -> Result<()> {
    for patch in 0..n_patches {
        for side in Side::ALL {
            let mut ranges: Vec<(f64, f64, usize)> = Vec::new();
            for (id, itf) in interfaces.iter().enumerate() {
                if itf.k == patch && itf.side_k == side {
                    ranges.push((itf.range_k[0], itf.range_k[1], id));
                }
                if itf.l == patch && itf.side_l == side {
                    ranges.push((itf.range_l[0], itf.range_l[1], id));
                }
            }
            ranges.sort_by(|a, b| a.0.total_cmp(&b.0));
            for w in ranges.windows(2) {
                if w[1].0 < w[0].1 - 1e-12 {
                    return Err(Error::Config(format!(
                        "interfaces {} and {} overlap on the {side} side of patch {patch}",
                        w[0].2, w[1].2
                    )));
                }
            }
        }
    }
    Ok(())
}

fn compute_metrics(patch: &Patch) -> Result<PatchMetrics> {
    let n = BOUNDARY_SAMPLES;
    let mut pts = Vec::with_capacity(4 * n);
    for side in Side::ALL {
        for i in 0..n {
            let [u, v] = side.point(i as f64 / (n - 1) as f64);
            pts.push(patch.geometry.eval(u, v)?);
        }
    }
    let mut diameter: f64 = 0.0;
    for (i, a) in pts.iter().enumerate() {
        for b in &pts[i + 1..] {
            diameter = diameter.max(dist(*a, *b));
        }
    }
    let h_hat = patch.space.h_hat();
    let h_hat_min = patch.space.h_hat_min();
    Ok(PatchMetrics {
        diameter,
        h_hat,
        h_hat_min,
        h: h_hat * diameter,
        quasi_uniformity: h_hat / h_hat_min,
    })
}
