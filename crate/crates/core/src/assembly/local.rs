use std::collections::HashMap;

use super::forms::{interface_terms, volume_terms, DofRef, Problem};
use crate::bspline::{Side, TensorSplineSpace};
use crate::geometry::{InterfaceView, MultiPatchDomain};
use crate::linalg::{CsrMatrix, TripletBuilder};
use crate::{Error, Result};

/// Edge indices (positions along the edge knot vector) of the boundary
/// layer functions on `side` whose trace does not vanish on `range`.
pub fn trace_basis_on_edge(space: &TensorSplineSpace, side: Side, range: [f64; 2]) -> Result<Vec<usize>> {
    let idx = space.edge_kv(side).active_on_interval(range[0], range[1])?;
    if idx.is_empty() {
        return Err(Error::Config(format!("no basis function active on {side} range {range:?}")));
    }
    Ok(idx)
}

/// Traces of the neighbor's basis functions active on the interface, used
/// as the basis of one artificial interface space.
#[derive(Debug, Clone, PartialEq)]
pub struct ArtificialInterfaceBasis {
    pub owner: usize,
    pub neighbor: usize,
    pub interface: usize,
    /// Position of the first artificial dof in the extended space.
    pub offset: usize,
    /// Edge indices on the neighbor's edge, one per artificial dof.
    pub edge_indices: Vec<usize>,
    /// Copy map: neighbor patch dof for each artificial dof.
    pub source_dofs: Vec<usize>,
}

impl ArtificialInterfaceBasis {
    pub fn len(&self) -> usize {
        self.source_dofs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.source_dofs.is_empty()
    }

    /// Whether extended index `i` belongs to this block.
    pub fn contains(&self, i: usize) -> bool {
        (self.offset..self.offset + self.len()).contains(&i)
    }

    /// Extended-space index of the copy of neighbor dof `src`.
    pub fn local_of_source(&self, src: usize) -> Option<usize> {
        self.source_dofs.iter().position(|&s| s == src).map(|j| self.offset + j)
    }
}

/// One interface of a patch together with the patch's own trace dofs on it
/// and the artificial basis of the neighbor.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalInterface {
    pub view: InterfaceView,
    /// Own patch dofs whose trace is active on the interface, in edge order.
    pub trace: Vec<usize>,
    pub artificial: ArtificialInterfaceBasis,
}

/// `A^(k)` and `f_e^(k)` on `V_e^(k)`. Patch dofs come first, followed by
/// one block of artificial dofs per interface of `k` in declaration order.
#[derive(Debug, Clone)]
pub struct ExtendedLocalSystem {
    pub patch: usize,
    pub n_patch: usize,
    pub interfaces: Vec<LocalInterface>,
    pub matrix: CsrMatrix,
    pub load: Vec<f64>,
}

impl ExtendedLocalSystem {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// For every artificial dof: (extended index, neighbor patch, neighbor dof).
    pub fn copy_map(&self) -> Vec<(usize, usize, usize)> {
        self.interfaces
            .iter()
            .flat_map(|li| {
                let a = &li.artificial;
                a.source_dofs
                    .iter()
                    .enumerate()
                    .map(move |(j, &s)| (a.offset + j, a.neighbor, s))
            })
            .collect()
    }

    pub fn is_artificial(&self, i: usize) -> bool {
        i >= self.n_patch
    }
}

/// Trace dofs of `space` on `side` over `range`, Dirichlet functions removed.
fn trace_dofs(space: &TensorSplineSpace, side: Side, range: [f64; 2]) -> Result<(Vec<usize>, Vec<usize>)> {
    let mut edges = Vec::new();
    let mut dofs = Vec::new();
    for e in trace_basis_on_edge(space, side, range)? {
        if let Some(d) = space.edge_dof(side, e) {
            edges.push(e);
            dofs.push(d);
        }
    }
    Ok((edges, dofs))
}

pub(crate) fn local_interfaces(domain: &MultiPatchDomain, k: usize) -> Result<Vec<LocalInterface>> {
    let mut offset = domain.patch(k).space.dim();
    let mut out = Vec::new();
    for view in domain.views(k) {
        let (_, trace) = trace_dofs(&domain.patch(k).space, view.this_side, view.this_range)?;
        let (edge_indices, source_dofs) =
            trace_dofs(&domain.patch(view.other).space, view.other_side, view.other_range)?;
        let artificial = ArtificialInterfaceBasis {
            owner: k,
            neighbor: view.other,
            interface: view.index,
            offset,
            edge_indices,
            source_dofs,
        };
        offset += artificial.len();
        out.push(LocalInterface { view, trace, artificial });
    }
    Ok(out)
}

pub fn build_local_system(domain: &MultiPatchDomain, k: usize, problem: &Problem) -> Result<ExtendedLocalSystem> {
    let patch = domain.patch(k);
    let interfaces = local_interfaces(domain, k)?;
    let n_patch = patch.space.dim();
    let dim = n_patch + interfaces.iter().map(|li| li.artificial.len()).sum::<usize>();

    let (vol, vol_load) = volume_terms(k, patch, problem)?;
    let mut tb = TripletBuilder::square(dim);
    tb.extend(vol);
    for li in &interfaces {
        let map: HashMap<usize, usize> = li
            .artificial
            .source_dofs
            .iter()
            .enumerate()
            .map(|(j, &s)| (s, li.artificial.offset + j))
            .collect();
        let idx = |r: DofRef| -> Result<usize> {
            match r {
                DofRef::Own(i) => Ok(i),
                DofRef::Neighbor(j) => map.get(&j).copied().ok_or_else(|| {
                    Error::Invariant(format!("neighbor dof {j} of patch {} missing from artificial basis", li.view.other))
                }),
            }
        };
        for (r, c, v) in interface_terms(domain, &li.view, problem.delta, true)? {
            tb.push(idx(r)?, idx(c)?, v);
        }
    }
    let mut load = vol_load;
    load.resize(dim, 0.0);
    Ok(ExtendedLocalSystem {
        patch: k,
        n_patch,
        interfaces,
        matrix: tb.build(),
        load,
    })
}
