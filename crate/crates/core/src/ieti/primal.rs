use std::collections::BTreeMap;

use serde::Serialize;

use crate::assembly::ExtendedLocalSystem;
use crate::geometry::MultiPatchDomain;
use crate::Result;

/// One primal dof: a basis function nonzero at a vertex, identified across
/// its trace in the source patch and all of its artificial copies.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PrimalGroup {
    pub index: usize,
    pub vertices: Vec<usize>,
    pub source_patch: usize,
    pub source_dof: usize,
    /// Parameter location of the first vertex in the source patch.
    pub uv: [f64; 2],
    /// `(block, extended index)` of every member; the source trace first.
    pub members: Vec<(usize, usize)>,
}

/// Collects the fat-vertex primal groups. Groups are ordered by first
/// appearance (vertex order, then patch order at the vertex, then lattice
/// order), and a function nonzero at several vertices forms one group.
pub fn select_primal(domain: &MultiPatchDomain, locals: &[ExtendedLocalSystem]) -> Result<Vec<PrimalGroup>> {
    let mut order: Vec<(usize, usize)> = Vec::new();
    let mut found: BTreeMap<(usize, usize), (Vec<usize>, [f64; 2])> = BTreeMap::new();
    for (vi, vertex) in domain.vertices().iter().enumerate() {
        for inc in &vertex.incidences {
            let space = &domain.patch(inc.patch).space;
            let nu = space.kv_u().nonzero_at_point(inc.uv[0])?;
            let nv = space.kv_v().nonzero_at_point(inc.uv[1])?;
            for &j in &nv {
                for &i in &nu {
                    let Some(dof) = space.dof(i, j) else {
                        log::debug!(
                            "vertex {vi}: function ({i}, {j}) of patch {} is Dirichlet-constrained, not primal",
                            inc.patch
                        );
                        continue;
                    };
                    let key = (inc.patch, dof);
                    match found.get_mut(&key) {
                        Some((vs, _)) => {
                            if !vs.contains(&vi) {
                                vs.push(vi);
                            }
                        }
                        None => {
                            found.insert(key, (vec![vi], inc.uv));
                            order.push(key);
                        }
                    }
                }
            }
        }
    }

    Ok(order
        .into_iter()
        .enumerate()
        .map(|(index, (patch, dof))| {
            let (vertices, uv) = found.remove(&(patch, dof)).expect("recorded group");
            let mut members = vec![(patch, dof)];
            for sys in locals {
                if sys.patch == patch {
                    continue;
                }
                for li in &sys.interfaces {
                    if li.artificial.neighbor == patch {
                        if let Some(j) = li.artificial.local_of_source(dof) {
                            members.push((sys.patch, j));
                        }
                    }
                }
            }
            PrimalGroup {
                index,
                vertices,
                source_patch: patch,
                source_dof: dof,
                uv,
                members,
            }
        })
        .collect())
}
