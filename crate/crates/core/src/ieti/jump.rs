use super::{DofClass, DofPartition};
use crate::assembly::ExtendedLocalSystem;
use crate::geometry::MultiPatchDomain;
use crate::linalg::CsrMatrix;
use crate::{Error, Result};

/// One continuity constraint: `u[plus] - u[minus] = 0`, each side given as
/// `(block, extended index)`. `plus` is a trace dof, `minus` its copy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct JumpRow {
    pub interface: usize,
    pub plus: (usize, usize),
    pub minus: (usize, usize),
}

/// Jump operator split by block, with the coefficient scaling.
#[derive(Debug, Clone)]
pub struct JumpMatrices {
    pub rows: Vec<JumpRow>,
    /// `B^(k)`: rows × extended dofs of block `k`. Only dual columns are
    /// nonzero, so the same matrix represents `B̃` and `B_Γ`.
    pub blocks: Vec<CsrMatrix>,
    /// Diagonal of `D` per block over the extended dofs; zero on interior dofs.
    pub scaling: Vec<Vec<f64>>,
}

impl JumpMatrices {
    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }
}

/// Rows for every interface in declaration order, first the traces of `k`
/// against their copies in `l`, then the reverse direction.
pub fn build_jump_matrices(
    domain: &MultiPatchDomain,
    locals: &[ExtendedLocalSystem],
    partition: &DofPartition,
) -> Result<JumpMatrices> {
    let find = |block: usize, id: usize| {
        locals[block]
            .interfaces
            .iter()
            .find(|li| li.view.index == id)
            .ok_or_else(|| Error::Invariant(format!("block {block} lacks interface {id}")))
    };
    let class = |b: usize, i: usize| partition.blocks[b].class[i];
    let alphas = domain.alphas();

    let mut rows = Vec::new();
    let mut scaling: Vec<Vec<f64>> = locals.iter().map(|s| vec![0.0; s.dim()]).collect();
    for (id, itf) in domain.interfaces().iter().enumerate() {
        for (a, b) in [(itf.k, itf.l), (itf.l, itf.k)] {
            let la = find(a, id)?;
            let lb = find(b, id)?;
            let d_a = (alphas[a] + alphas[b]) / alphas[b];
            let d_b = (alphas[a] + alphas[b]) / alphas[a];
            for &i in &la.trace {
                let j = lb.artificial.local_of_source(i).ok_or_else(|| {
                    Error::Invariant(format!("trace dof {i} of patch {a} has no copy in block {b} (interface {id})"))
                })?;
                match (class(a, i), class(b, j)) {
                    (DofClass::Primal, DofClass::Primal) => continue,
                    (DofClass::Dual, DofClass::Dual) => {}
                    (ca, cb) => {
                        return Err(Error::Invariant(format!(
                            "interface {id}: dof {i} of block {a} is {ca:?} but its copy {j} in block {b} is {cb:?}"
                        )))
                    }
                }
                rows.push(JumpRow {
                    interface: id,
                    plus: (a, i),
                    minus: (b, j),
                });
                scaling[a][i] = d_a;
                scaling[b][j] = d_b;
            }
        }
    }

    // every dual dof must be used by exactly one row
    let mut uses: Vec<Vec<u32>> = locals.iter().map(|s| vec![0; s.dim()]).collect();
    for r in &rows {
        uses[r.plus.0][r.plus.1] += 1;
        uses[r.minus.0][r.minus.1] += 1;
    }
    for (b, part) in partition.blocks.iter().enumerate() {
        for &i in &part.dual {
            if uses[b][i] != 1 {
                return Err(Error::Invariant(format!(
                    "dual dof {i} of block {b} appears in {} constraints",
                    uses[b][i]
                )));
            }
        }
    }

    // primal columns: scaling taken from the lowest-index neighbor
    for (b, sys) in locals.iter().enumerate() {
        for &i in &partition.blocks[b].primal {
            let neighbor = sys
                .interfaces
                .iter()
                .filter(|li| li.trace.contains(&i) || li.artificial.contains(i))
                .map(|li| li.view.other)
                .min();
            if let Some(l) = neighbor {
                scaling[b][i] = (alphas[b] + alphas[l]) / alphas[l];
            }
        }
    }

    let m = rows.len();
    let mut trip: Vec<Vec<(usize, usize, f64)>> = vec![Vec::new(); locals.len()];
    for (r, row) in rows.iter().enumerate() {
        trip[row.plus.0].push((r, row.plus.1, 1.0));
        trip[row.minus.0].push((r, row.minus.1, -1.0));
    }
    let blocks = trip
        .into_iter()
        .zip(locals)
        .map(|(t, s)| CsrMatrix::from_triplets(m, s.dim(), t))
        .collect();
    Ok(JumpMatrices { rows, blocks, scaling })
}
