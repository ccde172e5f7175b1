use serde::Serialize;

use super::PrimalGroup;
use crate::assembly::ExtendedLocalSystem;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DofClass {
    Interior,
    Dual,
    Primal,
}

/// Classification of the extended dofs of one block.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockPartition {
    pub class: Vec<DofClass>,
    pub interior: Vec<usize>,
    pub dual: Vec<usize>,
    /// Primal dofs, ordered by group index.
    pub primal: Vec<usize>,
    /// Group index of each entry of `primal`.
    pub primal_group: Vec<usize>,
}

impl BlockPartition {
    /// `R = I ∪ Δ`, interior first.
    pub fn remaining(&self) -> Vec<usize> {
        self.interior.iter().chain(&self.dual).copied().collect()
    }

    /// `Γ = Δ ∪ Π`, dual first.
    pub fn gamma(&self) -> Vec<usize> {
        self.dual.iter().chain(&self.primal).copied().collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DofPartition {
    pub blocks: Vec<BlockPartition>,
    pub n_primal: usize,
}

impl DofPartition {
    pub fn new(locals: &[ExtendedLocalSystem], groups: &[PrimalGroup]) -> Result<Self> {
        let mut blocks = Vec::with_capacity(locals.len());
        let mut primal_of: Vec<Vec<Option<usize>>> = locals.iter().map(|s| vec![None; s.dim()]).collect();
        for g in groups {
            for &(b, i) in &g.members {
                if let Some(other) = primal_of[b][i].replace(g.index) {
                    return Err(Error::Invariant(format!(
                        "dof {i} of block {b} belongs to primal groups {other} and {}",
                        g.index
                    )));
                }
            }
        }
        for (sys, prim) in locals.iter().zip(primal_of) {
            let mut trace = vec![false; sys.dim()];
            for li in &sys.interfaces {
                for &t in &li.trace {
                    trace[t] = true;
                }
            }
            let mut class = Vec::with_capacity(sys.dim());
            let (mut interior, mut dual, mut primal) = (Vec::new(), Vec::new(), Vec::new());
            for i in 0..sys.dim() {
                let c = if let Some(g) = prim[i] {
                    primal.push((g, i));
                    DofClass::Primal
                } else if trace[i] || sys.is_artificial(i) {
                    dual.push(i);
                    DofClass::Dual
                } else {
                    interior.push(i);
                    DofClass::Interior
                };
                class.push(c);
            }
            primal.sort_unstable();
            blocks.push(BlockPartition {
                class,
                interior,
                dual,
                primal_group: primal.iter().map(|p| p.0).collect(),
                primal: primal.iter().map(|p| p.1).collect(),
            });
        }
        Ok(Self {
            blocks,
            n_primal: groups.len(),
        })
    }
}
