use serde::{Deserialize, Serialize};

use super::KnotVector;
use crate::{Error, Result};

/// Edge of the parameter square. The edge parameter runs along `v` on
/// west/east and along `u` on south/north.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    West,
    East,
    South,
    North,
}

impl Side {
    pub const ALL: [Side; 4] = [Side::West, Side::East, Side::South, Side::North];

    /// Parameter point `(u, v)` at edge parameter `t`.
    pub fn point(self, t: f64) -> [f64; 2] {
        match self {
            Side::West => [0.0, t],
            Side::East => [1.0, t],
            Side::South => [t, 0.0],
            Side::North => [t, 1.0],
        }
    }

    /// Outward normal of the parameter square.
    pub fn reference_normal(self) -> [f64; 2] {
        match self {
            Side::West => [-1.0, 0.0],
            Side::East => [1.0, 0.0],
            Side::South => [0.0, -1.0],
            Side::North => [0.0, 1.0],
        }
    }

    /// Unit vector along the edge parameter.
    pub fn tangent(self) -> [f64; 2] {
        match self {
            Side::West | Side::East => [0.0, 1.0],
            Side::South | Side::North => [1.0, 0.0],
        }
    }

    /// Edge parameter of a point on this side.
    pub fn edge_param(self, uv: [f64; 2]) -> f64 {
        match self {
            Side::West | Side::East => uv[1],
            Side::South | Side::North => uv[0],
        }
    }

    fn bit(self) -> u8 {
        1 << (self as u8)
    }
}

impl std::fmt::Display for Side {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Side::West => "west",
            Side::East => "east",
            Side::South => "south",
            Side::North => "north",
        };
        f.write_str(s)
    }
}

/// Tensor-product spline space on the parameter square with homogeneous
/// Dirichlet conditions on a subset of sides.
///
/// Basis functions are indexed on the lattice `(i, j)`, `i` along `u`, with
/// lattice index `i + n_u * j`. Degrees of freedom are the lattice functions
/// that do not belong to a Dirichlet boundary layer, numbered in increasing
/// lattice order.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorSplineSpace {
    kv_u: KnotVector,
    kv_v: KnotVector,
    dirichlet: u8,
    dof_of_lattice: Vec<Option<usize>>,
    lattice_of_dof: Vec<usize>,
}

impl TensorSplineSpace {
    pub fn new(kv_u: KnotVector, kv_v: KnotVector, dirichlet: &[Side]) -> Result<Self> {
        if kv_u.degree() != kv_v.degree() {
            return Err(Error::Config(format!(
                "mixed degrees ({}, {}) within a patch are not supported",
                kv_u.degree(),
                kv_v.degree()
            )));
        }
        let mask = dirichlet.iter().fold(0u8, |m, s| m | s.bit());
        let (nu, nv) = (kv_u.len(), kv_v.len());
        let mut dof_of_lattice = vec![None; nu * nv];
        let mut lattice_of_dof = Vec::new();
        for j in 0..nv {
            for i in 0..nu {
                let constrained = (mask & Side::West.bit() != 0 && i == 0)
                    || (mask & Side::East.bit() != 0 && i == nu - 1)
                    || (mask & Side::South.bit() != 0 && j == 0)
                    || (mask & Side::North.bit() != 0 && j == nv - 1);
                if !constrained {
                    dof_of_lattice[i + nu * j] = Some(lattice_of_dof.len());
                    lattice_of_dof.push(i + nu * j);
                }
            }
        }
        Ok(Self {
            kv_u,
            kv_v,
            dirichlet: mask,
            dof_of_lattice,
            lattice_of_dof,
        })
    }

    pub fn kv_u(&self) -> &KnotVector {
        &self.kv_u
    }

    pub fn kv_v(&self) -> &KnotVector {
        &self.kv_v
    }

    pub fn degree(&self) -> usize {
        self.kv_u.degree()
    }

    pub fn n_u(&self) -> usize {
        self.kv_u.len()
    }

    pub fn n_v(&self) -> usize {
        self.kv_v.len()
    }

    pub fn is_dirichlet(&self, side: Side) -> bool {
        self.dirichlet & side.bit() != 0
    }

    pub fn dirichlet_sides(&self) -> Vec<Side> {
        Side::ALL.into_iter().filter(|&s| self.is_dirichlet(s)).collect()
    }

    /// Number of degrees of freedom (Dirichlet layers removed).
    pub fn dim(&self) -> usize {
        self.lattice_of_dof.len()
    }

    pub fn dof(&self, i: usize, j: usize) -> Option<usize> {
        self.dof_of_lattice[i + self.n_u() * j]
    }

    pub fn lattice(&self, dof: usize) -> (usize, usize) {
        let l = self.lattice_of_dof[dof];
        (l % self.n_u(), l / self.n_u())
    }

    /// Knot vector along the edge parameter of `side`.
    pub fn edge_kv(&self, side: Side) -> &KnotVector {
        match side {
            Side::West | Side::East => &self.kv_v,
            Side::South | Side::North => &self.kv_u,
        }
    }

    /// Lattice position of the boundary-layer function with edge index `e`.
    pub fn edge_lattice(&self, side: Side, e: usize) -> (usize, usize) {
        match side {
            Side::West => (0, e),
            Side::East => (self.n_u() - 1, e),
            Side::South => (e, 0),
            Side::North => (e, self.n_v() - 1),
        }
    }

    /// Degree of freedom of the boundary-layer function with edge index `e`,
    /// `None` if it is removed by a Dirichlet condition.
    pub fn edge_dof(&self, side: Side, e: usize) -> Option<usize> {
        let (i, j) = self.edge_lattice(side, e);
        self.dof(i, j)
    }

    pub fn refined(&self, levels: usize) -> Result<Self> {
        Self::new(
            self.kv_u.refine_uniform(levels),
            self.kv_v.refine_uniform(levels),
            &self.dirichlet_sides(),
        )
    }

    /// ĥ of the space: the largest knot span in either direction.
    pub fn h_hat(&self) -> f64 {
        self.kv_u.max_span().max(self.kv_v.max_span())
    }

    pub fn h_hat_min(&self) -> f64 {
        self.kv_u.min_span().min(self.kv_v.min_span())
    }
}
