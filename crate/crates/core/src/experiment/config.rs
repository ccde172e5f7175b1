use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bspline::{KnotVector, Side, TensorSplineSpace};
use crate::geometry::{GeometryMap, Interface, MultiPatchDomain, Patch};
use crate::{Error, Result};

/// Domain description read from JSON.
///
/// ```json
/// {
///   "name": "l-shape",
///   "patches": [
///     { "geometry": { "rectangle": [0, 0, 1, 1] }, "dirichlet": ["west", "south"] },
///     { "geometry": { "bilinear": [[1, 0], [2, 0], [1, 1], [2, 1.5]] }, "alpha": 10, "breaks_u": [0.5] }
///   ],
///   "interfaces": [
///     { "k": 0, "side_k": "east", "range_k": [0, 1], "l": 1, "side_l": "west", "range_l": [0, 1] }
///   ]
/// }
/// ```
///
/// The discretization degree and the number of uniform refinements are not
/// part of the file; they are supplied per run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    #[serde(default)]
    pub name: Option<String>,
    pub patches: Vec<PatchConfig>,
    #[serde(default)]
    pub interfaces: Vec<Interface>,
    /// Patches whose coefficient is varied in jump sweeps.
    #[serde(default)]
    pub jump_patches: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatchConfig {
    pub geometry: GeometryConfig,
    #[serde(default = "unit")]
    pub alpha: f64,
    /// Interior breakpoints of the unrefined space.
    #[serde(default)]
    pub breaks_u: Vec<f64>,
    #[serde(default)]
    pub breaks_v: Vec<f64>,
    #[serde(default)]
    pub dirichlet: Vec<Side>,
    /// Refinements applied on top of the per-run level.
    #[serde(default)]
    pub extra_levels: usize,
}

fn unit() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeometryConfig {
    /// `[x0, y0, x1, y1]`.
    Rectangle([f64; 4]),
    /// Corners `G(0,0), G(1,0), G(0,1), G(1,1)`.
    Bilinear([[f64; 2]; 4]),
    Spline(GeometryMap),
}

impl GeometryConfig {
    fn to_map(&self) -> Result<GeometryMap> {
        Ok(match self {
            GeometryConfig::Rectangle([x0, y0, x1, y1]) => {
                if !(x1 > x0 && y1 > y0) {
                    return Err(Error::Config(format!("degenerate rectangle [{x0}, {y0}, {x1}, {y1}]")));
                }
                GeometryMap::rectangle(*x0, *y0, *x1, *y1)
            }
            GeometryConfig::Bilinear(c) => GeometryMap::bilinear(*c),
            GeometryConfig::Spline(g) => GeometryMap::new(g.kv_u.clone(), g.kv_v.clone(), g.control_points.clone())?,
        })
    }
}

impl DomainConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: DomainConfig = serde_json::from_str(text).map_err(|e| Error::Config(format!("domain file: {e}")))?;
        if cfg.patches.is_empty() {
            return Err(Error::Config("domain file declares no patches".into()));
        }
        if let Some(&k) = cfg.jump_patches.iter().find(|&&k| k >= cfg.patches.len()) {
            return Err(Error::Config(format!("jump patch {k} does not exist")));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Domain with degree `p` after `r` uniform refinements.
    pub fn build(&self, p: usize, r: usize) -> Result<MultiPatchDomain> {
        if p == 0 {
            return Err(Error::Config("degree must be at least 1".into()));
        }
        let patches = self
            .patches
            .iter()
            .map(|pc| {
                let levels = r + pc.extra_levels;
                let ku = KnotVector::with_breakpoints(p, &pc.breaks_u)?.refine_uniform(levels);
                let kv = KnotVector::with_breakpoints(p, &pc.breaks_v)?.refine_uniform(levels);
                Ok(Patch {
                    geometry: pc.geometry.to_map()?,
                    alpha: pc.alpha,
                    space: TensorSplineSpace::new(ku, kv, &pc.dirichlet)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        MultiPatchDomain::new(patches, self.interfaces.clone())
    }
}
