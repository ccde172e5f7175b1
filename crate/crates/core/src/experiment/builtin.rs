use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::bspline::{KnotVector, Side, TensorSplineSpace};
use crate::geometry::{GeometryMap, Interface, MultiPatchDomain, Patch};
use crate::{Error, Result};

/// Built-in domain families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Builtin {
    /// `n × n` conforming unit squares.
    Grid(usize),
    /// Five patches on `[0,3] × [0,2]`: a 2×1 patch on top of two unit
    /// squares (one T-junction at (1,1)), and a column of two unit squares
    /// on the right (a regular four-patch vertex at (2,1)).
    TDomain,
    /// `m` unit squares below `m` patches whose vertical edges are shifted
    /// by `s`, giving `2(m-1)` T-junctions.
    Slider(usize, f64),
    /// Two unit squares side by side; the right one is refined once more.
    TwoPatch,
}

impl Builtin {
    /// Parses a generator name followed by its arguments.
    pub fn parse(name: &str, args: &[String]) -> Result<Self> {
        let num = |i: usize, what: &str| -> Result<&String> {
            args.get(i).ok_or_else(|| Error::Config(format!("builtin {name} needs argument {what}")))
        };
        let bad = |s: &str| Error::Config(format!("invalid argument '{s}' for builtin {name}"));
        let b = match name {
            "grid" => {
                let s = num(0, "N")?;
                let n = s.trim_end_matches(|c| c == 'x' || c == 'X');
                let n = n.split(['x', 'X']).next().unwrap_or(n);
                Builtin::Grid(n.parse().map_err(|_| bad(s))?)
            }
            "tdomain" => Builtin::TDomain,
            "slider" => {
                let m = num(0, "m")?;
                let s = num(1, "s")?;
                Builtin::Slider(m.parse().map_err(|_| bad(m))?, s.parse().map_err(|_| bad(s))?)
            }
            "twopatch" => Builtin::TwoPatch,
            _ => return Err(Error::Config(format!("unknown builtin domain '{name}'"))),
        };
        b.validate()?;
        Ok(b)
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Builtin::Grid(n) if n == 0 => Err(Error::Config("grid needs N >= 1".into())),
            Builtin::Slider(m, _) if m < 2 => Err(Error::Config("slider needs m >= 2".into())),
            Builtin::Slider(_, s) if !(s > 0.0 && s < 1.0) => {
                Err(Error::Config(format!("slider offset {s} outside (0, 1)")))
            }
            _ => Ok(()),
        }
    }

    /// Patches carrying the varied coefficient in jump sweeps.
    pub fn jump_patches(&self) -> Vec<usize> {
        match *self {
            Builtin::Grid(n) => (0..n * n).filter(|k| (k / n + k % n) % 2 == 1).collect(),
            Builtin::TDomain => vec![0, 4],
            Builtin::Slider(m, _) => (m..2 * m).collect(),
            Builtin::TwoPatch => vec![1],
        }
    }

    /// Domain with degree `p` after `r` uniform refinements.
    pub fn build(&self, p: usize, r: usize) -> Result<MultiPatchDomain> {
        self.validate()?;
        if p == 0 {
            return Err(Error::Config("degree must be at least 1".into()));
        }
        match *self {
            Builtin::Grid(n) => grid(n, p, r),
            Builtin::TDomain => tdomain(p, r),
            Builtin::Slider(m, s) => slider(m, s, p, r),
            Builtin::TwoPatch => two_patch(p, r),
        }
    }
}

impl fmt::Display for Builtin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Builtin::Grid(n) => write!(f, "grid{n}x{n}"),
            Builtin::TDomain => write!(f, "tdomain"),
            Builtin::Slider(m, s) => write!(f, "slider{m}_{s}"),
            Builtin::TwoPatch => write!(f, "twopatch"),
        }
    }
}

impl FromStr for Builtin {
    type Err = Error;

    /// Accepts `name` or `name:arg:arg`.
    fn from_str(s: &str) -> Result<Self> {
        let mut it = s.split(':');
        let name = it.next().unwrap_or_default();
        let args: Vec<String> = it.map(str::to_string).collect();
        Builtin::parse(name, &args)
    }
}

struct Rect {
    x: [f64; 2],
    y: [f64; 2],
    dirichlet: Vec<Side>,
    /// Interior breakpoints of the base space in `u`.
    u_breaks: Vec<f64>,
    extra_levels: usize,
}

fn rect(x: [f64; 2], y: [f64; 2], dirichlet: &[Side]) -> Rect {
    Rect {
        x,
        y,
        dirichlet: dirichlet.to_vec(),
        u_breaks: Vec::new(),
        extra_levels: 0,
    }
}

fn build(rects: Vec<Rect>, interfaces: Vec<Interface>, p: usize, r: usize) -> Result<MultiPatchDomain> {
    let patches = rects
        .into_iter()
        .map(|rc| {
            let levels = r + rc.extra_levels;
            let ku = KnotVector::with_breakpoints(p, &rc.u_breaks)?.refine_uniform(levels);
            let kv = KnotVector::uniform(p, 1)?.refine_uniform(levels);
            Ok(Patch {
                geometry: GeometryMap::rectangle(rc.x[0], rc.y[0], rc.x[1], rc.y[1]),
                alpha: 1.0,
                space: TensorSplineSpace::new(ku, kv, &rc.dirichlet)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    MultiPatchDomain::new(patches, interfaces)
}

fn full(k: usize, side_k: Side, l: usize, side_l: Side) -> Interface {
    partial(k, side_k, [0.0, 1.0], l, side_l, [0.0, 1.0])
}

fn partial(k: usize, side_k: Side, range_k: [f64; 2], l: usize, side_l: Side, range_l: [f64; 2]) -> Interface {
    Interface {
        k,
        side_k,
        range_k,
        l,
        side_l,
        range_l,
        reversed: false,
    }
}

fn grid(n: usize, p: usize, r: usize) -> Result<MultiPatchDomain> {
    let id = |i: usize, j: usize| i + n * j;
    let mut rects = Vec::new();
    for j in 0..n {
        for i in 0..n {
            let mut d = Vec::new();
            if i == 0 {
                d.push(Side::West);
            }
            if i == n - 1 {
                d.push(Side::East);
            }
            if j == 0 {
                d.push(Side::South);
            }
            if j == n - 1 {
                d.push(Side::North);
            }
            rects.push(rect([i as f64, i as f64 + 1.0], [j as f64, j as f64 + 1.0], &d));
        }
    }
    let mut itfs = Vec::new();
    for j in 0..n {
        for i in 0..n {
            if i + 1 < n {
                itfs.push(full(id(i, j), Side::East, id(i + 1, j), Side::West));
            }
            if j + 1 < n {
                itfs.push(full(id(i, j), Side::North, id(i, j + 1), Side::South));
            }
        }
    }
    build(rects, itfs, p, r)
}

fn tdomain(p: usize, r: usize) -> Result<MultiPatchDomain> {
    use Side::*;
    let mut top = rect([0.0, 2.0], [1.0, 2.0], &[West, North]);
    top.u_breaks = vec![0.5];
    let rects = vec![
        top,
        rect([0.0, 1.0], [0.0, 1.0], &[West, South]),
        rect([1.0, 2.0], [0.0, 1.0], &[South]),
        rect([2.0, 3.0], [1.0, 2.0], &[North, East]),
        rect([2.0, 3.0], [0.0, 1.0], &[South, East]),
    ];
    let itfs = vec![
        partial(0, South, [0.0, 0.5], 1, North, [0.0, 1.0]),
        partial(0, South, [0.5, 1.0], 2, North, [0.0, 1.0]),
        full(1, East, 2, West),
        full(0, East, 3, West),
        full(2, East, 4, West),
        full(4, North, 3, South),
    ];
    build(rects, itfs, p, r)
}

fn slider(m: usize, s: f64, p: usize, r: usize) -> Result<MultiPatchDomain> {
    use Side::*;
    let mf = m as f64;
    let mut rects = Vec::new();
    for i in 0..m {
        let mut d = vec![South];
        if i == 0 {
            d.push(West);
        }
        if i == m - 1 {
            d.push(East);
        }
        rects.push(rect([i as f64, i as f64 + 1.0], [0.0, 1.0], &d));
    }
    // top row edges at 0, 1+s, 2+s, …, m-1+s, m
    let mut xs = vec![0.0];
    xs.extend((1..m).map(|j| j as f64 + s));
    xs.push(mf);
    for j in 0..m {
        let mut d = vec![North];
        if j == 0 {
            d.push(West);
        }
        if j == m - 1 {
            d.push(East);
        }
        rects.push(rect([xs[j], xs[j + 1]], [1.0, 2.0], &d));
    }
    let mut itfs = Vec::new();
    for i in 0..m - 1 {
        itfs.push(full(i, East, i + 1, West));
        itfs.push(full(m + i, East, m + i + 1, West));
    }
    for j in 0..m {
        let (t0, t1) = (xs[j], xs[j + 1]);
        for i in 0..m {
            let (b0, b1) = (i as f64, i as f64 + 1.0);
            let (a, b) = (t0.max(b0), t1.min(b1));
            if b - a > 1e-12 {
                itfs.push(partial(
                    i,
                    North,
                    [a - b0, b - b0],
                    m + j,
                    South,
                    [(a - t0) / (t1 - t0), (b - t0) / (t1 - t0)],
                ));
            }
        }
    }
    build(rects, itfs, p, r)
}

fn two_patch(p: usize, r: usize) -> Result<MultiPatchDomain> {
    use Side::*;
    let left = rect([0.0, 1.0], [0.0, 1.0], &[West, South, North]);
    let mut right = rect([1.0, 2.0], [0.0, 1.0], &[East, South, North]);
    right.extra_levels = 1;
    build(vec![left, right], vec![full(0, East, 1, West)], p, r)
}
