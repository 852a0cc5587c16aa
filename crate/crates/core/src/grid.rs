//! Midpoint quadrature grids on subtrees, oriented away from a chosen root.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::tree::{RootedTree, Subtree, TreePoint, SNAP};
use crate::weights::StepWeight;
use crate::{Error, Result};

/// Breakpoints closer than this are merged.
const MERGE_TOL: f64 = 1e-11;

/// Total number of quadrature cells used to discretize one subtree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Resolution {
    cells: usize,
}

impl Resolution {
    pub fn new(cells: usize) -> Result<Self> {
        if cells < 2 {
            return Err(Error::Domain(format!("resolution {cells} is below the minimum of 2 cells")));
        }
        Ok(Self { cells })
    }

    pub fn cells(&self) -> usize {
        self.cells
    }
}

impl Default for Resolution {
    fn default() -> Self {
        Self { cells: 512 }
    }
}

/// One quadrature cell: the root-oriented piece `[lo, hi]` of `edge`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub edge: usize,
    pub lo: f64,
    pub hi: f64,
    /// `true` when the end nearer the grid root is `lo`.
    pub near_is_lo: bool,
    pub q: f64,
    pub u: f64,
    pub v: f64,
    /// The adjacent cell on the way to the grid root.
    pub parent: Option<usize>,
}

impl Cell {
    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }
}

/// Cells of a subtree in breadth-first order from the grid root (parents first).
#[derive(Debug, Clone)]
pub struct Grid {
    cells: Vec<Cell>,
    root: TreePoint,
}

struct RawCell {
    edge: usize,
    lo: f64,
    hi: f64,
    a: usize,
    b: usize,
    u: f64,
    v: f64,
}

impl Grid {
    /// Discretizes `k` with cells aligned to edge ends, weight jumps, `root` and `extra`.
    pub fn build(
        t: &RootedTree,
        u: &StepWeight,
        v: &StepWeight,
        k: &Subtree,
        root: TreePoint,
        res: Resolution,
        extra: &[TreePoint],
    ) -> Result<Self> {
        if !k.contains(t, root) {
            return Err(Error::InvalidLocation("grid root lies outside the subtree".into()));
        }
        if k.is_degenerate() {
            return Ok(Self { cells: Vec::new(), root });
        }
        let total = k.length();
        let nv = t.tree().vertex_count();
        let mut next_node = nv;
        let mut raw: Vec<RawCell> = Vec::new();
        let mut root_node = None;
        let root_vertex = match root.edge {
            None => Some(t.root()),
            Some(e) if root.down >= t.len(e) - SNAP => Some(t.child_vertex(e)),
            _ => None,
        };
        for s in k.segs() {
            let len = t.len(s.edge);
            let up = u.down_pieces(t, s.edge);
            let vp = v.down_pieces(t, s.edge);
            let mut bps = vec![s.lo, s.hi];
            bps.extend(up.iter().map(|p| p.0));
            bps.extend(vp.iter().map(|p| p.0));
            let on_edge = |p: &TreePoint| p.edge == Some(s.edge);
            bps.extend(extra.iter().filter(|p| on_edge(p)).map(|p| p.down));
            if on_edge(&root) {
                bps.push(root.down);
            }
            bps.retain(|&x| x >= s.lo - MERGE_TOL && x <= s.hi + MERGE_TOL);
            bps.sort_by(f64::total_cmp);
            bps.dedup_by(|a, b| (*a - *b).abs() <= MERGE_TOL);
            if let Some(last) = bps.last_mut() {
                *last = s.hi;
            }
            bps[0] = s.lo;
            let node_at = |x: f64, next: &mut usize| -> usize {
                if x <= SNAP {
                    t.parent_vertex(s.edge)
                } else if x >= len - SNAP {
                    t.child_vertex(s.edge)
                } else {
                    *next += 1;
                    *next - 1
                }
            };
            let mut nodes = Vec::with_capacity(bps.len());
            for &x in &bps {
                nodes.push(node_at(x, &mut next_node));
            }
            if root_vertex.is_none() && on_edge(&root) {
                let (i, _) = bps
                    .iter()
                    .enumerate()
                    .map(|(i, &x)| (i, (x - root.down).abs()))
                    .min_by(|a, b| a.1.total_cmp(&b.1))
                    .unwrap_or((0, 0.0));
                root_node = Some(nodes[i]);
            }
            for w in 0..bps.len() - 1 {
                let (a, b) = (bps[w], bps[w + 1]);
                let plen = b - a;
                if plen <= 0.0 {
                    continue;
                }
                let m = 0.5 * (a + b);
                let val = |ps: &[(f64, f64, f64)]| {
                    ps.iter().find(|p| m < p.1).or(ps.last()).map(|p| p.2).unwrap_or(0.0)
                };
                let (uval, vval) = (val(&up), val(&vp));
                let n = ((res.cells() as f64) * plen / total).round().max(2.0) as usize;
                let h = plen / n as f64;
                let mut prev = nodes[w];
                for j in 0..n {
                    let lo = a + h * j as f64;
                    let hi = if j + 1 == n { b } else { a + h * (j + 1) as f64 };
                    let node = if j + 1 == n {
                        nodes[w + 1]
                    } else {
                        next_node += 1;
                        next_node - 1
                    };
                    raw.push(RawCell { edge: s.edge, lo, hi, a: prev, b: node, u: uval, v: vval });
                    prev = node;
                }
            }
        }
        let root_node = root_vertex.or(root_node).ok_or_else(|| {
            Error::InvalidLocation("grid root is not a breakpoint of the subtree".into())
        })?;
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); next_node];
        for (i, c) in raw.iter().enumerate() {
            adj[c.a].push(i);
            adj[c.b].push(i);
        }
        let mut reached_by: Vec<Option<usize>> = vec![None; next_node];
        let mut seen_node = vec![false; next_node];
        let mut new_index = vec![usize::MAX; raw.len()];
        let mut cells = Vec::with_capacity(raw.len());
        let mut queue = vec![root_node];
        seen_node[root_node] = true;
        let mut head = 0;
        while head < queue.len() {
            let node = queue[head];
            head += 1;
            for &ci in &adj[node] {
                if new_index[ci] != usize::MAX {
                    continue;
                }
                let c = &raw[ci];
                let far = if c.a == node { c.b } else { c.a };
                new_index[ci] = cells.len();
                cells.push(Cell {
                    edge: c.edge,
                    lo: c.lo,
                    hi: c.hi,
                    near_is_lo: c.a == node,
                    q: c.hi - c.lo,
                    u: c.u,
                    v: c.v,
                    parent: reached_by[node],
                });
                if !seen_node[far] {
                    seen_node[far] = true;
                    reached_by[far] = Some(cells.len() - 1);
                    queue.push(far);
                }
            }
        }
        if cells.len() != raw.len() {
            return Err(Error::InvalidSubtree("subtree is not connected".into()));
        }
        Ok(Self { cells, root })
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn root(&self) -> TreePoint {
        self.root
    }

    pub fn weights(&self) -> Vec<f64> {
        self.cells.iter().map(|c| c.q).collect()
    }

    /// Cells whose midpoints lie in `part`.
    pub fn cells_in(&self, t: &RootedTree, part: &Subtree) -> Vec<usize> {
        let _ = t;
        (0..self.len())
            .filter(|&i| {
                let c = &self.cells[i];
                part.seg_on(c.edge).map(|s| c.mid() > s.lo && c.mid() < s.hi).unwrap_or(false)
            })
            .collect()
    }

    /// Index of the cell containing `p` in its closure, preferring the one farther from the root.
    pub fn cell_at(&self, p: TreePoint) -> Option<usize> {
        let e = p.edge?;
        self.cells
            .iter()
            .enumerate()
            .filter(|(_, c)| c.edge == e && p.down >= c.lo - SNAP && p.down <= c.hi + SNAP)
            .max_by_key(|(i, _)| *i)
            .map(|(i, _)| i)
    }

    /// Cells lying on the path from the grid root to the far end of cell `c` (inclusive).
    pub fn ancestors_inclusive(&self, c: usize) -> Vec<usize> {
        let mut out = vec![c];
        let mut cur = self.cells[c].parent;
        while let Some(p) = cur {
            out.push(p);
            cur = self.cells[p].parent;
        }
        out
    }

    /// Cells on the path from the grid root to `b`, which must be a cell end.
    pub fn path_to(&self, t: &RootedTree, b: TreePoint) -> Vec<usize> {
        if b.same(&self.root) {
            return Vec::new();
        }
        let hit = self.cells.iter().position(|c| {
            let far = if c.near_is_lo { c.hi } else { c.lo };
            t.point_on(c.edge, far).same(&b)
        });
        hit.map(|c| self.ancestors_inclusive(c)).unwrap_or_default()
    }
}
