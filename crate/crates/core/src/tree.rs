//! Rooted metric trees, points on them, subtrees and partitions.

use alloc::format;
use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::weights::StepWeight;
use crate::{Error, Result};

/// Offsets closer than this to an edge end are snapped onto the vertex.
pub const SNAP: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub id: u64,
    pub from: usize,
    pub to: usize,
    pub length: f64,
}

/// A finite metric tree: vertices joined by segments of positive length.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricTree {
    vertex_ids: Vec<u64>,
    edges: Vec<Edge>,
    incident: Vec<Vec<usize>>,
}

impl MetricTree {
    /// `edges` refer to vertices by index into `vertex_ids`.
    pub fn new(vertex_ids: Vec<u64>, edges: Vec<Edge>) -> Result<Self> {
        let n = vertex_ids.len();
        if n == 0 {
            return Err(Error::InvalidTree("no vertices".into()));
        }
        let mut sorted = vertex_ids.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidTree("duplicate vertex id".into()));
        }
        if edges.len() + 1 != n {
            return Err(Error::InvalidTree(format!(
                "{} vertices need {} edges, got {}",
                n,
                n - 1,
                edges.len()
            )));
        }
        let mut incident = vec![Vec::new(); n];
        for (i, e) in edges.iter().enumerate() {
            if e.from >= n || e.to >= n {
                return Err(Error::InvalidTree(format!("edge {} has an unknown endpoint", e.id)));
            }
            if e.from == e.to {
                return Err(Error::InvalidTree(format!("edge {} is a loop", e.id)));
            }
            if !(e.length.is_finite() && e.length > 0.0) {
                return Err(Error::InvalidTree(format!(
                    "edge {} has non-positive or non-finite length {}",
                    e.id, e.length
                )));
            }
            incident[e.from].push(i);
            incident[e.to].push(i);
        }
        // connectivity (with |E| = |V| - 1 this also rules out cycles)
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(w) = stack.pop() {
            for &e in &incident[w] {
                let o = other_end(&edges[e], w);
                if !seen[o] {
                    seen[o] = true;
                    stack.push(o);
                }
            }
        }
        if let Some(v) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidTree(format!("vertex {} is disconnected", vertex_ids[v])));
        }
        Ok(Self { vertex_ids, edges, incident })
    }

    /// Tree whose vertex `i + 1` hangs from `parents[i].0` by an edge of length `parents[i].1`.
    /// Vertex and edge ids equal their indices.
    pub fn from_parents(parents: &[(usize, f64)]) -> Result<Self> {
        let vertex_ids = (0..=parents.len() as u64).collect();
        let edges = parents
            .iter()
            .enumerate()
            .map(|(i, &(p, length))| Edge { id: i as u64, from: p, to: i + 1, length })
            .collect();
        Self::new(vertex_ids, edges)
    }

    /// A path `0 — 1 — … — n` with the given edge lengths.
    pub fn path(lengths: &[f64]) -> Result<Self> {
        let parents: Vec<_> = lengths.iter().enumerate().map(|(i, &l)| (i, l)).collect();
        Self::from_parents(&parents)
    }

    /// The single edge `(0, length)`.
    pub fn interval(length: f64) -> Result<Self> {
        Self::path(&[length])
    }

    /// A star with centre vertex 0.
    pub fn star(lengths: &[f64]) -> Result<Self> {
        let parents: Vec<_> = lengths.iter().map(|&l| (0, l)).collect();
        Self::from_parents(&parents)
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_ids.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, e: usize) -> &Edge {
        &self.edges[e]
    }

    pub fn vertex_id(&self, v: usize) -> u64 {
        self.vertex_ids[v]
    }

    pub fn vertex_ids(&self) -> &[u64] {
        &self.vertex_ids
    }

    pub fn vertex_index(&self, id: u64) -> Option<usize> {
        self.vertex_ids.iter().position(|&x| x == id)
    }

    pub fn edge_index(&self, id: u64) -> Option<usize> {
        self.edges.iter().position(|e| e.id == id)
    }

    pub fn incident(&self, v: usize) -> &[usize] {
        &self.incident[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.incident[v].len()
    }

    pub fn total_length(&self) -> f64 {
        self.edges.iter().map(|e| e.length).sum()
    }

    /// Canonical location at `offset` from the edge's `from` endpoint.
    pub fn locate(&self, edge: usize, offset: f64) -> Result<Location> {
        let e = self
            .edges
            .get(edge)
            .ok_or_else(|| Error::InvalidLocation(format!("no edge with index {edge}")))?;
        if !offset.is_finite() || offset < -SNAP || offset > e.length + SNAP {
            return Err(Error::InvalidLocation(format!(
                "offset {offset} outside edge {} of length {}",
                e.id, e.length
            )));
        }
        Ok(if offset <= SNAP {
            Location::Vertex(e.from)
        } else if offset >= e.length - SNAP {
            Location::Vertex(e.to)
        } else {
            Location::Edge { edge, offset }
        })
    }

    fn check_location(&self, loc: Location) -> Result<()> {
        match loc {
            Location::Vertex(v) if v < self.vertex_count() => Ok(()),
            Location::Vertex(v) => Err(Error::InvalidLocation(format!("no vertex with index {v}"))),
            Location::Edge { edge, offset } => self.locate(edge, offset).map(|_| ()),
        }
    }
}

fn other_end(e: &Edge, v: usize) -> usize {
    if e.from == v {
        e.to
    } else {
        e.from
    }
}

/// A point of a [`MetricTree`], either a vertex or an edge-interior point given by
/// its arclength offset from the edge's `from` endpoint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Location {
    Vertex(usize),
    Edge { edge: usize, offset: f64 },
}

/// A point of a [`RootedTree`] in root-oriented coordinates: `down` is measured
/// from the parent end of `edge`. The root is `edge == None`; every other vertex
/// is represented at the bottom (`down == length`) of its parent edge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreePoint {
    pub edge: Option<usize>,
    pub down: f64,
}

impl TreePoint {
    pub const ROOT: TreePoint = TreePoint { edge: None, down: 0.0 };

    fn key(&self) -> (usize, f64) {
        match self.edge {
            None => (usize::MAX, 0.0),
            Some(e) => (e, self.down),
        }
    }

    pub(crate) fn same(&self, other: &TreePoint) -> bool {
        self.edge == other.edge && (self.down - other.down).abs() <= SNAP
    }

    /// Deterministic total order: `(edge, offset)` lexicographically, root last.
    pub fn cmp_lex(&self, other: &TreePoint) -> Ordering {
        let (a, b) = (self.key(), other.key());
        a.0.cmp(&b.0).then(a.1.total_cmp(&b.1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootSplit {
    /// Index of the original edge; it keeps the part adjacent to its `from` end.
    pub edge: usize,
    pub offset: f64,
    /// Index of the appended edge carrying the remainder.
    pub new_edge: usize,
    pub new_vertex: usize,
}

/// A metric tree with a distinguished root vertex and the induced partial order.
#[derive(Debug, Clone)]
pub struct RootedTree {
    tree: MetricTree,
    root: usize,
    forward: Vec<bool>,
    parent_edge: Vec<Option<usize>>,
    children: Vec<Vec<usize>>,
    order: Vec<usize>,
    depth: Vec<f64>,
    split: Option<RootSplit>,
}

/// Roots `tree` at `a`, splitting the edge that contains `a` when `a` is not a vertex.
pub fn root_at(tree: MetricTree, a: Location) -> Result<RootedTree> {
    tree.check_location(a)?;
    let a = match a {
        Location::Edge { edge, offset } => tree.locate(edge, offset)?,
        v => v,
    };
    match a {
        Location::Vertex(v) => Ok(RootedTree::build(tree, v, None)),
        Location::Edge { edge, offset } => {
            let MetricTree { mut vertex_ids, mut edges, .. } = tree;
            let new_vertex = vertex_ids.len();
            let next_vid = vertex_ids.iter().copied().max().unwrap_or(0) + 1;
            vertex_ids.push(next_vid);
            let next_eid = edges.iter().map(|e| e.id).max().unwrap_or(0) + 1;
            let old = edges[edge].clone();
            edges[edge] = Edge { id: old.id, from: old.from, to: new_vertex, length: offset };
            edges.push(Edge { id: next_eid, from: new_vertex, to: old.to, length: old.length - offset });
            let new_edge = edges.len() - 1;
            let tree = MetricTree::new(vertex_ids, edges)?;
            Ok(RootedTree::build(
                tree,
                new_vertex,
                Some(RootSplit { edge, offset, new_edge, new_vertex }),
            ))
        }
    }
}

impl RootedTree {
    fn build(tree: MetricTree, root: usize, split: Option<RootSplit>) -> Self {
        let n = tree.vertex_count();
        let mut forward = vec![true; tree.edge_count()];
        let mut parent_edge = vec![None; n];
        let mut children = vec![Vec::new(); n];
        let mut depth = vec![0.0; n];
        let mut order = Vec::with_capacity(n);
        let mut seen = vec![false; n];
        seen[root] = true;
        order.push(root);
        let mut head = 0;
        while head < order.len() {
            let w = order[head];
            head += 1;
            let mut inc: Vec<usize> = tree.incident(w).to_vec();
            inc.sort_unstable();
            for e in inc {
                let edge = tree.edge(e);
                let o = other_end(edge, w);
                if seen[o] {
                    continue;
                }
                seen[o] = true;
                forward[e] = edge.from == w;
                parent_edge[o] = Some(e);
                children[w].push(e);
                depth[o] = depth[w] + edge.length;
                order.push(o);
            }
        }
        Self { tree, root, forward, parent_edge, children, order, depth, split }
    }

    pub fn tree(&self) -> &MetricTree {
        &self.tree
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn split(&self) -> Option<RootSplit> {
        self.split
    }

    pub fn edge_count(&self) -> usize {
        self.tree.edge_count()
    }

    pub fn len(&self, e: usize) -> f64 {
        self.tree.edge(e).length
    }

    /// `true` when the edge's `from` endpoint is its parent end.
    pub fn is_forward(&self, e: usize) -> bool {
        self.forward[e]
    }

    pub fn parent_vertex(&self, e: usize) -> usize {
        let ed = self.tree.edge(e);
        if self.forward[e] {
            ed.from
        } else {
            ed.to
        }
    }

    pub fn child_vertex(&self, e: usize) -> usize {
        let ed = self.tree.edge(e);
        if self.forward[e] {
            ed.to
        } else {
            ed.from
        }
    }

    pub fn parent_edge(&self, v: usize) -> Option<usize> {
        self.parent_edge[v]
    }

    pub fn child_edges(&self, v: usize) -> &[usize] {
        &self.children[v]
    }

    /// Vertices in breadth-first order from the root.
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    /// Distance from the root.
    pub fn vertex_depth(&self, v: usize) -> f64 {
        self.depth[v]
    }

    pub fn is_leaf(&self, v: usize) -> bool {
        v != self.root && self.children[v].is_empty()
    }

    /// Edges in breadth-first order (parents before children).
    pub fn edges_top_down(&self) -> Vec<usize> {
        self.order.iter().flat_map(|&w| self.children[w].iter().copied()).collect()
    }

    pub fn vertex_point(&self, v: usize) -> TreePoint {
        match self.parent_edge[v] {
            None => TreePoint::ROOT,
            Some(e) => TreePoint { edge: Some(e), down: self.len(e) },
        }
    }

    /// Canonical point at root-oriented offset `down` on edge `e`.
    pub fn point_on(&self, e: usize, down: f64) -> TreePoint {
        if down <= SNAP {
            self.vertex_point(self.parent_vertex(e))
        } else {
            TreePoint { edge: Some(e), down: down.min(self.len(e)) }
        }
    }

    pub fn point(&self, loc: Location) -> Result<TreePoint> {
        self.tree.check_location(loc)?;
        Ok(match loc {
            Location::Vertex(v) => self.vertex_point(v),
            Location::Edge { edge, offset } => {
                let d = if self.forward[edge] { offset } else { self.len(edge) - offset };
                self.point_on(edge, d)
            }
        })
    }

    pub fn location(&self, pt: TreePoint) -> Location {
        match pt.edge {
            None => Location::Vertex(self.root),
            Some(e) => {
                let off = if self.forward[e] { pt.down } else { self.len(e) - pt.down };
                self.tree.locate(e, off).unwrap_or(Location::Vertex(self.child_vertex(e)))
            }
        }
    }

    /// Maps a location of the tree this one was rooted from onto this tree.
    pub fn map_location(&self, loc: Location) -> Location {
        match (loc, self.split) {
            (Location::Edge { edge, offset }, Some(s)) if edge == s.edge => {
                if (offset - s.offset).abs() <= SNAP {
                    Location::Vertex(s.new_vertex)
                } else if offset < s.offset {
                    Location::Edge { edge, offset }
                } else {
                    Location::Edge { edge: s.new_edge, offset: offset - s.offset }
                }
            }
            (l, _) => l,
        }
    }

    /// Carries a weight of the pre-rooting tree over to the split edges.
    pub fn map_weight(&self, w: &StepWeight) -> StepWeight {
        match self.split {
            Some(s) if w.edge_count() + 1 == self.edge_count() => w.split_edge(s.edge, s.offset),
            _ => w.clone(),
        }
    }

    pub fn depth(&self, pt: TreePoint) -> f64 {
        match pt.edge {
            None => 0.0,
            Some(e) => self.depth[self.parent_vertex(e)] + pt.down,
        }
    }

    /// Whether edge `anc` lies on the path from the root to the bottom of edge `e` (inclusive).
    pub fn edge_is_ancestor(&self, anc: usize, mut e: usize) -> bool {
        loop {
            if e == anc {
                return true;
            }
            match self.parent_edge[self.parent_vertex(e)] {
                Some(p) => e = p,
                None => return false,
            }
        }
    }

    /// `x ≼ y`: `x` lies on the path from the root to `y`.
    pub fn precedes(&self, x: TreePoint, y: TreePoint) -> bool {
        match (x.edge, y.edge) {
            (None, _) => true,
            (Some(_), None) => false,
            (Some(ex), Some(ey)) if ex == ey => x.down <= y.down + SNAP,
            (Some(ex), Some(ey)) => {
                // x at the very bottom of ex is the child vertex, an ancestor of ey's edges too
                self.edge_is_ancestor(ex, ey)
            }
        }
    }

    /// `(edge, hi)` pairs from the root down to `pt`: the path is `∪ (edge, [0, hi])`.
    fn chain(&self, pt: TreePoint) -> Vec<(usize, f64)> {
        let mut out = Vec::new();
        if let Some(e) = pt.edge {
            out.push((e, pt.down));
            let mut w = self.parent_vertex(e);
            while let Some(pe) = self.parent_edge[w] {
                out.push((pe, self.len(pe)));
                w = self.parent_vertex(pe);
            }
        }
        out.reverse();
        out
    }

    /// The path from `x` to `y` as consecutive pieces; `towards_root` tells the
    /// direction of travel along each piece.
    pub fn path(&self, x: TreePoint, y: TreePoint) -> Vec<PathPiece> {
        let cx = self.chain(x);
        let cy = self.chain(y);
        let mut i = 0;
        while i < cx.len() && i < cy.len() && cx[i].0 == cy[i].0 {
            if cx[i].1 < self.len(cx[i].0) - SNAP || cy[i].1 < self.len(cy[i].0) - SNAP {
                break;
            }
            i += 1;
        }
        let mut out = Vec::new();
        let mut push = |edge: usize, a: f64, b: f64, up: bool| {
            if b - a > SNAP {
                out.push(PathPiece { edge, lo: a, hi: b, towards_root: up });
            }
        };
        if i < cx.len() && i < cy.len() && cx[i].0 == cy[i].0 {
            // x and y share edge cx[i] and at least one of them ends on it
            let e = cx[i].0;
            let (hx, hy) = (cx[i].1, cy[i].1);
            for &(ex, h) in cx[i + 1..].iter().rev() {
                push(ex, 0.0, h, true);
            }
            push(e, hx.min(hy), hx.max(hy), hy < hx);
            for &(ey, h) in &cy[i + 1..] {
                push(ey, 0.0, h, false);
            }
        } else {
            for &(ex, h) in cx[i..].iter().rev() {
                push(ex, 0.0, h, true);
            }
            for &(ey, h) in &cy[i..] {
                push(ey, 0.0, h, false);
            }
        }
        out
    }

    pub fn distance(&self, x: TreePoint, y: TreePoint) -> f64 {
        self.path(x, y).iter().map(|p| p.hi - p.lo).sum()
    }

    /// Closures of the connected components of `Γ \ {x}`.
    pub fn components_after_removal(&self, x: TreePoint) -> Vec<Subtree> {
        let below_vertex = |v: usize, segs: &mut Vec<Seg>| {
            let mut stack: Vec<usize> = self.children[v].clone();
            while let Some(e) = stack.pop() {
                segs.push(Seg { edge: e, lo: 0.0, hi: self.len(e) });
                stack.extend_from_slice(&self.children[self.child_vertex(e)]);
            }
        };
        let everything_but = |skip: &dyn Fn(usize) -> bool, segs: &mut Vec<Seg>| {
            for e in 0..self.edge_count() {
                if !skip(e) {
                    segs.push(Seg { edge: e, lo: 0.0, hi: self.len(e) });
                }
            }
        };
        match x.edge {
            None => self.component_per_child(self.root, &below_vertex),
            Some(e) if x.down < self.len(e) - SNAP => {
                let mut lower = vec![Seg { edge: e, lo: x.down, hi: self.len(e) }];
                below_vertex(self.child_vertex(e), &mut lower);
                let mut upper = vec![Seg { edge: e, lo: 0.0, hi: x.down }];
                everything_but(&|f| self.edge_is_ancestor(e, f), &mut upper);
                vec![Subtree::normalized(upper, Some(x)), Subtree::normalized(lower, Some(x))]
            }
            Some(e) => {
                let v = self.child_vertex(e);
                let mut out = Vec::new();
                let mut upper = Vec::new();
                everything_but(&|f| f != e && self.edge_is_ancestor(e, f) || f == e, &mut upper);
                upper.push(Seg { edge: e, lo: 0.0, hi: self.len(e) });
                out.push(Subtree::normalized(upper, Some(x)));
                out.extend(self.component_per_child(v, &below_vertex));
                out
            }
        }
    }

    fn component_per_child(&self, v: usize, below: &dyn Fn(usize, &mut Vec<Seg>)) -> Vec<Subtree> {
        self.children[v]
            .iter()
            .map(|&c| {
                let mut segs = vec![Seg { edge: c, lo: 0.0, hi: self.len(c) }];
                below(self.child_vertex(c), &mut segs);
                Subtree::normalized(segs, Some(self.vertex_point(v)))
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathPiece {
    pub edge: usize,
    pub lo: f64,
    pub hi: f64,
    pub towards_root: bool,
}

/// A closed piece `[lo, hi]` (root-oriented offsets) of one edge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Seg {
    pub edge: usize,
    pub lo: f64,
    pub hi: f64,
}

impl Seg {
    pub fn length(&self) -> f64 {
        self.hi - self.lo
    }
}

/// A closed connected subset of a rooted tree, stored as disjoint edge pieces.
/// A single point is a degenerate subtree of measure zero.
#[derive(Debug, Clone, PartialEq)]
pub struct Subtree {
    segs: Vec<Seg>,
    point: Option<TreePoint>,
}

impl Subtree {
    /// Sorts and merges; `point` is kept only when nothing of positive length remains.
    fn normalized(mut segs: Vec<Seg>, point: Option<TreePoint>) -> Self {
        segs.retain(|s| s.hi - s.lo > SNAP);
        segs.sort_by(|a, b| a.edge.cmp(&b.edge).then(a.lo.total_cmp(&b.lo)));
        let mut out: Vec<Seg> = Vec::with_capacity(segs.len());
        for s in segs {
            match out.last_mut() {
                Some(last) if last.edge == s.edge && s.lo <= last.hi + SNAP => {
                    last.hi = last.hi.max(s.hi);
                }
                _ => out.push(s),
            }
        }
        let point = if out.is_empty() { point } else { None };
        Self { segs: out, point }
    }

    pub fn whole(t: &RootedTree) -> Self {
        let segs = (0..t.edge_count()).map(|e| Seg { edge: e, lo: 0.0, hi: t.len(e) }).collect();
        Self::normalized(segs, Some(TreePoint::ROOT))
    }

    pub fn point(p: TreePoint) -> Self {
        Self { segs: Vec::new(), point: Some(p) }
    }

    /// Validated constructor: pieces must lie on their edges and form a connected set.
    pub fn from_segments(t: &RootedTree, segs: Vec<Seg>) -> Result<Self> {
        for s in &segs {
            if s.edge >= t.edge_count() || s.lo < -SNAP || s.hi > t.len(s.edge) + SNAP || s.lo > s.hi {
                return Err(Error::InvalidSubtree(format!(
                    "piece [{}, {}] does not lie on edge {}",
                    s.lo, s.hi, s.edge
                )));
            }
        }
        let segs = segs
            .into_iter()
            .map(|s| Seg { edge: s.edge, lo: s.lo.max(0.0), hi: s.hi.min(t.len(s.edge)) })
            .map(|s| snap_seg(t, s))
            .collect();
        let k = Self::normalized(segs, None);
        if k.segs.is_empty() {
            return Err(Error::InvalidSubtree("empty subtree".into()));
        }
        if !k.is_connected(t) {
            return Err(Error::InvalidSubtree("pieces are not connected".into()));
        }
        Ok(k)
    }

    /// `{x ⪰ anchor : no cut c with c ≺ x}`: everything below `anchor` down to the cuts.
    pub fn from_anchor_and_cuts(t: &RootedTree, anchor: TreePoint, cuts: &[TreePoint]) -> Result<Self> {
        let mut segs = Vec::new();
        let cut_on = |e: usize, from: f64| -> Option<f64> {
            cuts.iter()
                .filter(|c| c.edge == Some(e) && c.down > from + SNAP)
                .map(|c| c.down)
                .min_by(|a, b| a.total_cmp(b))
        };
        let mut stack: Vec<(usize, f64)> = Vec::new();
        match anchor.edge {
            Some(e) if anchor.down < t.len(e) - SNAP => stack.push((e, anchor.down)),
            _ => {
                let v = match anchor.edge {
                    None => t.root(),
                    Some(e) => t.child_vertex(e),
                };
                stack.extend(t.child_edges(v).iter().map(|&c| (c, 0.0)));
            }
        }
        if cuts.iter().any(|c| c.same(&anchor)) {
            return Ok(Self::point(anchor));
        }
        while let Some((e, from)) = stack.pop() {
            match cut_on(e, from) {
                Some(d) => segs.push(Seg { edge: e, lo: from, hi: d }),
                None => {
                    segs.push(Seg { edge: e, lo: from, hi: t.len(e) });
                    stack.extend(t.child_edges(t.child_vertex(e)).iter().map(|&c| (c, 0.0)));
                }
            }
        }
        if segs.is_empty() {
            return Ok(Self::point(anchor));
        }
        Ok(Self::normalized(segs, None))
    }

    pub fn segs(&self) -> &[Seg] {
        &self.segs
    }

    pub fn is_degenerate(&self) -> bool {
        self.segs.is_empty()
    }

    pub fn length(&self) -> f64 {
        self.segs.iter().map(Seg::length).sum()
    }

    pub fn seg_on(&self, e: usize) -> Option<&Seg> {
        self.segs.iter().find(|s| s.edge == e)
    }

    /// Union of two subtrees sharing at least a point (not checked).
    pub fn union(&self, other: &Subtree) -> Subtree {
        let mut segs = self.segs.clone();
        segs.extend_from_slice(&other.segs);
        Self::normalized(segs, self.point.or(other.point))
    }

    pub fn with_seg(&self, s: Seg) -> Subtree {
        let mut segs = self.segs.clone();
        segs.push(s);
        Self::normalized(segs, self.point)
    }

    pub fn contains(&self, t: &RootedTree, p: TreePoint) -> bool {
        if let Some(q) = self.point {
            if self.segs.is_empty() {
                return q.same(&p);
            }
        }
        match p.edge {
            None => self.touches_vertex(t, t.root()),
            Some(e) => {
                let on_edge = self
                    .segs
                    .iter()
                    .any(|s| s.edge == e && p.down >= s.lo - SNAP && p.down <= s.hi + SNAP);
                on_edge || (p.down >= t.len(e) - SNAP && self.touches_vertex(t, t.child_vertex(e)))
            }
        }
    }

    /// Whether vertex `v` belongs to the subtree.
    pub fn touches_vertex(&self, t: &RootedTree, v: usize) -> bool {
        if self.segs.is_empty() {
            return self.point.map(|p| p.same(&t.vertex_point(v))).unwrap_or(false);
        }
        self.segs.iter().any(|s| {
            (s.lo <= SNAP && t.parent_vertex(s.edge) == v)
                || (s.hi >= t.len(s.edge) - SNAP && t.child_vertex(s.edge) == v)
        })
    }

    /// Vertices lying in the subtree.
    pub fn vertices(&self, t: &RootedTree) -> Vec<usize> {
        let mut vs = Vec::new();
        for s in &self.segs {
            if s.lo <= SNAP {
                vs.push(t.parent_vertex(s.edge));
            }
            if s.hi >= t.len(s.edge) - SNAP {
                vs.push(t.child_vertex(s.edge));
            }
        }
        if let Some(p) = self.point {
            if self.segs.is_empty() {
                if let Some(v) = vertex_of(t, p) {
                    vs.push(v);
                }
            }
        }
        vs.sort_unstable();
        vs.dedup();
        vs
    }

    /// The point of the subtree nearest the root.
    pub fn anchor(&self, t: &RootedTree) -> TreePoint {
        if self.segs.is_empty() {
            return self.point.unwrap_or(TreePoint::ROOT);
        }
        self.segs
            .iter()
            .map(|s| t.point_on(s.edge, s.lo))
            .min_by(|a, b| t.depth(*a).total_cmp(&t.depth(*b)).then(a.cmp_lex(b)))
            .unwrap_or(TreePoint::ROOT)
    }

    pub fn is_connected(&self, t: &RootedTree) -> bool {
        if self.segs.len() <= 1 {
            return true;
        }
        // union-find over pieces, joined through shared vertices
        let n = self.segs.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], mut i: usize) -> usize {
            while p[i] != i {
                p[i] = p[p[i]];
                i = p[i];
            }
            i
        }
        let mut at_vertex: Vec<(usize, usize)> = Vec::new();
        for (i, s) in self.segs.iter().enumerate() {
            if s.lo <= SNAP {
                at_vertex.push((t.parent_vertex(s.edge), i));
            }
            if s.hi >= t.len(s.edge) - SNAP {
                at_vertex.push((t.child_vertex(s.edge), i));
            }
        }
        at_vertex.sort_unstable();
        for w in at_vertex.windows(2) {
            if w[0].0 == w[1].0 {
                let (a, b) = (find(&mut parent, w[0].1), find(&mut parent, w[1].1));
                parent[a] = b;
            }
        }
        let r = find(&mut parent, 0);
        (0..n).all(|i| find(&mut parent, i) == r)
    }

    /// Topological boundary of the subtree in the whole tree.
    pub fn boundary(&self, t: &RootedTree) -> Vec<TreePoint> {
        if self.segs.is_empty() {
            return self.point.into_iter().collect();
        }
        let mut out = Vec::new();
        for s in &self.segs {
            if s.lo > SNAP {
                out.push(t.point_on(s.edge, s.lo));
            }
            if s.hi < t.len(s.edge) - SNAP {
                out.push(t.point_on(s.edge, s.hi));
            }
        }
        for v in self.vertices(t) {
            let up_ok = match t.parent_edge(v) {
                None => true,
                Some(pe) => self.seg_on(pe).map(|s| s.hi >= t.len(pe) - SNAP).unwrap_or(false),
            };
            let down_ok = t
                .child_edges(v)
                .iter()
                .all(|&c| self.seg_on(c).map(|s| s.lo <= SNAP).unwrap_or(false));
            if !(up_ok && down_ok) {
                out.push(t.vertex_point(v));
            }
        }
        out.sort_by(|a, b| a.cmp_lex(b));
        out.dedup_by(|a, b| a.same(b));
        out
    }

    /// Boundary points plus the leaves of the tree contained in the subtree,
    /// i.e. every point at which the subtree ends.
    pub fn ends(&self, t: &RootedTree) -> Vec<TreePoint> {
        let mut out = self.boundary(t);
        for v in self.vertices(t) {
            if t.is_leaf(v) {
                out.push(t.vertex_point(v));
            }
        }
        out.sort_by(|a, b| a.cmp_lex(b));
        out.dedup_by(|a, b| a.same(b));
        out
    }

    /// Length of the overlap with another subtree.
    pub fn overlap(&self, other: &Subtree) -> f64 {
        let mut total = 0.0;
        for a in &self.segs {
            for b in other.segs.iter().filter(|b| b.edge == a.edge) {
                total += (a.hi.min(b.hi) - a.lo.max(b.lo)).max(0.0);
            }
        }
        total
    }
}

fn snap_seg(t: &RootedTree, mut s: Seg) -> Seg {
    if s.lo <= SNAP {
        s.lo = 0.0;
    }
    let l = t.len(s.edge);
    if s.hi >= l - SNAP {
        s.hi = l;
    }
    s
}

fn vertex_of(t: &RootedTree, p: TreePoint) -> Option<usize> {
    match p.edge {
        None => Some(t.root()),
        Some(e) if p.down >= t.len(e) - SNAP => Some(t.child_vertex(e)),
        _ => None,
    }
}

/// Subtrees of a common parent that are meant to cover it without overlap.
#[derive(Debug, Clone)]
pub struct Partition {
    pub parent: Subtree,
    pub parts: Vec<Subtree>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PartitionIssue {
    /// A point of the parent covered by no part.
    Gap(TreePoint),
    /// A point covered by two parts along a stretch of positive length.
    Overlap { at: TreePoint, parts: (usize, usize) },
    /// Part lies partly outside the parent.
    Outside { part: usize, at: TreePoint },
    Disconnected { part: usize },
}

#[derive(Debug, Clone)]
pub struct PartitionReport {
    pub issues: Vec<PartitionIssue>,
    pub parent_length: f64,
    pub parts_length: f64,
}

impl PartitionReport {
    pub fn is_valid(&self) -> bool {
        self.issues.is_empty()
    }
}

/// Checks cover and non-overlap of `p`, reporting each defect with a witness point.
pub fn validate_partition(t: &RootedTree, p: &Partition) -> PartitionReport {
    let tol = 1e-9;
    let mut issues = Vec::new();
    for (i, part) in p.parts.iter().enumerate() {
        if !part.is_connected(t) {
            issues.push(PartitionIssue::Disconnected { part: i });
        }
    }
    for e in 0..t.edge_count() {
        let mut pieces: Vec<(f64, f64, usize)> = p
            .parts
            .iter()
            .enumerate()
            .filter_map(|(i, k)| k.seg_on(e).map(|s| (s.lo, s.hi, i)))
            .collect();
        pieces.sort_by(|a, b| a.0.total_cmp(&b.0));
        let host = p.parent.seg_on(e).copied();
        for &(lo, hi, i) in &pieces {
            let inside = host.map(|h| lo >= h.lo - tol && hi <= h.hi + tol).unwrap_or(false);
            if !inside {
                let at = match host {
                    Some(h) if lo < h.lo - tol => 0.5 * (lo + h.lo.min(hi)),
                    Some(h) => 0.5 * (h.hi.max(lo) + hi),
                    None => 0.5 * (lo + hi),
                };
                issues.push(PartitionIssue::Outside { part: i, at: t.point_on(e, at) });
            }
        }
        for w in pieces.windows(2) {
            if w[1].0 < w[0].1 - tol {
                let at = 0.5 * (w[1].0 + w[0].1.min(w[1].1));
                issues.push(PartitionIssue::Overlap { at: t.point_on(e, at), parts: (w[0].2, w[1].2) });
            }
        }
        if let Some(h) = host {
            let mut reach = h.lo;
            for &(lo, hi, _) in &pieces {
                if lo > reach + tol {
                    issues.push(PartitionIssue::Gap(t.point_on(e, 0.5 * (reach + lo.min(h.hi)))));
                }
                reach = reach.max(hi);
            }
            if reach < h.hi - tol {
                issues.push(PartitionIssue::Gap(t.point_on(e, 0.5 * (reach + h.hi))));
            }
        }
    }
    PartitionReport {
        issues,
        parent_length: p.parent.length(),
        parts_length: p.parts.iter().map(Subtree::length).sum(),
    }
}

impl Partition {
    pub fn validate(&self, t: &RootedTree) -> PartitionReport {
        validate_partition(t, self)
    }

    /// Errors with the first defect when the partition is not valid.
    pub fn check(&self, t: &RootedTree) -> Result<()> {
        let r = self.validate(t);
        match r.issues.first() {
            None => Ok(()),
            Some(issue) => Err(Error::InvalidPartition(format!("{issue:?}").to_string())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn y_tree() -> MetricTree {
        MetricTree::star(&[1.0, 1.0, 1.0]).unwrap()
    }

    #[test]
    fn rejects_cycles_and_bad_lengths() {
        let e = |id, from, to, length| Edge { id, from, to, length };
        assert!(MetricTree::new(vec![0, 1, 2], vec![e(0, 0, 1, 1.0), e(1, 1, 0, 1.0)]).is_err());
        assert!(MetricTree::new(vec![0, 1], vec![e(0, 0, 1, 0.0)]).is_err());
        assert!(MetricTree::new(vec![0, 1], vec![e(0, 0, 1, f64::INFINITY)]).is_err());
        assert!(MetricTree::new(vec![0, 1, 2, 3], vec![e(0, 0, 1, 1.0), e(1, 0, 1, 1.0), e(2, 2, 3, 1.0)])
            .is_err());
    }

    #[test]
    fn root_at_endpoint_does_not_split() {
        let rt = root_at(MetricTree::interval(1.0).unwrap(), Location::Edge { edge: 0, offset: 0.0 }).unwrap();
        assert_eq!(rt.edge_count(), 1);
        assert_eq!(rt.root(), 0);
    }

    #[test]
    fn root_at_interior_splits_edge() {
        let rt = root_at(MetricTree::interval(1.0).unwrap(), Location::Edge { edge: 0, offset: 0.4 }).unwrap();
        assert_eq!(rt.edge_count(), 2);
        assert_abs_diff_eq!(rt.len(0), 0.4, epsilon = 1e-15);
        assert_abs_diff_eq!(rt.len(1), 0.6, epsilon = 1e-15);
        assert_eq!(rt.root(), 2);
    }

    #[test]
    fn root_at_leaf_of_y_tree() {
        let rt = root_at(y_tree(), Location::Vertex(1)).unwrap();
        assert_eq!(rt.edge_count(), 3);
        assert_eq!(rt.root(), 1);
        assert_abs_diff_eq!(rt.vertex_depth(2), 2.0);
    }

    #[test]
    fn off_tree_location_is_rejected() {
        let t = MetricTree::interval(1.0).unwrap();
        assert!(root_at(t.clone(), Location::Edge { edge: 0, offset: 1.5 }).is_err());
        assert!(root_at(t, Location::Edge { edge: 3, offset: 0.5 }).is_err());
    }

    #[test]
    fn path_examples() {
        let rt = root_at(y_tree(), Location::Vertex(0)).unwrap();
        let x = rt.point(Location::Edge { edge: 0, offset: 0.3 }).unwrap();
        assert!(rt.path(x, x).is_empty());
        let l1 = rt.vertex_point(1);
        let l2 = rt.vertex_point(2);
        assert_abs_diff_eq!(rt.distance(l1, l2), 2.0, epsilon = 1e-12);
        let pieces = rt.path(l1, l2);
        assert_eq!(pieces.len(), 2);
        assert!(pieces[0].towards_root && !pieces[1].towards_root);
    }

    #[test]
    fn precedes_examples() {
        let rt = root_at(y_tree(), Location::Vertex(0)).unwrap();
        let a = rt.point(Location::Edge { edge: 0, offset: 0.5 }).unwrap();
        let b = rt.point(Location::Edge { edge: 1, offset: 0.5 }).unwrap();
        assert!(rt.precedes(TreePoint::ROOT, a));
        assert!(rt.precedes(a, a));
        assert!(!rt.precedes(a, b) && !rt.precedes(b, a));
        assert!(rt.precedes(a, rt.vertex_point(1)));
    }

    #[test]
    fn components_examples() {
        let rt = root_at(MetricTree::interval(1.0).unwrap(), Location::Vertex(0)).unwrap();
        let cs = rt.components_after_removal(rt.point_on(0, 0.3));
        assert_eq!(cs.len(), 2);
        assert_abs_diff_eq!(cs[0].length(), 0.3, epsilon = 1e-15);
        assert_abs_diff_eq!(cs[1].length(), 0.7, epsilon = 1e-15);

        let rt = root_at(y_tree(), Location::Vertex(1)).unwrap();
        let centre = rt.vertex_point(0);
        let cs = rt.components_after_removal(centre);
        assert_eq!(cs.len(), 3);
        assert!(cs.iter().all(|c| (c.length() - 1.0).abs() < 1e-12));
        let cs = rt.components_after_removal(rt.vertex_point(2));
        assert_eq!(cs.len(), 1);
        assert_abs_diff_eq!(cs[0].length(), 3.0, epsilon = 1e-12);
        let cs = rt.components_after_removal(TreePoint::ROOT);
        assert_eq!(cs.len(), 1);
    }

    #[test]
    fn partition_validation() {
        let rt = root_at(MetricTree::interval(1.0).unwrap(), Location::Vertex(0)).unwrap();
        let whole = Subtree::whole(&rt);
        let half = |lo, hi| Subtree::from_segments(&rt, vec![Seg { edge: 0, lo, hi }]).unwrap();
        let ok = Partition { parent: whole.clone(), parts: vec![half(0.0, 0.5), half(0.5, 1.0)] };
        assert!(ok.validate(&rt).is_valid());
        let bad = Partition { parent: whole.clone(), parts: vec![half(0.0, 0.6), half(0.4, 1.0)] };
        let r = bad.validate(&rt);
        assert!(matches!(r.issues[0], PartitionIssue::Overlap { at, .. } if (at.down - 0.5).abs() < 1e-12));
        let gap = Partition { parent: whole, parts: vec![half(0.0, 0.4), half(0.6, 1.0)] };
        assert!(matches!(gap.validate(&rt).issues[0], PartitionIssue::Gap(p) if (p.down - 0.5).abs() < 1e-12));
    }

    #[test]
    fn anchor_and_cuts() {
        let rt = root_at(y_tree(), Location::Vertex(1)).unwrap();
        // below the centre, cut one branch half way
        let cut = rt.point(Location::Edge { edge: 1, offset: 0.5 }).unwrap();
        let k = Subtree::from_anchor_and_cuts(&rt, rt.vertex_point(0), &[cut]).unwrap();
        assert_abs_diff_eq!(k.length(), 1.5, epsilon = 1e-12);
        let b = k.boundary(&rt);
        assert_eq!(b.len(), 2);
        assert_eq!(k.ends(&rt).len(), 3);
    }
}
