//! Piecewise-constant weights and their integral functionals.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::tree::{MetricTree, PathPiece, RootedTree, Subtree, TreePoint, SNAP};
use crate::{Error, Result};

/// Tolerance on the sum of piece lengths against the edge length.
pub const LENGTH_TOL: f64 = 1e-9;

/// An exponent `p ∈ [1, ∞]` together with its conjugate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PNorm {
    p: f64,
}

impl PNorm {
    pub const ONE: PNorm = PNorm { p: 1.0 };
    pub const TWO: PNorm = PNorm { p: 2.0 };
    pub const INF: PNorm = PNorm { p: f64::INFINITY };

    pub fn new(p: f64) -> Result<Self> {
        if p.is_nan() || p < 1.0 {
            return Err(Error::Domain(format!("exponent p = {p} must lie in [1, inf]")));
        }
        Ok(Self { p })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn conj(&self) -> PNorm {
        PNorm { p: conjugate(self.p) }
    }

    pub fn is_one(&self) -> bool {
        self.p == 1.0
    }

    pub fn is_inf(&self) -> bool {
        self.p.is_infinite()
    }

    pub fn is_two(&self) -> bool {
        self.p == 2.0
    }
}

pub fn conjugate(p: f64) -> f64 {
    if p == 1.0 {
        f64::INFINITY
    } else if p.is_infinite() {
        1.0
    } else {
        p / (p - 1.0)
    }
}

/// A nonnegative weight, constant on finitely many pieces of each edge.
/// Pieces are `(length, value)` listed from the edge's `from` endpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct StepWeight {
    pieces: Vec<Vec<(f64, f64)>>,
}

impl StepWeight {
    pub fn new(pieces: Vec<Vec<(f64, f64)>>) -> Result<Self> {
        for (e, ps) in pieces.iter().enumerate() {
            if ps.is_empty() {
                return Err(Error::InvalidWeight { edge: e, reason: "no pieces".into() });
            }
            for &(len, val) in ps {
                if !(len.is_finite() && len > 0.0) {
                    return Err(Error::InvalidWeight { edge: e, reason: format!("piece length {len}") });
                }
                if !(val.is_finite() && val >= 0.0) {
                    return Err(Error::InvalidWeight {
                        edge: e,
                        reason: format!("value {val} is negative or not finite"),
                    });
                }
            }
        }
        Ok(Self { pieces })
    }

    pub fn constant(tree: &MetricTree, c: f64) -> Self {
        Self::per_edge(tree, |_| c)
    }

    /// One constant value per edge.
    pub fn per_edge(tree: &MetricTree, f: impl Fn(usize) -> f64) -> Self {
        Self { pieces: tree.edges().iter().enumerate().map(|(i, e)| vec![(e.length, f(i))]).collect() }
    }

    pub fn edge_count(&self) -> usize {
        self.pieces.len()
    }

    pub fn pieces(&self, e: usize) -> &[(f64, f64)] {
        &self.pieces[e]
    }

    pub fn check_against(&self, tree: &MetricTree) -> Result<()> {
        if self.pieces.len() != tree.edge_count() {
            return Err(Error::Shape { expected: tree.edge_count(), got: self.pieces.len() });
        }
        for (e, ps) in self.pieces.iter().enumerate() {
            let total: f64 = ps.iter().map(|p| p.0).sum();
            let len = tree.edge(e).length;
            if (total - len).abs() > LENGTH_TOL {
                return Err(Error::InvalidWeight {
                    edge: e,
                    reason: format!("piece lengths sum to {total}, edge length is {len}"),
                });
            }
        }
        Ok(())
    }

    /// Splits edge `e` at `offset`; the remainder becomes a new last edge.
    pub fn split_edge(&self, e: usize, offset: f64) -> Self {
        let mut first = Vec::new();
        let mut rest = Vec::new();
        let mut pos = 0.0;
        for &(len, val) in &self.pieces[e] {
            let (a, b) = (pos, pos + len);
            if b <= offset + SNAP {
                first.push((len, val));
            } else if a >= offset - SNAP {
                rest.push((len, val));
            } else {
                first.push((offset - a, val));
                rest.push((b - offset, val));
            }
            pos = b;
        }
        let mut pieces = self.pieces.clone();
        pieces[e] = first;
        pieces.push(rest);
        Self { pieces }
    }

    pub fn scaled(&self, c: f64) -> Self {
        self.map(|x| x * c.abs())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            pieces: self.pieces.iter().map(|ps| ps.iter().map(|&(l, v)| (l, f(v))).collect()).collect(),
        }
    }

    /// Pointwise combination on the common refinement of both piece lists.
    pub fn zip(&self, other: &StepWeight, f: impl Fn(f64, f64) -> f64) -> Self {
        let pieces = self
            .pieces
            .iter()
            .zip(&other.pieces)
            .map(|(a, b)| {
                let mut out = Vec::new();
                let (mut i, mut j) = (0, 0);
                let (mut ra, mut rb) = (a[0].0, b[0].0);
                while i < a.len() && j < b.len() {
                    let step = ra.min(rb);
                    if step > SNAP {
                        out.push((step, f(a[i].1, b[j].1)));
                    }
                    ra -= step;
                    rb -= step;
                    if ra <= SNAP {
                        i += 1;
                        if i < a.len() {
                            ra = a[i].0;
                        }
                    }
                    if rb <= SNAP {
                        j += 1;
                        if j < b.len() {
                            rb = b[j].0;
                        }
                    }
                }
                out
            })
            .collect();
        Self { pieces }
    }

    /// Value at `offset` from the edge's `from` end (right-continuous inside the edge).
    pub fn value_at(&self, e: usize, offset: f64) -> f64 {
        let mut pos = 0.0;
        let ps = &self.pieces[e];
        for &(len, val) in ps {
            pos += len;
            if offset < pos - SNAP {
                return val;
            }
        }
        ps.last().map(|p| p.1).unwrap_or(0.0)
    }

    /// Pieces of edge `e` as `(lo, hi, value)` in root-oriented offsets, top first.
    pub fn down_pieces(&self, t: &RootedTree, e: usize) -> Vec<(f64, f64, f64)> {
        let mut out = Vec::with_capacity(self.pieces[e].len());
        let mut pos = 0.0;
        for &(len, val) in &self.pieces[e] {
            out.push((pos, pos + len, val));
            pos += len;
        }
        let l = t.len(e);
        if let Some(last) = out.last_mut() {
            last.1 = l;
        }
        if !t.is_forward(e) {
            out.reverse();
            for piece in &mut out {
                *piece = (l - piece.1, l - piece.0, piece.2);
            }
            if let Some(first) = out.first_mut() {
                first.0 = 0.0;
            }
        }
        out
    }

    /// Value in root-oriented coordinates; at a jump, the value just below.
    pub fn value_down(&self, t: &RootedTree, e: usize, down: f64) -> f64 {
        let ps = self.down_pieces(t, e);
        ps.iter().find(|p| down < p.1 - SNAP).or(ps.last()).map(|p| p.2).unwrap_or(0.0)
    }

    pub fn max_value(&self) -> f64 {
        self.pieces.iter().flatten().map(|p| p.1).fold(0.0, f64::max)
    }

    pub fn is_zero(&self) -> bool {
        self.max_value() == 0.0
    }
}

/// `∫_K φ(w)` for a function `φ` of the weight value.
pub fn integrate(t: &RootedTree, w: &StepWeight, k: &Subtree, phi: impl Fn(f64) -> f64) -> f64 {
    let mut total = 0.0;
    for s in k.segs() {
        for (a, b, val) in w.down_pieces(t, s.edge) {
            let len = b.min(s.hi) - a.max(s.lo);
            if len > 0.0 {
                total += len * phi(val);
            }
        }
    }
    total
}

/// `∫_K u v`.
pub fn integral_product(t: &RootedTree, u: &StepWeight, v: &StepWeight, k: &Subtree) -> f64 {
    integrate(t, &u.zip(v, |a, b| a * b), k, |x| x)
}

/// Supremum of `w` over `K` (zero for a degenerate `K`).
pub fn sup_on(t: &RootedTree, w: &StepWeight, k: &Subtree) -> f64 {
    let mut m: f64 = 0.0;
    for s in k.segs() {
        for (a, b, val) in w.down_pieces(t, s.edge) {
            if b.min(s.hi) - a.max(s.lo) > SNAP {
                m = m.max(val);
            }
        }
    }
    m
}

/// `‖w‖_{p,K}`.
pub fn lp_norm(t: &RootedTree, w: &StepWeight, p: PNorm, k: &Subtree) -> f64 {
    if p.is_inf() {
        sup_on(t, w, k)
    } else {
        let r = p.p();
        integrate(t, w, k, |x| x.powf(r)).powf(1.0 / r)
    }
}

/// `μ(K) = ∫_K v^p`, with `∫_K v` for `p = ∞`.
pub fn mu(t: &RootedTree, v: &StepWeight, p: PNorm, k: &Subtree) -> f64 {
    if p.is_inf() {
        integrate(t, v, k, |x| x)
    } else {
        let r = p.p();
        integrate(t, v, k, |x| x.powf(r))
    }
}

/// `∫ w^r` over the root-oriented interval `[lo, hi]` of edge `e`.
pub fn edge_integral(t: &RootedTree, w: &StepWeight, e: usize, lo: f64, hi: f64, r: f64) -> f64 {
    w.down_pieces(t, e)
        .into_iter()
        .map(|(a, b, val)| (b.min(hi) - a.max(lo)).max(0.0) * val.powf(r))
        .sum()
}

/// `∫ w^r` along the path from the root to `x`.
pub fn path_integral(t: &RootedTree, w: &StepWeight, x: TreePoint, r: f64) -> f64 {
    let mut total = 0.0;
    if let Some(e) = x.edge {
        total += edge_integral(t, w, e, 0.0, x.down, r);
        let mut v = t.parent_vertex(e);
        while let Some(pe) = t.parent_edge(v) {
            total += edge_integral(t, w, pe, 0.0, t.len(pe), r);
            v = t.parent_vertex(pe);
        }
    }
    total
}

/// `U(x) = ∫_a^x u^{p'}`.
pub fn primitive_u(t: &RootedTree, u: &StepWeight, p: PNorm, x: TreePoint) -> Result<f64> {
    if p.is_one() {
        return Err(Error::UnsupportedExponent { p: 1.0, reason: "U needs a finite conjugate exponent" });
    }
    Ok(path_integral(t, u, x, p.conj().p()))
}

/// `U` at every vertex, indexed by vertex.
pub fn primitive_at_vertices(t: &RootedTree, u: &StepWeight, r: f64) -> Vec<f64> {
    let mut out = vec![0.0; t.tree().vertex_count()];
    for &v in t.order() {
        if let Some(e) = t.parent_edge(v) {
            out[v] = out[t.parent_vertex(e)] + edge_integral(t, u, e, 0.0, t.len(e), r);
        }
    }
    out
}

/// Local essential supremum: the largest value of `w` on any germ at `x`.
pub fn local_ess_sup(t: &RootedTree, w: &StepWeight, x: TreePoint) -> f64 {
    let near = |e: usize, at: f64| -> f64 {
        w.down_pieces(t, e)
            .into_iter()
            .filter(|p| p.0 <= at + SNAP && p.1 >= at - SNAP && p.1 - p.0 > SNAP)
            .map(|p| p.2)
            .fold(0.0, f64::max)
    };
    let vertex = |v: usize| -> f64 {
        let mut m: f64 = 0.0;
        if let Some(pe) = t.parent_edge(v) {
            m = m.max(near(pe, t.len(pe)));
        }
        for &c in t.child_edges(v) {
            m = m.max(near(c, 0.0));
        }
        m
    };
    match x.edge {
        None => vertex(t.root()),
        Some(e) if x.down >= t.len(e) - SNAP => vertex(t.child_vertex(e)),
        Some(e) => near(e, x.down),
    }
}

/// Restriction of `w` to a path, as `(length, value)` pieces in travel order.
pub fn along_path(t: &RootedTree, w: &StepWeight, path: &[PathPiece]) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for piece in path {
        let mut ps: Vec<(f64, f64)> = w
            .down_pieces(t, piece.edge)
            .into_iter()
            .filter_map(|(a, b, val)| {
                let len = b.min(piece.hi) - a.max(piece.lo);
                (len > SNAP).then_some((len, val))
            })
            .collect();
        if piece.towards_root {
            ps.reverse();
        }
        out.extend(ps);
    }
    out
}

/// Nonincreasing rearrangement of a step function given as `(length, value)` pieces.
pub fn rearrange_steps(g: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut s: Vec<(f64, f64)> = g.iter().copied().filter(|p| p.0 > 0.0).collect();
    s.sort_by(|a, b| b.1.total_cmp(&a.1));
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(s.len());
    for (len, val) in s {
        match out.last_mut() {
            Some(last) if last.1 == val => last.0 += len,
            _ => out.push((len, val)),
        }
    }
    out
}

/// Nonincreasing rearrangement of `g` restricted to a path, as a weight on the single edge `(0, |I|)`.
pub fn rearrangement(t: &RootedTree, g: &StepWeight, path: &[PathPiece]) -> Result<StepWeight> {
    let steps = rearrange_steps(&along_path(t, g, path));
    if steps.is_empty() {
        return Err(Error::Domain("rearrangement of an empty interval".into()));
    }
    StepWeight::new(vec![steps])
}

/// Evaluates a step function given as `(length, value)` pieces at `x`, left-continuously.
pub fn eval_steps_left(g: &[(f64, f64)], x: f64) -> f64 {
    let mut pos = 0.0;
    for &(len, val) in g {
        pos += len;
        if x <= pos {
            return val;
        }
    }
    0.0
}

/// `|{g > s}|` for a step function.
pub fn distribution(g: &[(f64, f64)], s: f64) -> f64 {
    g.iter().filter(|p| p.1 > s).map(|p| p.0).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::{root_at, Location};
    use approx::assert_abs_diff_eq;

    fn unit() -> (RootedTree, Subtree) {
        let t = root_at(MetricTree::interval(1.0).unwrap(), Location::Vertex(0)).unwrap();
        let k = Subtree::whole(&t);
        (t, k)
    }

    #[test]
    fn lp_norm_examples() {
        let (t, k) = unit();
        let one = StepWeight::constant(t.tree(), 1.0);
        assert_abs_diff_eq!(lp_norm(&t, &one, PNorm::TWO, &k), 1.0, epsilon = 1e-15);
        let w = StepWeight::new(vec![vec![(0.5, 2.0), (0.5, 0.0)]]).unwrap();
        assert_abs_diff_eq!(lp_norm(&t, &w, PNorm::TWO, &k), 2f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(lp_norm(&t, &w, PNorm::INF, &k), 2.0);
        assert_eq!(lp_norm(&t, &w, PNorm::TWO, &Subtree::point(TreePoint::ROOT)), 0.0);
    }

    #[test]
    fn primitive_examples() {
        let t = root_at(MetricTree::interval(3.0).unwrap(), Location::Vertex(0)).unwrap();
        let one = StepWeight::constant(t.tree(), 1.0);
        assert_eq!(primitive_u(&t, &one, PNorm::TWO, TreePoint::ROOT).unwrap(), 0.0);
        assert_abs_diff_eq!(primitive_u(&t, &one, PNorm::TWO, t.point_on(0, 1.7)).unwrap(), 1.7);
        assert!(primitive_u(&t, &one, PNorm::ONE, TreePoint::ROOT).is_err());
    }

    #[test]
    fn mu_examples() {
        let (t, k) = unit();
        assert_abs_diff_eq!(mu(&t, &StepWeight::constant(t.tree(), 1.0), PNorm::TWO, &k), 1.0);
        assert_eq!(mu(&t, &StepWeight::constant(t.tree(), 0.0), PNorm::TWO, &k), 0.0);
        let w = StepWeight::new(vec![vec![(0.5, 3.0), (0.5, 1.0)]]).unwrap();
        assert_abs_diff_eq!(mu(&t, &w, PNorm::INF, &k), 2.0);
    }

    #[test]
    fn rearrangement_examples() {
        assert_eq!(rearrange_steps(&[(1.0, 3.0)]), vec![(1.0, 3.0)]);
        assert_eq!(rearrange_steps(&[(0.5, 2.0), (0.5, 1.0)]), vec![(0.5, 2.0), (0.5, 1.0)]);
        assert_eq!(rearrange_steps(&[(0.5, 1.0), (0.25, 2.0), (0.25, 1.0)]), vec![(0.25, 2.0), (0.75, 1.0)]);
        let g = [(0.5, 2.0), (0.5, 1.0)];
        assert_eq!(eval_steps_left(&g, 0.5), 2.0);
        assert_eq!(eval_steps_left(&g, 0.5 + 1e-9), 1.0);
    }

    #[test]
    fn local_sup_examples() {
        let (t, _) = unit();
        let w = StepWeight::new(vec![vec![(0.5, 1.0), (0.5, 3.0)]]).unwrap();
        assert_eq!(local_ess_sup(&t, &w, t.point_on(0, 0.25)), 1.0);
        assert_eq!(local_ess_sup(&t, &w, t.point_on(0, 0.5)), 3.0);
        let star = root_at(MetricTree::star(&[1.0, 1.0, 1.0]).unwrap(), Location::Vertex(1)).unwrap();
        let w = StepWeight::new(vec![vec![(1.0, 1.0)], vec![(1.0, 2.0)], vec![(1.0, 5.0)]]).unwrap();
        assert_eq!(local_ess_sup(&star, &w, star.vertex_point(0)), 5.0);
    }

    #[test]
    fn reversed_edges_flip_pieces() {
        let t = root_at(MetricTree::interval(1.0).unwrap(), Location::Vertex(1)).unwrap();
        let w = StepWeight::new(vec![vec![(0.25, 1.0), (0.75, 2.0)]]).unwrap();
        let d = w.down_pieces(&t, 0);
        assert_eq!(d[0], (0.0, 0.75, 2.0));
        assert_abs_diff_eq!(d[1].0, 0.75);
        assert_abs_diff_eq!(primitive_u(&t, &w, PNorm::TWO, t.point_on(0, 0.75)).unwrap(), 0.75 * 4.0);
    }

    #[test]
    fn split_edge_keeps_pieces() {
        let w = StepWeight::new(vec![vec![(0.5, 1.0), (0.5, 3.0)]]).unwrap();
        let s = w.split_edge(0, 0.4);
        assert_eq!(s.pieces(0), &[(0.4, 1.0)]);
        assert_eq!(s.pieces(1).len(), 2);
        assert_abs_diff_eq!(s.pieces(1)[0].0, 0.1, epsilon = 1e-15);
    }
}
