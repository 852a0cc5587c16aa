//! Random trees and step weights for property checks.

use alloc::vec::Vec;

use rand::Rng;

use crate::tree::{Location, MetricTree};
use crate::weights::StepWeight;
use crate::{Result, WeightedTree};

/// A random tree with `edges` edges: each new vertex hangs from a uniformly chosen earlier one.
pub fn tree<R: Rng>(rng: &mut R, edges: usize, min_len: f64, max_len: f64) -> Result<MetricTree> {
    let parents: Vec<(usize, f64)> =
        (1..=edges).map(|i| (rng.random_range(0..i), rng.random_range(min_len..=max_len))).collect();
    MetricTree::from_parents(&parents)
}

/// Up to `max_pieces` pieces per edge with values in `[lo, hi]`.
pub fn step_weight<R: Rng>(rng: &mut R, t: &MetricTree, max_pieces: usize, lo: f64, hi: f64) -> Result<StepWeight> {
    let mut pieces = Vec::with_capacity(t.edge_count());
    for e in t.edges() {
        let n = rng.random_range(1..=max_pieces.max(1));
        let mut cuts: Vec<f64> = (0..n - 1).map(|_| rng.random_range(0.05..0.95)).collect();
        cuts.sort_by(f64::total_cmp);
        cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-3);
        let mut ps = Vec::with_capacity(cuts.len() + 1);
        let mut prev = 0.0;
        for c in cuts.into_iter().chain([1.0]) {
            ps.push(((c - prev) * e.length, rng.random_range(lo..=hi)));
            prev = c;
        }
        pieces.push(ps);
    }
    StepWeight::new(pieces)
}

/// A random weighted tree rooted at a random location.
pub fn weighted_tree<R: Rng>(rng: &mut R, edges: usize) -> Result<WeightedTree> {
    let t = tree(rng, edges, 0.3, 1.5)?;
    let u = step_weight(rng, &t, 2, 0.2, 2.0)?;
    let v = step_weight(rng, &t, 2, 0.2, 2.0)?;
    let root = location(rng, &t);
    WeightedTree::new(t, root, &u, &v)
}

/// A random point: a vertex or an interior point of an edge.
pub fn location<R: Rng>(rng: &mut R, t: &MetricTree) -> Location {
    if rng.random_bool(0.3) {
        Location::Vertex(rng.random_range(0..t.vertex_count()))
    } else {
        let e = rng.random_range(0..t.edge_count());
        Location::Edge { edge: e, offset: t.edge(e).length * rng.random_range(0.1..0.9) }
    }
}

/// Perturbs every piece value by a factor in `[1 − s, 1 + s]`.
pub fn perturb<R: Rng>(rng: &mut R, w: &StepWeight, s: f64) -> StepWeight {
    let pieces = (0..w.edge_count())
        .map(|e| w.pieces(e).iter().map(|&(l, x)| (l, x * (1.0 + s * rng.random_range(-1.0..=1.0)))).collect())
        .collect();
    StepWeight::new(pieces).unwrap_or_else(|_| w.clone())
}
