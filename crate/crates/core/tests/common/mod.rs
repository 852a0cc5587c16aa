#![allow(dead_code)]

use hardy_tree_core::tree::{root_at, Location, MetricTree, Seg};
use hardy_tree_core::{PNorm, Resolution, RootedTree, StepWeight, Subtree, WeightedTree};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn res(n: usize) -> Resolution {
    Resolution::new(n).unwrap()
}

pub fn p(x: f64) -> PNorm {
    PNorm::new(x).unwrap()
}

/// `(0, len)` rooted at 0 with `u = v = 1`.
pub fn interval(len: f64) -> (RootedTree, StepWeight) {
    let t = root_at(MetricTree::interval(len).unwrap(), Location::Vertex(0)).unwrap();
    let one = StepWeight::constant(t.tree(), 1.0);
    (t, one)
}

/// Root `0 — 1`, then `1 — 2` and `1 — 3`, unit lengths and unit weights.
pub fn y_tree() -> WeightedTree {
    let t = MetricTree::from_parents(&[(0, 1.0), (1, 1.0), (1, 1.0)]).unwrap();
    let one = StepWeight::constant(&t, 1.0);
    WeightedTree::new(t, Location::Vertex(0), &one, &one).unwrap()
}

pub fn seg(t: &RootedTree, edge: usize, lo: f64, hi: f64) -> Subtree {
    Subtree::from_segments(t, vec![Seg { edge, lo, hi }]).unwrap()
}
