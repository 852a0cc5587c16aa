//! Hardy-type operators `f ↦ v(x) ∫_a^x u f` on weighted rooted metric trees.
//!
//! The crate is `no_std` (it needs `alloc`) and contains only the numerical
//! core: the tree model, piecewise-constant weights, discretized operators and
//! their norms / approximation numbers, the partition counting functions
//! `N(K, ε)` and `M(K, ε)`, and the dyadic level-set sequences `σ_{k,i}`.
//! File formats and the command-line front end live in the `hardy-tree` crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod asymptotics;
mod error;
pub mod grid;
pub mod linalg;
pub mod operator;
pub mod partition;
pub mod random;
pub mod tree;
pub mod weights;

pub use error::{Error, Result};
pub use grid::Resolution;
pub use operator::{
    a_value, approx_numbers_p2, op_norm, AMethod, AOptions, AValue, ArgminShift,
    DiscretizedOperator, FiniteRankApproximant, NormEstimate, NormMethod, NormOptions,
    SingularSpectrum,
};
pub use partition::{compute_m, compute_n, EpsPackingResult, EpsPartitionResult, PartitionOptions};
pub use tree::{Location, MetricTree, Partition, RootedTree, Subtree, TreePoint};
pub use weights::{PNorm, StepWeight};

/// A rooted tree together with its two weights, already mapped onto the
/// rooted tree's edges.
#[derive(Debug, Clone)]
pub struct WeightedTree {
    pub tree: RootedTree,
    pub u: StepWeight,
    pub v: StepWeight,
}

impl WeightedTree {
    /// Roots `tree` at `root` and carries `u`, `v` over to the (possibly split) edges.
    pub fn new(tree: MetricTree, root: Location, u: &StepWeight, v: &StepWeight) -> Result<Self> {
        u.check_against(&tree)?;
        v.check_against(&tree)?;
        let rooted = tree::root_at(tree, root)?;
        let u = rooted.map_weight(u);
        let v = rooted.map_weight(v);
        Ok(Self { tree: rooted, u, v })
    }

    pub fn whole(&self) -> Subtree {
        Subtree::whole(&self.tree)
    }

    /// `∫_Γ |u||v|`, exact for step weights.
    pub fn integral_uv(&self) -> f64 {
        weights::integral_product(&self.tree, &self.u, &self.v, &self.whole())
    }
}
