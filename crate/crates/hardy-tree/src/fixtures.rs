//! The trees bundled with the binary.

use crate::error::CliError;
use crate::format::{parse, LoadedTree};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Fixture {
    pub name: &'static str,
    pub text: &'static str,
}

pub const UNIT_INTERVAL: Fixture = Fixture { name: "unit-interval", text: include_str!("../fixtures/unit_interval.json") };
/// `(0, 4)` with `u = v = 1`.
pub const PATH_0_4: Fixture = Fixture { name: "path-0-4", text: include_str!("../fixtures/path_0_4.json") };
/// A trunk and two branches, all of unit length.
pub const Y_TREE: Fixture = Fixture { name: "y-tree", text: include_str!("../fixtures/y_tree.json") };
/// 14 unit edges, `u = 1`, `v = 2^{-g}` on generation `g`; `∫uv = 6`.
pub const BINARY_DEPTH3: Fixture = Fixture { name: "binary-depth-3", text: include_str!("../fixtures/binary_depth3.json") };
/// Branching number 2, generation-`k` edges running from depth `2^k` to `2^{k+1}`.
pub const REGULAR_B2: Fixture = Fixture { name: "regular-b2", text: include_str!("../fixtures/regular_b2.json") };

pub const ALL: [Fixture; 5] = [UNIT_INTERVAL, PATH_0_4, Y_TREE, BINARY_DEPTH3, REGULAR_B2];

pub fn find(name: &str) -> Option<Fixture> {
    ALL.iter().copied().find(|f| f.name == name)
}

impl Fixture {
    pub fn load(&self) -> Result<LoadedTree, CliError> {
        parse(self.text, self.name)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_fixtures_parse() {
        for f in ALL {
            let t = f.load().unwrap();
            assert_eq!(t.name, f.name);
        }
        let b = BINARY_DEPTH3.load().unwrap();
        assert_eq!(b.weighted.tree.edge_count(), 14);
        assert!((b.weighted.integral_uv() - 6.0).abs() < 1e-12);
    }
}
