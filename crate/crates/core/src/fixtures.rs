//! Bundled example topologies used by the `reproduce` CLI command and the
//! test suite. The matrices ship as fixture files and are embedded here so
//! the binary works without an install step.

use crate::stochastic::RowStochasticMatrix;
use crate::topology::{row_normalize, DirectedTopology};

/// Five agents, rooted spanning tree, no leaders. Asynchronous consensus is
/// reachable but the consensus value is delay-dependent.
pub const EXAMPLE1_TEXT: &str = include_str!("../fixtures/example1.csv");

/// Same topology with agents 1 and 4 turned into leaders. Asynchronous
/// consensus reproduces the synchronous value regardless of delays.
pub const EXAMPLE2_TEXT: &str = include_str!("../fixtures/example2.csv");

/// Initial condition shared by both examples.
pub const EXAMPLE_X0: [f64; 5] = [3.0, 2.0, 1.0, 3.0, 5.0];

/// Maximum delay used in both examples.
pub const EXAMPLE_TAU_D: u32 = 5;

/// Monte Carlo sample count used in both examples.
pub const EXAMPLE_SAMPLES: usize = 300;

pub fn example1_topology() -> DirectedTopology {
    DirectedTopology::parse(EXAMPLE1_TEXT).expect("bundled fixture parses")
}

pub fn example2_topology() -> DirectedTopology {
    DirectedTopology::parse(EXAMPLE2_TEXT).expect("bundled fixture parses")
}

pub fn example1_matrix() -> RowStochasticMatrix {
    row_normalize(&example1_topology())
}

pub fn example2_matrix() -> RowStochasticMatrix {
    row_normalize(&example2_topology())
}
