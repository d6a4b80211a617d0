//! Discrete-time consensus on directed weighted topologies, synchronous and
//! asynchronous, with the switched-system machinery needed to check when the
//! asynchronous consensus value is guaranteed to match the synchronous one.
//!
//! The asynchronous model lets every agent read neighbor states up to a
//! bounded number of steps stale. For general rooted topologies the
//! resulting consensus value is a random variable of the delay realization;
//! when the topology is rooted at leaders (agents whose update row is an
//! identity row) and the reachability margin `rho(|F - F*|)` is below one,
//! every delay realization converges to the synchronous value.
//!
//! Modules:
//! - [`topology`]: graph ingestion, row normalization, leader/root structure
//! - [`stochastic`]: row-stochastic matrix algebra, spectral radii,
//!   stationary forms, consensus weights
//! - [`switched`]: augmented-state modal matrices and switching chains
//! - [`sim`]: seeded synchronous/asynchronous runs and Monte Carlo ensembles
//! - [`analysis`]: convergence verdicts and empirical chain verification
//! - [`output`]: CSV/JSON emission
//! - [`fixtures`]: the two bundled example topologies

pub mod analysis;
pub mod fixtures;
pub mod matrix;
pub mod output;
pub mod rng;
pub mod sim;
pub mod stochastic;
pub mod switched;
pub mod topology;

pub use analysis::{analyze, ConvergenceReport};
pub use matrix::Mat;
pub use sim::{monte_carlo, run_async, run_sync, DelayKind, DelayModel, Trajectory};
pub use stochastic::RowStochasticMatrix;
pub use topology::DirectedTopology;
