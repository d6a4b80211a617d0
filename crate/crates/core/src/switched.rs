//! Augmented-state switched-system view of bounded-delay asynchrony.
//!
//! The current state together with the last `tau_d` states is stacked into
//! one vector; each concrete delay assignment then turns one asynchronous
//! update into multiplication by a row-stochastic modal matrix whose lower
//! block rows are a pure shift.

use crate::matrix::Mat;
use crate::stochastic::{product, RowStochasticMatrix, StochasticError};
use std::collections::BTreeMap;
use thiserror::Error;

/// Default cap on exhaustive mode enumeration.
pub const ENUMERATION_CAP: u64 = 1_000_000;

#[derive(Debug, Error)]
pub enum SwitchedError {
    #[error("delay {delay} for pair ({i}, {j}) exceeds maximum delay {tau_d}")]
    DelayOutOfRange {
        i: usize,
        j: usize,
        delay: u32,
        tau_d: u32,
    },
    #[error("delay assignment keys do not match the off-diagonal support of F: {reason}")]
    SupportMismatch { reason: String },
    #[error("mode count {count} exceeds enumeration cap {cap}; sample modes instead")]
    EnumerationCapExceeded { count: u64, cap: u64 },
    #[error("empty mode sequence")]
    EmptyChain,
    #[error(transparent)]
    Stochastic(#[from] StochasticError),
}

/// One realized set of communication delays: for every directed influence
/// pair `(i, j)` with `f_ij > 0`, `i != j`, the staleness `d_ij` in
/// `[0, tau_d]` of the value agent `i` reads from agent `j`. Self-loops are
/// never delayed and never appear here.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DelayAssignment {
    tau_d: u32,
    delays: BTreeMap<(usize, usize), u32>,
}

impl DelayAssignment {
    pub fn new(tau_d: u32, delays: BTreeMap<(usize, usize), u32>) -> Result<Self, SwitchedError> {
        for (&(i, j), &d) in &delays {
            if d > tau_d {
                return Err(SwitchedError::DelayOutOfRange {
                    i,
                    j,
                    delay: d,
                    tau_d,
                });
            }
        }
        Ok(DelayAssignment { tau_d, delays })
    }

    /// The synchronous assignment: every pair at delay zero.
    pub fn all_zero(f: &RowStochasticMatrix, tau_d: u32) -> Self {
        let delays = f
            .off_diagonal_support()
            .into_iter()
            .map(|p| (p, 0))
            .collect();
        DelayAssignment { tau_d, delays }
    }

    pub fn tau_d(&self) -> u32 {
        self.tau_d
    }

    pub fn delay(&self, i: usize, j: usize) -> Option<u32> {
        self.delays.get(&(i, j)).copied()
    }

    pub fn delays(&self) -> &BTreeMap<(usize, usize), u32> {
        &self.delays
    }

    fn check_support(&self, f: &RowStochasticMatrix) -> Result<(), SwitchedError> {
        let support = f.off_diagonal_support();
        if support.len() != self.delays.len()
            || support.iter().any(|p| !self.delays.contains_key(p))
        {
            return Err(SwitchedError::SupportMismatch {
                reason: format!(
                    "assignment has {} keys, support has {} pairs",
                    self.delays.len(),
                    support.len()
                ),
            });
        }
        Ok(())
    }
}

/// Stacked state history, newest first: `[x(k); x(k-1); ...; x(k-tau_d)]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedState {
    n: usize,
    tau_d: u32,
    data: Vec<f64>,
}

impl AugmentedState {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn tau_d(&self) -> u32 {
        self.tau_d
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// The current-state block `x(k)`.
    pub fn current(&self) -> &[f64] {
        &self.data[..self.n]
    }

    /// Block `d`, i.e. `x(k - d)`.
    pub fn block(&self, d: u32) -> &[f64] {
        let d = d as usize;
        &self.data[d * self.n..(d + 1) * self.n]
    }
}

/// Modal transition matrix for one delay assignment, together with the
/// assignment that generated it.
#[derive(Debug, Clone)]
pub struct ModalMatrix {
    matrix: RowStochasticMatrix,
    assignment: DelayAssignment,
}

impl ModalMatrix {
    pub fn matrix(&self) -> &RowStochasticMatrix {
        &self.matrix
    }

    pub fn assignment(&self) -> &DelayAssignment {
        &self.assignment
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }
}

/// Builds the `n(tau_d+1)` modal matrix for `F` under assignment `d`:
/// `f_ii` stays in the leading diagonal block, each off-diagonal `f_ij`
/// moves to block column `d_ij`, and the lower block rows shift history.
/// Placement is bit-exact; no arithmetic touches the weights.
pub fn modal_matrix(
    f: &RowStochasticMatrix,
    d: &DelayAssignment,
) -> Result<ModalMatrix, SwitchedError> {
    d.check_support(f)?;
    let n = f.dim();
    let tau = d.tau_d() as usize;
    let dim = n * (tau + 1);
    let mut w = Mat::zeros(dim, dim);
    for i in 0..n {
        w.set(i, i, f.get(i, i));
    }
    for (&(i, j), &delay) in d.delays() {
        w.set(i, delay as usize * n + j, f.get(i, j));
    }
    for b in 1..=tau {
        for i in 0..n {
            w.set(b * n + i, (b - 1) * n + i, 1.0);
        }
    }
    let matrix = RowStochasticMatrix::new(w)?;
    Ok(ModalMatrix {
        matrix,
        assignment: d.clone(),
    })
}

/// Number of modes `(tau_d+1)^E` for support size `E`, or `None` on overflow.
pub fn mode_count(support_size: usize, tau_d: u32) -> Option<u64> {
    let base = tau_d as u64 + 1;
    let mut count: u64 = 1;
    for _ in 0..support_size {
        count = count.checked_mul(base)?;
    }
    Some(count)
}

/// Exhaustively enumerates all delay assignments in lexicographic order of
/// the (sorted) support pairs.
pub fn enumerate_modes(
    f: &RowStochasticMatrix,
    tau_d: u32,
    cap: u64,
) -> Result<Vec<ModalMatrix>, SwitchedError> {
    let support = f.off_diagonal_support();
    let count = mode_count(support.len(), tau_d).ok_or(SwitchedError::EnumerationCapExceeded {
        count: u64::MAX,
        cap,
    })?;
    if count > cap {
        return Err(SwitchedError::EnumerationCapExceeded { count, cap });
    }
    let mut modes = Vec::with_capacity(count as usize);
    let mut digits = vec![0u32; support.len()];
    loop {
        let delays: BTreeMap<(usize, usize), u32> = support
            .iter()
            .copied()
            .zip(digits.iter().copied())
            .collect();
        let assignment = DelayAssignment::new(tau_d, delays)?;
        modes.push(modal_matrix(f, &assignment)?);
        // increment the least significant digit last so the order is
        // lexicographic in (pair order, delay)
        let mut pos = support.len();
        loop {
            if pos == 0 {
                return Ok(modes);
            }
            pos -= 1;
            if digits[pos] < tau_d {
                digits[pos] += 1;
                break;
            }
            digits[pos] = 0;
        }
    }
}

/// Lifts an initial condition into the augmented space by replicating it
/// across all history slots (pre-history states equal `x(0)`).
pub fn lift_initial(x0: &[f64], tau_d: u32) -> AugmentedState {
    let n = x0.len();
    let mut data = Vec::with_capacity(n * (tau_d as usize + 1));
    for _ in 0..=tau_d {
        data.extend_from_slice(x0);
    }
    AugmentedState { n, tau_d, data }
}

/// One switched-system step `x~(k+1) = W x~(k)`.
pub fn step(w: &ModalMatrix, s: &AugmentedState) -> AugmentedState {
    assert_eq!(
        w.dim(),
        s.data.len(),
        "modal matrix and state dims disagree"
    );
    let data = w.matrix.mat().matvec(&s.data);
    AugmentedState {
        n: s.n,
        tau_d: s.tau_d,
        data,
    }
}

/// Accumulated product `W(k) = W_{sigma_k} ... W_{sigma_0}` for a mode
/// sequence given oldest first.
pub fn chain(modes: &[ModalMatrix]) -> Result<RowStochasticMatrix, SwitchedError> {
    let first = modes.first().ok_or(SwitchedError::EmptyChain)?;
    let mut acc = first.matrix.clone();
    for mode in &modes[1..] {
        acc = product(mode.matrix(), &acc)?;
    }
    Ok(acc)
}
