//! Convergence verdicts: reachability margin, leader structure, predicted
//! limits, and empirical verification that bounded-delay switching chains
//! settle on the synchronous stationary form.

use crate::matrix::Mat;
use crate::rng::{mix, SplitMix64};
use crate::sim::EnsembleSummary;
use crate::stochastic::{
    async_margin, consensus_weights, spectral_radius, stationary, stationary_closed_form,
    RowStochasticMatrix,
};
use crate::switched::{
    enumerate_modes, modal_matrix, mode_count, DelayAssignment, ModalMatrix, SwitchedError,
};
use crate::topology::{classify_roots, reorder_leaders_first, unpermute};
use serde::Serialize;
use std::collections::BTreeMap;
use thiserror::Error;

/// Cap on the number of switching sequences an exhaustive verification may
/// enumerate.
pub const EXHAUSTIVE_CHAIN_CAP: u64 = 1 << 21;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("interaction topology is not in m-rooted leader form; Theorem-style verification requires leaders")]
    NotApplicable,
    #[error("no stationary form available: {0}")]
    NoStationaryForm(String),
    #[error(
        "switching chain deviates from the synchronous stationary form by {max_deviation:.3e} \
         (tolerance {tol:.3e}); offending sequence has {sequence_len} modes"
    )]
    Counterexample {
        max_deviation: f64,
        tol: f64,
        sequence_len: usize,
        sequence: Vec<DelayAssignment>,
    },
    #[error(transparent)]
    Switched(#[from] SwitchedError),
}

/// Verdict bundle for one interaction matrix.
#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceReport {
    pub n: usize,
    /// Leader agent ids, 1-based to match the usual agent numbering.
    pub leaders: Vec<usize>,
    pub m: usize,
    pub has_spanning_tree: bool,
    pub is_m_rooted_leader_form: bool,
    /// Spectral radius of F itself (informational; 1 for any row-stochastic
    /// matrix with a spanning tree).
    pub rho_f: Option<f64>,
    /// The reachability margin rho(|F - F*|).
    pub rho_margin: Option<f64>,
    pub async_reachable: bool,
    pub theorem1_applies: bool,
    pub mu: Option<Vec<f64>>,
    pub predicted_sync_value: Option<f64>,
    /// Per-agent limit F* x0 (present when x0 was supplied and a stationary
    /// form exists).
    pub predicted_limit: Option<Vec<f64>>,
    pub notes: Vec<String>,
}

/// Stationary form of `F`, via the power limit when it exists and via the
/// leader-first closed form `(I-Y)^{-1}X` otherwise.
pub fn stationary_any(f: &RowStochasticMatrix) -> Result<RowStochasticMatrix, AnalysisError> {
    match stationary(f, 1e-13, 64) {
        Ok(star) => Ok(star),
        Err(limit_err) => {
            let (perm, ordered) = reorder_leaders_first(f)
                .map_err(|_| AnalysisError::NoStationaryForm(limit_err.to_string()))?;
            let m = crate::topology::find_leaders(f).len();
            let star_ordered = stationary_closed_form(&ordered, m)
                .map_err(|e| AnalysisError::NoStationaryForm(e.to_string()))?;
            let star = unpermute(star_ordered.mat(), &perm);
            RowStochasticMatrix::with_tolerance(star, 1e-9)
                .map_err(|e| AnalysisError::NoStationaryForm(e.to_string()))
        }
    }
}

/// Populates the full verdict bundle for `F` (best effort: numeric failures
/// land in `notes` rather than aborting).
pub fn analyze(f: &RowStochasticMatrix, x0: Option<&[f64]>) -> ConvergenceReport {
    let structure = classify_roots(f);
    let mut notes = Vec::new();

    let rho_f = match spectral_radius(f.mat(), 1e-10, 100_000) {
        Ok(est) => Some(est.value),
        Err(e) => {
            notes.push(format!("spectral radius of F unavailable: {e}"));
            None
        }
    };

    let star = match stationary_any(f) {
        Ok(star) => Some(star),
        Err(e) => {
            notes.push(format!("no stationary form: {e}"));
            None
        }
    };

    let rho_margin = star.as_ref().and_then(|s| match async_margin(f, s) {
        Ok(rho) => Some(rho),
        Err(e) => {
            notes.push(format!("reachability margin unavailable: {e}"));
            None
        }
    });
    let async_reachable = rho_margin.map(|r| r < 1.0).unwrap_or(false);
    let theorem1_applies = structure.is_m_rooted_leader_form && async_reachable;

    let mu = match consensus_weights(f, 1e-9) {
        Ok(w) => Some(w.as_slice().to_vec()),
        Err(e) => {
            if structure.m > 1 {
                notes.push(
                    "multiple leaders: stationary form is not rank one; \
                            per-agent limits computed via F* x0"
                        .to_string(),
                );
            } else {
                notes.push(format!("consensus weights unavailable: {e}"));
            }
            None
        }
    };

    let predicted_limit = match (&star, x0) {
        (Some(star), Some(x0)) => Some(star.mat().matvec(x0)),
        _ => None,
    };
    let predicted_sync_value = match (&mu, x0) {
        (Some(mu), Some(x0)) => Some(mu.iter().zip(x0).map(|(m, x)| m * x).sum()),
        _ => predicted_limit.as_ref().and_then(|limit| {
            let max = limit.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let min = limit.iter().copied().fold(f64::INFINITY, f64::min);
            if max - min < 1e-9 {
                Some(limit.iter().sum::<f64>() / limit.len() as f64)
            } else {
                notes.push(
                    "leaders hold different initial values: fixed-point problem, not consensus"
                        .to_string(),
                );
                None
            }
        }),
    };

    ConvergenceReport {
        n: f.dim(),
        leaders: structure.leaders.iter().map(|&i| i + 1).collect(),
        m: structure.m,
        has_spanning_tree: structure.has_spanning_tree,
        is_m_rooted_leader_form: structure.is_m_rooted_leader_form,
        rho_f,
        rho_margin,
        async_reachable,
        theorem1_applies,
        mu,
        predicted_sync_value,
        predicted_limit,
        notes,
    }
}

/// Outcome of the switching-chain verification.
#[derive(Debug, Clone, Serialize)]
pub struct TheoremVerdict {
    pub max_deviation: f64,
    pub chains_checked: u64,
    pub exhaustive: bool,
    pub depth: usize,
    pub tol: f64,
}

fn lift_target(star: &RowStochasticMatrix, tau_d: u32) -> Mat {
    let n = star.dim();
    let dim = n * (tau_d as usize + 1);
    let mut target = Mat::zeros(dim, dim);
    for r in 0..dim {
        for c in 0..n {
            target.set(r, c, star.get(r % n, c));
        }
    }
    target
}

fn deviation(acc: &Mat, target: &Mat) -> f64 {
    acc.max_abs_diff(target)
}

/// Checks that accumulated switching products `W(depth)` land on the lifted
/// synchronous stationary form: first block column within `tol` of `F*`,
/// all other block columns within `tol` of zero.
///
/// Enumerates every switching sequence when `modes^depth` fits under
/// [`EXHAUSTIVE_CHAIN_CAP`]; otherwise checks `chains` random sequences
/// drawn from the seeded uniform delay distribution.
pub fn verify_theorem1_empirically(
    f: &RowStochasticMatrix,
    tau_d: u32,
    chains: u64,
    depth: usize,
    tol: f64,
    seed: u64,
) -> Result<TheoremVerdict, AnalysisError> {
    let structure = classify_roots(f);
    if !structure.is_m_rooted_leader_form {
        return Err(AnalysisError::NotApplicable);
    }
    let star = stationary_any(f)?;
    let target = lift_target(&star, tau_d);
    let support = f.off_diagonal_support();

    let sequences = mode_count(support.len(), tau_d)
        .and_then(|modes| modes.checked_pow(depth.min(u32::MAX as usize) as u32));
    if let Some(total) = sequences {
        if total <= EXHAUSTIVE_CHAIN_CAP {
            let modes = enumerate_modes(f, tau_d, total.max(1))?;
            let mut max_dev = 0.0f64;
            let mut worst: Vec<usize> = Vec::new();
            let mut stack: Vec<usize> = Vec::new();
            exhaustive_dfs(
                &modes,
                depth,
                None,
                &target,
                &mut stack,
                &mut max_dev,
                &mut worst,
            );
            if max_dev > tol {
                let sequence = worst
                    .iter()
                    .map(|&i| modes[i].assignment().clone())
                    .collect();
                return Err(AnalysisError::Counterexample {
                    max_deviation: max_dev,
                    tol,
                    sequence_len: depth,
                    sequence,
                });
            }
            return Ok(TheoremVerdict {
                max_deviation: max_dev,
                chains_checked: total,
                exhaustive: true,
                depth,
                tol,
            });
        }
    }

    let mut max_dev = 0.0f64;
    for chain_idx in 0..chains {
        let mut rng = SplitMix64::new(mix(seed ^ chain_idx));
        let mut acc: Option<Mat> = None;
        let mut sequence = Vec::with_capacity(depth);
        for _ in 0..depth {
            let delays: BTreeMap<(usize, usize), u32> = support
                .iter()
                .map(|&p| (p, rng.next_below(tau_d as u64 + 1) as u32))
                .collect();
            let assignment = DelayAssignment::new(tau_d, delays)?;
            let w = modal_matrix(f, &assignment)?;
            acc = Some(match acc {
                None => w.matrix().mat().clone(),
                Some(a) => w.matrix().mat().matmul(&a),
            });
            sequence.push(assignment);
        }
        let dev = deviation(&acc.expect("depth >= 1"), &target);
        if dev > tol {
            return Err(AnalysisError::Counterexample {
                max_deviation: dev,
                tol,
                sequence_len: depth,
                sequence,
            });
        }
        max_dev = max_dev.max(dev);
    }
    Ok(TheoremVerdict {
        max_deviation: max_dev,
        chains_checked: chains,
        exhaustive: false,
        depth,
        tol,
    })
}

fn exhaustive_dfs(
    modes: &[ModalMatrix],
    remaining: usize,
    acc: Option<&Mat>,
    target: &Mat,
    stack: &mut Vec<usize>,
    max_dev: &mut f64,
    worst: &mut Vec<usize>,
) {
    if remaining == 0 {
        let dev = deviation(acc.expect("nonzero depth"), target);
        if dev > *max_dev {
            *max_dev = dev;
            *worst = stack.clone();
        }
        return;
    }
    for (idx, mode) in modes.iter().enumerate() {
        let next = match acc {
            None => mode.matrix().mat().clone(),
            Some(a) => mode.matrix().mat().matmul(a),
        };
        stack.push(idx);
        exhaustive_dfs(
            modes,
            remaining - 1,
            Some(&next),
            target,
            stack,
            max_dev,
            worst,
        );
        stack.pop();
    }
}

/// Histogram bin over consensus values.
#[derive(Debug, Clone, Serialize)]
pub struct HistogramBin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

/// How an asynchronous ensemble compares against the synchronous value.
#[derive(Debug, Clone, Serialize)]
pub struct DiscrepancyReport {
    pub sync_value: f64,
    pub max_abs_deviation: f64,
    pub std: f64,
    /// Fraction of converged samples within 1e-6 of the synchronous value.
    pub fraction_within: f64,
    pub converged_samples: usize,
    pub non_converged: usize,
    pub histogram: Vec<HistogramBin>,
}

pub const DISCREPANCY_MATCH_TOL: f64 = 1e-6;
const HISTOGRAM_BINS: usize = 20;

pub fn discrepancy_report(sync_value: f64, ensemble: &EnsembleSummary) -> DiscrepancyReport {
    let values = ensemble.consensus_values();
    let max_abs_deviation = values
        .iter()
        .map(|v| (v - sync_value).abs())
        .fold(0.0f64, f64::max);
    let within = values
        .iter()
        .filter(|v| (**v - sync_value).abs() <= DISCREPANCY_MATCH_TOL)
        .count();
    let fraction_within = if values.is_empty() {
        0.0
    } else {
        within as f64 / values.len() as f64
    };

    let histogram = if values.is_empty() {
        Vec::new()
    } else {
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if hi - lo <= 0.0 {
            vec![HistogramBin {
                lo,
                hi,
                count: values.len(),
            }]
        } else {
            let width = (hi - lo) / HISTOGRAM_BINS as f64;
            let mut counts = vec![0usize; HISTOGRAM_BINS];
            for v in &values {
                let bin = (((v - lo) / width) as usize).min(HISTOGRAM_BINS - 1);
                counts[bin] += 1;
            }
            counts
                .into_iter()
                .enumerate()
                .map(|(b, count)| HistogramBin {
                    lo: lo + b as f64 * width,
                    hi: lo + (b + 1) as f64 * width,
                    count,
                })
                .collect()
        }
    };

    DiscrepancyReport {
        sync_value,
        max_abs_deviation,
        std: ensemble.std.unwrap_or(0.0),
        fraction_within,
        converged_samples: values.len(),
        non_converged: ensemble.non_converged,
        histogram,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::sim::{monte_carlo, run_sync, DelayKind, DelayModel, CONSENSUS_TOL};

    #[test]
    fn analyze_example1() {
        let f = fixtures::example1_matrix();
        let r = analyze(&f, Some(&fixtures::EXAMPLE_X0));
        assert!(r.async_reachable);
        assert!((r.rho_margin.unwrap() - 0.83).abs() < 0.01);
        assert!(!r.theorem1_applies);
        assert!(r.mu.is_some());
        let predicted = r.predicted_sync_value.unwrap();
        assert!((predicted - 2.95).abs() < 0.05);
    }

    #[test]
    fn analyze_example2() {
        let f = fixtures::example2_matrix();
        let r = analyze(&f, Some(&fixtures::EXAMPLE_X0));
        assert!(r.theorem1_applies);
        assert_eq!(r.m, 2);
        assert_eq!(r.leaders, vec![1, 4]);
        assert!((r.predicted_sync_value.unwrap() - 3.0).abs() < 1e-9);
        // leaders' predicted entries are exactly their initial values
        let limit = r.predicted_limit.unwrap();
        assert_eq!(limit[0], 3.0);
        assert_eq!(limit[3], 3.0);
    }

    #[test]
    fn analyze_identity_all_leaders() {
        let f = RowStochasticMatrix::new(Mat::identity(2)).unwrap();
        let r = analyze(&f, Some(&[1.0, 2.0]));
        assert!(r.theorem1_applies);
        assert_eq!(r.m, 2);
        assert_eq!(r.predicted_limit.unwrap(), vec![1.0, 2.0]);
        assert!(r.predicted_sync_value.is_none()); // differing leader values
        assert!(r.notes.iter().any(|n| n.contains("not consensus")));
    }

    #[test]
    fn analyze_is_pure() {
        let f = fixtures::example2_matrix();
        let a = serde_json::to_string(&analyze(&f, None)).unwrap();
        let b = serde_json::to_string(&analyze(&f, None)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn verify_example2_sampled_chains() {
        let f = fixtures::example2_matrix();
        let v = verify_theorem1_empirically(&f, 2, 20, 300, 1e-8, 123).unwrap();
        assert!(!v.exhaustive);
        assert!(v.max_deviation < 1e-8);
    }

    #[test]
    fn verify_tau0_is_synchronous_power() {
        let f = fixtures::example2_matrix();
        let star = stationary_any(&f).unwrap();
        let v = verify_theorem1_empirically(&f, 0, 1, 300, 1e-8, 0).unwrap();
        assert!(v.exhaustive);
        // single chain equals F^depth; deviation equals ||F^300 - F*||
        let mut p = f.mat().clone();
        for _ in 1..300 {
            p = f.mat().matmul(&p);
        }
        let expect = p.max_abs_diff(star.mat());
        assert!((v.max_deviation - expect).abs() < 1e-12);
    }

    #[test]
    fn verify_rejects_leaderless() {
        let f = fixtures::example1_matrix();
        assert!(matches!(
            verify_theorem1_empirically(&f, 1, 5, 50, 1e-6, 0),
            Err(AnalysisError::NotApplicable)
        ));
    }

    #[test]
    fn verify_exhaustive_two_agent() {
        // The non-leader mass decays by 0.6 per applied mode; the worst
        // depth-20 chain (one delayed mode up front, then all-sync) leaves
        // exactly 0.6^18 ~ 1.016e-4 on the non-leader column.
        let f =
            RowStochasticMatrix::new(Mat::from_rows(&[vec![1.0, 0.0], vec![0.4, 0.6]])).unwrap();
        let v = verify_theorem1_empirically(&f, 1, 0, 20, 2e-4, 0).unwrap();
        assert!(v.exhaustive);
        assert_eq!(v.chains_checked, 1 << 20);
        assert!((v.max_deviation - 0.6f64.powi(18)).abs() < 1e-12);
    }

    #[test]
    fn verify_exhaustive_reports_counterexample_below_reachable_tolerance() {
        let f =
            RowStochasticMatrix::new(Mat::from_rows(&[vec![1.0, 0.0], vec![0.4, 0.6]])).unwrap();
        match verify_theorem1_empirically(&f, 1, 0, 10, 1e-9, 0) {
            Err(AnalysisError::Counterexample {
                max_deviation,
                sequence,
                ..
            }) => {
                // worst chains leave ~0.6^(depth-2) on the non-leader column
                assert!((max_deviation - 0.6f64.powi(8)).abs() < 1e-12);
                assert_eq!(sequence.len(), 10);
            }
            other => panic!("expected counterexample, got {other:?}"),
        }
    }

    #[test]
    fn discrepancy_example2_all_match() {
        let f = fixtures::example2_matrix();
        let sync = run_sync(&f, &fixtures::EXAMPLE_X0, 1500, CONSENSUS_TOL);
        let dm = DelayModel {
            kind: DelayKind::Uniform,
            tau_d: 5,
            seed: 21,
        };
        let mc = monte_carlo(&f, &fixtures::EXAMPLE_X0, &dm, 20, 1500, CONSENSUS_TOL).unwrap();
        let rep = discrepancy_report(sync.consensus.unwrap().value, &mc);
        assert_eq!(rep.fraction_within, 1.0);
        assert!(rep.std < 1e-6);
    }

    #[test]
    fn discrepancy_degenerate_ensemble() {
        let f = fixtures::example2_matrix();
        let dm = DelayModel {
            kind: DelayKind::None,
            tau_d: 0,
            seed: 0,
        };
        let mc = monte_carlo(&f, &fixtures::EXAMPLE_X0, &dm, 3, 1500, CONSENSUS_TOL).unwrap();
        let v = mc.consensus_values()[0];
        let rep = discrepancy_report(v, &mc);
        assert_eq!(rep.max_abs_deviation, 0.0);
    }
}
