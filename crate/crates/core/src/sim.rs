//! Synchronous and asynchronous consensus iteration, seeded delay models,
//! and Monte Carlo ensembles.
//!
//! Asynchrony is modeled entirely as stale reads: every agent updates at
//! every global step, but the neighbor values it consumes may be up to
//! `tau_d` steps old. A run is a deterministic function of
//! `(F, x0, delay model)`.

use crate::rng::{sample_seed, SplitMix64};
use crate::stochastic::RowStochasticMatrix;
use crate::switched::{DelayAssignment, SwitchedError};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Default tolerance on the max-min spread for consensus detection.
pub const CONSENSUS_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DelayKind {
    /// Synchronous: every read is current.
    None,
    /// Fresh uniform draw in `[0, tau_d]` per influence pair per step.
    Uniform,
    /// One uniform draw per influence pair, frozen for the whole run.
    Fixed,
    /// Per step, one uniform draw per source agent, shared by all readers.
    Shared,
}

/// Seeded generator specification for per-edge delay assignments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DelayModel {
    pub kind: DelayKind,
    pub tau_d: u32,
    pub seed: u64,
}

impl DelayModel {
    pub fn synchronous() -> Self {
        DelayModel {
            kind: DelayKind::None,
            tau_d: 0,
            seed: 0,
        }
    }

    /// Effective maximum delay; `kind = none` forces zero.
    pub fn effective_tau_d(&self) -> u32 {
        match self.kind {
            DelayKind::None => 0,
            _ => self.tau_d,
        }
    }

    /// Creates the per-step assignment sampler for `F`'s support.
    pub fn sampler(&self, f: &RowStochasticMatrix) -> DelaySampler {
        let support = f.off_diagonal_support();
        let sources: Vec<usize> = {
            let mut s: Vec<usize> = support.iter().map(|&(_, j)| j).collect();
            s.sort_unstable();
            s.dedup();
            s
        };
        let mut sampler = DelaySampler {
            kind: self.kind,
            tau_d: self.effective_tau_d(),
            rng: SplitMix64::new(self.seed),
            support,
            sources,
            fixed: None,
        };
        if sampler.kind == DelayKind::Fixed {
            sampler.fixed = Some(sampler.draw_iid());
        }
        sampler
    }
}

/// Stateful per-step delay assignment source. Draw order is fixed (support
/// pairs in row-major order, sources ascending), which makes the sequence a
/// pure function of `(kind, tau_d, seed, support)`.
#[derive(Debug, Clone)]
pub struct DelaySampler {
    kind: DelayKind,
    tau_d: u32,
    rng: SplitMix64,
    support: Vec<(usize, usize)>,
    sources: Vec<usize>,
    fixed: Option<DelayAssignment>,
}

impl DelaySampler {
    fn draw_iid(&mut self) -> DelayAssignment {
        let bound = self.tau_d as u64 + 1;
        let mut delays = BTreeMap::new();
        for &pair in &self.support {
            delays.insert(pair, self.rng.next_below(bound) as u32);
        }
        DelayAssignment::new(self.tau_d, delays).expect("draws stay within tau_d")
    }

    fn draw_shared(&mut self) -> DelayAssignment {
        let bound = self.tau_d as u64 + 1;
        let mut per_source = BTreeMap::new();
        for &j in &self.sources {
            per_source.insert(j, self.rng.next_below(bound) as u32);
        }
        let delays = self
            .support
            .iter()
            .map(|&(i, j)| ((i, j), per_source[&j]))
            .collect();
        DelayAssignment::new(self.tau_d, delays).expect("draws stay within tau_d")
    }

    pub fn next_assignment(&mut self) -> DelayAssignment {
        match self.kind {
            DelayKind::None => {
                let delays = self.support.iter().map(|&p| (p, 0)).collect();
                DelayAssignment::new(0, delays).expect("all-zero assignment is valid")
            }
            DelayKind::Uniform => self.draw_iid(),
            DelayKind::Fixed => self
                .fixed
                .clone()
                .expect("fixed assignment drawn at creation"),
            DelayKind::Shared => self.draw_shared(),
        }
    }
}

/// Consensus detection result: first step at which the state spread fell
/// below tolerance, plus the agreed value (mean of entries at that step).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Consensus {
    pub step: usize,
    pub value: f64,
    pub spread: f64,
}

/// Time-indexed state sequence with per-step 2-norms and consensus metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub states: Vec<Vec<f64>>,
    pub norm_track: Vec<f64>,
    pub consensus: Option<Consensus>,
}

impl Trajectory {
    fn from_states(states: Vec<Vec<f64>>, ctol: f64) -> Self {
        let norm_track = states
            .iter()
            .map(|x| x.iter().map(|v| v * v).sum::<f64>().sqrt())
            .collect();
        let consensus = detect_consensus(&states, ctol);
        Trajectory {
            states,
            norm_track,
            consensus,
        }
    }

    pub fn final_state(&self) -> &[f64] {
        self.states
            .last()
            .expect("trajectory holds at least the initial state")
    }
}

/// First step whose max-min spread is below `ctol`; the value is the mean of
/// the state entries there.
pub fn detect_consensus(states: &[Vec<f64>], ctol: f64) -> Option<Consensus> {
    for (k, x) in states.iter().enumerate() {
        let max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = x.iter().copied().fold(f64::INFINITY, f64::min);
        let spread = max - min;
        if spread < ctol {
            let value = x.iter().sum::<f64>() / x.len() as f64;
            return Some(Consensus {
                step: k,
                value,
                spread,
            });
        }
    }
    None
}

/// Synchronous iteration `x(k+1) = F x(k)` for `steps` steps.
pub fn run_sync(f: &RowStochasticMatrix, x0: &[f64], steps: usize, ctol: f64) -> Trajectory {
    assert_eq!(f.dim(), x0.len(), "state dimension mismatch");
    let mut states = Vec::with_capacity(steps + 1);
    states.push(x0.to_vec());
    for k in 0..steps {
        let next = f.mat().matvec(&states[k]);
        states.push(next);
    }
    Trajectory::from_states(states, ctol)
}

/// Asynchronous iteration: each step draws a delay assignment and every
/// agent reads neighbor `j`'s state `d_ij` steps stale (pre-history reads
/// resolve to `x0`). With `kind = none` this reduces bitwise to [`run_sync`].
pub fn run_async(
    f: &RowStochasticMatrix,
    x0: &[f64],
    dm: &DelayModel,
    steps: usize,
    ctol: f64,
) -> Result<Trajectory, SwitchedError> {
    assert_eq!(f.dim(), x0.len(), "state dimension mismatch");
    let n = f.dim();
    let tau = dm.effective_tau_d();
    let mut sampler = dm.sampler(f);
    let mut states: Vec<Vec<f64>> = Vec::with_capacity(steps + 1);
    states.push(x0.to_vec());
    for k in 0..steps {
        let assignment = sampler.next_assignment();
        let mut next = vec![0.0; n];
        #[allow(clippy::needless_range_loop)]
        for i in 0..n {
            let mut acc = 0.0;
            // Accumulation order mirrors the augmented-system matrix-vector
            // product (columns by delay block, then agent), so the switched
            // module reproduces this trajectory bit for bit.
            for d in 0..=tau {
                let src = &states[k.saturating_sub(d as usize)];
                for j in 0..n {
                    let coeff = if d == 0 && j == i {
                        f.get(i, i)
                    } else if j != i && assignment.delay(i, j) == Some(d) {
                        f.get(i, j)
                    } else {
                        0.0
                    };
                    acc += coeff * src[j];
                }
            }
            next[i] = acc;
        }
        states.push(next);
    }
    Ok(Trajectory::from_states(states, ctol))
}

/// One Monte Carlo sample: the derived seed, the consensus verdict, and the
/// per-step 2-norm track.
#[derive(Debug, Clone)]
pub struct EnsembleSample {
    pub sample_id: usize,
    pub seed: u64,
    pub consensus: Option<Consensus>,
    pub norm_track: Vec<f64>,
}

/// Order-independent aggregate over an ensemble of asynchronous runs.
#[derive(Debug, Clone)]
pub struct EnsembleSummary {
    pub samples: Vec<EnsembleSample>,
    pub non_converged: usize,
    pub mean: Option<f64>,
    pub std: Option<f64>,
    pub min: Option<f64>,
    pub max: Option<f64>,
}

impl EnsembleSummary {
    pub fn consensus_values(&self) -> Vec<f64> {
        self.samples
            .iter()
            .filter_map(|s| s.consensus.map(|c| c.value))
            .collect()
    }
}

/// Runs `samples` independent asynchronous simulations. Sample `s` uses the
/// seed `mix(master ^ mix(s))`, so the ensemble is reproducible regardless
/// of evaluation order or parallel schedule.
pub fn monte_carlo(
    f: &RowStochasticMatrix,
    x0: &[f64],
    dm_template: &DelayModel,
    samples: usize,
    steps: usize,
    ctol: f64,
) -> Result<EnsembleSummary, SwitchedError> {
    assert!(samples >= 1, "at least one sample required");
    let mut out = Vec::with_capacity(samples);
    for s in 0..samples {
        let seed = sample_seed(dm_template.seed, s as u64);
        let dm = DelayModel {
            seed,
            ..*dm_template
        };
        let t = run_async(f, x0, &dm, steps, ctol)?;
        out.push(EnsembleSample {
            sample_id: s,
            seed,
            consensus: t.consensus,
            norm_track: t.norm_track,
        });
    }
    let values: Vec<f64> = out
        .iter()
        .filter_map(|s| s.consensus.map(|c| c.value))
        .collect();
    let non_converged = samples - values.len();
    let (mean, std, min, max) = if values.is_empty() {
        (None, None, None, None)
    } else {
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / values.len() as f64;
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (Some(mean), Some(var.sqrt()), Some(min), Some(max))
    };
    Ok(EnsembleSummary {
        samples: out,
        non_converged,
        mean,
        std,
        min,
        max,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::matrix::Mat;

    #[test]
    fn sync_example2_reaches_three() {
        let f = fixtures::example2_matrix();
        let t = run_sync(&f, &fixtures::EXAMPLE_X0, 500, CONSENSUS_TOL);
        let c = t.consensus.expect("example 2 converges");
        assert!((c.value - 3.0).abs() < 1e-7, "value {}", c.value);
    }

    #[test]
    fn sync_identity_is_constant() {
        let f = RowStochasticMatrix::new(Mat::identity(3)).unwrap();
        let t = run_sync(&f, &[1.0, 2.0, 3.0], 10, CONSENSUS_TOL);
        assert_eq!(t.final_state(), &[1.0, 2.0, 3.0]);
        assert!(t.consensus.is_none());
        let t2 = run_sync(&f, &[2.0, 2.0, 2.0], 10, CONSENSUS_TOL);
        assert_eq!(t2.consensus.unwrap().step, 0);
    }

    #[test]
    fn sync_example1_matches_mu_prediction() {
        let f = fixtures::example1_matrix();
        let mu = crate::stochastic::consensus_weights(&f, 1e-9).unwrap();
        let predicted = mu.predict(&fixtures::EXAMPLE_X0);
        // rounded mu gives 0.32*3 + 0.35*2 + 0.02*1 + 0.14*3 + 0.17*5 = 2.95
        assert!((predicted - 2.95).abs() < 0.05);
        let t = run_sync(&f, &fixtures::EXAMPLE_X0, 1000, CONSENSUS_TOL);
        let c = t.consensus.unwrap();
        assert!((c.value - predicted).abs() < 1e-8);
    }

    #[test]
    fn async_none_equals_sync_bitwise() {
        let f = fixtures::example1_matrix();
        let sync = run_sync(&f, &fixtures::EXAMPLE_X0, 200, CONSENSUS_TOL);
        let dm = DelayModel::synchronous();
        let asy = run_async(&f, &fixtures::EXAMPLE_X0, &dm, 200, CONSENSUS_TOL).unwrap();
        assert_eq!(sync.states, asy.states);
    }

    #[test]
    fn async_example2_hits_sync_value_any_seed() {
        let f = fixtures::example2_matrix();
        for seed in [1u64, 77, 4242] {
            let dm = DelayModel {
                kind: DelayKind::Uniform,
                tau_d: 5,
                seed,
            };
            let t = run_async(&f, &fixtures::EXAMPLE_X0, &dm, 1500, CONSENSUS_TOL).unwrap();
            let c = t.consensus.expect("leader topology converges under delays");
            assert!(
                (c.value - 3.0).abs() < 1e-6,
                "seed {seed}: value {}",
                c.value
            );
        }
    }

    #[test]
    fn async_example1_is_seed_sensitive() {
        let f = fixtures::example1_matrix();
        let run = |seed| {
            let dm = DelayModel {
                kind: DelayKind::Uniform,
                tau_d: 5,
                seed,
            };
            run_async(&f, &fixtures::EXAMPLE_X0, &dm, 1500, CONSENSUS_TOL)
                .unwrap()
                .consensus
                .expect("converges internally")
                .value
        };
        let (a, b) = (run(1), run(2));
        assert!((a - b).abs() > 1e-3, "values {a} vs {b} unexpectedly close");
    }

    #[test]
    fn determinism_same_seed_same_trajectory() {
        let f = fixtures::example1_matrix();
        let dm = DelayModel {
            kind: DelayKind::Uniform,
            tau_d: 3,
            seed: 99,
        };
        let a = run_async(&f, &fixtures::EXAMPLE_X0, &dm, 300, CONSENSUS_TOL).unwrap();
        let b = run_async(&f, &fixtures::EXAMPLE_X0, &dm, 300, CONSENSUS_TOL).unwrap();
        assert_eq!(a.states, b.states);
    }

    #[test]
    fn fixed_kind_reuses_one_assignment() {
        let f = fixtures::example1_matrix();
        let dm = DelayModel {
            kind: DelayKind::Fixed,
            tau_d: 4,
            seed: 5,
        };
        let mut s = dm.sampler(&f);
        let a = s.next_assignment();
        let b = s.next_assignment();
        assert_eq!(a, b);
    }

    #[test]
    fn shared_kind_agrees_across_readers() {
        let f = fixtures::example1_matrix();
        let dm = DelayModel {
            kind: DelayKind::Shared,
            tau_d: 4,
            seed: 5,
        };
        let mut s = dm.sampler(&f);
        let a = s.next_assignment();
        for (&(_, j), &d) in a.delays() {
            for (&(_, j2), &d2) in a.delays() {
                if j == j2 {
                    assert_eq!(d, d2);
                }
            }
        }
    }

    #[test]
    fn uniform_initial_state_stays_constant_under_delays() {
        let f = fixtures::example1_matrix();
        let dm = DelayModel {
            kind: DelayKind::Uniform,
            tau_d: 5,
            seed: 3,
        };
        let t = run_async(&f, &[2.0; 5], &dm, 50, CONSENSUS_TOL).unwrap();
        for x in &t.states {
            for &v in x {
                assert!((v - 2.0).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn sync_envelope_is_monotone() {
        let f = fixtures::example1_matrix();
        let t = run_sync(&f, &fixtures::EXAMPLE_X0, 200, CONSENSUS_TOL);
        let mut prev_max = f64::INFINITY;
        let mut prev_min = f64::NEG_INFINITY;
        for x in &t.states {
            let max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let min = x.iter().copied().fold(f64::INFINITY, f64::min);
            assert!(max <= prev_max + 1e-12);
            assert!(min >= prev_min - 1e-12);
            prev_max = max;
            prev_min = min;
        }
    }

    #[test]
    fn async_history_envelope_is_non_expanding() {
        let f = fixtures::example1_matrix();
        let dm = DelayModel {
            kind: DelayKind::Uniform,
            tau_d: 5,
            seed: 11,
        };
        let t = run_async(&f, &fixtures::EXAMPLE_X0, &dm, 300, CONSENSUS_TOL).unwrap();
        let window = 6usize;
        let env = |k: usize| {
            let lo = k.saturating_sub(window - 1);
            let mut max = f64::NEG_INFINITY;
            let mut min = f64::INFINITY;
            for x in &t.states[lo..=k] {
                for &v in x {
                    max = max.max(v);
                    min = min.min(v);
                }
            }
            (min, max)
        };
        for k in window..t.states.len() {
            let (lo_prev, hi_prev) = env(k - 1);
            let (lo, hi) = env(k);
            assert!(hi <= hi_prev + 1e-12);
            assert!(lo >= lo_prev - 1e-12);
        }
    }

    #[test]
    fn monte_carlo_single_sample_matches_run_async() {
        let f = fixtures::example1_matrix();
        let dm = DelayModel {
            kind: DelayKind::Uniform,
            tau_d: 5,
            seed: 42,
        };
        let mc = monte_carlo(&f, &fixtures::EXAMPLE_X0, &dm, 1, 800, CONSENSUS_TOL).unwrap();
        let seed0 = sample_seed(42, 0);
        let single = run_async(
            &f,
            &fixtures::EXAMPLE_X0,
            &DelayModel { seed: seed0, ..dm },
            800,
            CONSENSUS_TOL,
        )
        .unwrap();
        assert_eq!(mc.samples[0].consensus, single.consensus);
        assert_eq!(mc.samples[0].norm_track, single.norm_track);
        assert_eq!(mc.mean, single.consensus.map(|c| c.value));
    }

    #[test]
    fn monte_carlo_example2_is_degenerate_at_three() {
        let f = fixtures::example2_matrix();
        let dm = DelayModel {
            kind: DelayKind::Uniform,
            tau_d: 5,
            seed: 7,
        };
        let mc = monte_carlo(&f, &fixtures::EXAMPLE_X0, &dm, 30, 1500, CONSENSUS_TOL).unwrap();
        assert_eq!(mc.non_converged, 0);
        for v in mc.consensus_values() {
            assert!((v - 3.0).abs() < 1e-6);
        }
        assert!(mc.std.unwrap() < 1e-6);
    }

    #[test]
    fn detect_consensus_permutation_never_settles() {
        let f =
            RowStochasticMatrix::new(Mat::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]])).unwrap();
        let t = run_sync(&f, &[0.0, 1.0], 100, CONSENSUS_TOL);
        assert!(t.consensus.is_none());
    }
}
