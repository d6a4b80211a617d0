//! Property tests for the structural invariants the rest of the crate
//! leans on.

use acsim::matrix::Mat;
use acsim::sim::{run_async, run_sync, DelayKind, DelayModel, CONSENSUS_TOL};
use acsim::stochastic::{is_row_stochastic, product, RowStochasticMatrix};
use acsim::switched::{modal_matrix, DelayAssignment};
use acsim::topology::{classify_roots, row_normalize, DirectedTopology};
use proptest::prelude::*;
use std::collections::BTreeMap;

/// Square nonnegative weight matrix with no zero rows.
fn weight_matrix(max_n: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    (2..=max_n).prop_flat_map(|n| {
        proptest::collection::vec(
            proptest::collection::vec(0.0f64..10.0, n).prop_map(|mut row| {
                if row.iter().all(|&v| v == 0.0) {
                    row[0] = 1.0;
                }
                row
            }),
            n,
        )
    })
}

fn normalize(rows: Vec<Vec<f64>>) -> RowStochasticMatrix {
    let t = DirectedTopology::new(Mat::from_rows(&rows)).expect("rows are valid weights");
    row_normalize(&t)
}

fn stochastic_matrix(max_n: usize) -> impl Strategy<Value = RowStochasticMatrix> {
    weight_matrix(max_n).prop_map(normalize)
}

/// Two stochastic matrices of the same (shared) dimension.
fn stochastic_pair(
    max_n: usize,
) -> impl Strategy<Value = (RowStochasticMatrix, RowStochasticMatrix)> {
    (2..=max_n).prop_flat_map(|n| {
        let rows = || {
            proptest::collection::vec(
                proptest::collection::vec(0.0f64..10.0, n).prop_map(|mut row| {
                    if row.iter().all(|&v| v == 0.0) {
                        row[0] = 1.0;
                    }
                    row
                }),
                n,
            )
        };
        (rows().prop_map(normalize), rows().prop_map(normalize))
    })
}

proptest! {
    #[test]
    fn row_normalize_yields_stochastic_rows(rows in weight_matrix(8)) {
        let t = DirectedTopology::new(Mat::from_rows(&rows)).unwrap();
        let f = row_normalize(&t);
        prop_assert!(is_row_stochastic(f.mat(), 1e-12));
        // zero weights stay exactly zero
        for (i, row) in rows.iter().enumerate() {
            for (j, &w) in row.iter().enumerate() {
                if w == 0.0 {
                    prop_assert_eq!(f.get(i, j), 0.0);
                }
            }
        }
    }

    #[test]
    fn products_stay_row_stochastic((a, b) in stochastic_pair(6)) {
        let p = product(&a, &b).unwrap();
        prop_assert!(is_row_stochastic(p.mat(), 1e-12));
    }

    #[test]
    fn classification_is_permutation_invariant(
        f in stochastic_matrix(6),
        perm_seed in any::<u64>(),
    ) {
        let n = f.dim();
        // Fisher-Yates on indices driven by the seed
        let mut perm: Vec<usize> = (0..n).collect();
        let mut state = perm_seed | 1;
        for i in (1..n).rev() {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
            let j = (state >> 33) as usize % (i + 1);
            perm.swap(i, j);
        }
        let mut permuted = Mat::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                permuted.set(i, j, f.get(perm[i], perm[j]));
            }
        }
        let g = RowStochasticMatrix::new(permuted).unwrap();

        let a = classify_roots(&f);
        let b = classify_roots(&g);
        prop_assert_eq!(a.has_spanning_tree, b.has_spanning_tree);
        prop_assert_eq!(a.is_m_rooted_leader_form, b.is_m_rooted_leader_form);
        prop_assert_eq!(a.m, b.m);
        // leader sets correspond through the permutation
        let mapped: Vec<usize> = {
            let mut v: Vec<usize> = b.leaders.iter().map(|&i| perm[i]).collect();
            v.sort_unstable();
            v
        };
        prop_assert_eq!(a.leaders, mapped);
    }

    #[test]
    fn modal_matrices_are_row_stochastic(
        f in stochastic_matrix(5),
        tau_d in 0u32..4,
        raw in proptest::collection::vec(0u32..4, 25),
    ) {
        let support = f.off_diagonal_support();
        let delays: BTreeMap<(usize, usize), u32> = support
            .iter()
            .enumerate()
            .map(|(idx, &p)| (p, raw[idx % raw.len()] % (tau_d + 1)))
            .collect();
        let d = DelayAssignment::new(tau_d, delays).unwrap();
        let w = modal_matrix(&f, &d).unwrap();
        prop_assert!(is_row_stochastic(w.matrix().mat(), 1e-12));
        prop_assert_eq!(w.dim(), f.dim() * (tau_d as usize + 1));
    }

    #[test]
    fn async_states_stay_in_initial_hull(
        f in stochastic_matrix(5),
        tau_d in 0u32..4,
        seed in any::<u64>(),
    ) {
        let n = f.dim();
        let x0: Vec<f64> = (0..n).map(|i| i as f64 - 1.5).collect();
        let lo = x0.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = x0.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let dm = DelayModel { kind: DelayKind::Uniform, tau_d, seed };
        let t = run_async(&f, &x0, &dm, 60, CONSENSUS_TOL).unwrap();
        for x in &t.states {
            for &v in x {
                // convex combinations of history never leave the hull
                prop_assert!(v >= lo - 1e-12 && v <= hi + 1e-12);
            }
        }
    }

    #[test]
    fn leader_values_never_change(
        seed in any::<u64>(),
        tau_d in 0u32..4,
    ) {
        let f = acsim::fixtures::example2_matrix();
        let dm = DelayModel { kind: DelayKind::Uniform, tau_d, seed };
        let t = run_async(&f, &acsim::fixtures::EXAMPLE_X0, &dm, 100, CONSENSUS_TOL).unwrap();
        for x in &t.states {
            prop_assert_eq!(x[0], 3.0);
            prop_assert_eq!(x[3], 3.0);
        }
    }

    #[test]
    fn sync_equals_async_with_no_delays(f in stochastic_matrix(6), seed in any::<u64>()) {
        let n = f.dim();
        let x0: Vec<f64> = (0..n).map(|i| (i * i) as f64).collect();
        let sync = run_sync(&f, &x0, 30, CONSENSUS_TOL);
        let dm = DelayModel { kind: DelayKind::None, tau_d: 3, seed };
        let asynch = run_async(&f, &x0, &dm, 30, CONSENSUS_TOL).unwrap();
        prop_assert_eq!(sync.states, asynch.states);
    }
}
