//! Directed weighted interaction graphs: parsing, row normalization, and
//! structural classification (leaders, spanning trees, leader-rooted form).
//!
//! Convention used everywhere in this crate: `f_ij` is the weight agent `i`
//! places on agent `j`'s information, so the influence digraph has an edge
//! `j -> i` whenever `f_ij > 0` with `i != j`.

use crate::matrix::Mat;
use crate::stochastic::RowStochasticMatrix;
use serde::Deserialize;
use std::path::Path;
use thiserror::Error;

/// Tolerance for recognizing an identity row as a leader.
pub const LEADER_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum TopologyError {
    #[error("matrix row {row} has {got} entries, expected {expected}")]
    NonSquare {
        row: usize,
        expected: usize,
        got: usize,
    },
    #[error("negative weight {value} at row {row}, column {col}")]
    NegativeWeight { row: usize, col: usize, value: f64 },
    #[error("zero row: row {row} has no positive entry")]
    ZeroRow { row: usize },
    #[error("empty topology: no matrix rows found")]
    Empty,
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid JSON topology: {0}")]
    Json(String),
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("not in m-rooted leader form: {reason}")]
    NotLeaderForm { reason: String },
}

/// Weighted directed interaction graph. Weights are nonnegative and every
/// row has at least one positive entry.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectedTopology {
    weights: Mat,
}

#[derive(Deserialize)]
struct JsonTopology {
    n: usize,
    weights: Vec<Vec<f64>>,
}

impl DirectedTopology {
    pub fn new(weights: Mat) -> Result<Self, TopologyError> {
        let n = weights.rows();
        if n == 0 {
            return Err(TopologyError::Empty);
        }
        if !weights.is_square() {
            return Err(TopologyError::NonSquare {
                row: 1,
                expected: n,
                got: weights.cols(),
            });
        }
        for i in 0..n {
            let mut row_sum = 0.0;
            for j in 0..n {
                let v = weights.get(i, j);
                if v < 0.0 {
                    return Err(TopologyError::NegativeWeight {
                        row: i + 1,
                        col: j + 1,
                        value: v,
                    });
                }
                row_sum += v;
            }
            if row_sum <= 0.0 {
                return Err(TopologyError::ZeroRow { row: i + 1 });
            }
        }
        Ok(DirectedTopology { weights })
    }

    /// Parses either the plain-text matrix format (one row per line, entries
    /// separated by commas or whitespace, `#` comments and blank lines
    /// ignored) or a JSON object `{"n": ..., "weights": [[...], ...]}`.
    pub fn parse(source: &str) -> Result<Self, TopologyError> {
        if source.trim_start().starts_with('{') {
            return Self::parse_json(source);
        }
        let mut rows: Vec<Vec<f64>> = Vec::new();
        let mut expected: Option<usize> = None;
        for (lineno, raw) in source.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut row = Vec::new();
            for tok in line.split(|c: char| c == ',' || c.is_whitespace()) {
                let tok = tok.trim();
                if tok.is_empty() {
                    continue;
                }
                let v: f64 = tok.parse().map_err(|_| TopologyError::Parse {
                    line: lineno + 1,
                    message: format!("invalid number {tok:?}"),
                })?;
                row.push(v);
            }
            if let Some(e) = expected {
                if row.len() != e {
                    return Err(TopologyError::NonSquare {
                        row: rows.len() + 1,
                        expected: e,
                        got: row.len(),
                    });
                }
            } else {
                expected = Some(row.len());
            }
            rows.push(row);
        }
        if rows.is_empty() {
            return Err(TopologyError::Empty);
        }
        let n = expected.unwrap();
        if rows.len() != n {
            return Err(TopologyError::NonSquare {
                row: rows.len(),
                expected: n,
                got: rows.len(),
            });
        }
        Self::new(Mat::from_rows(&rows))
    }

    fn parse_json(source: &str) -> Result<Self, TopologyError> {
        let parsed: JsonTopology =
            serde_json::from_str(source).map_err(|e| TopologyError::Json(e.to_string()))?;
        if parsed.weights.len() != parsed.n {
            return Err(TopologyError::NonSquare {
                row: parsed.weights.len(),
                expected: parsed.n,
                got: parsed.weights.len(),
            });
        }
        for (i, row) in parsed.weights.iter().enumerate() {
            if row.len() != parsed.n {
                return Err(TopologyError::NonSquare {
                    row: i + 1,
                    expected: parsed.n,
                    got: row.len(),
                });
            }
        }
        Self::new(Mat::from_rows(&parsed.weights))
    }

    pub fn load(path: &Path) -> Result<Self, TopologyError> {
        let text = std::fs::read_to_string(path).map_err(|source| TopologyError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn n(&self) -> usize {
        self.weights.rows()
    }

    pub fn weights(&self) -> &Mat {
        &self.weights
    }

    pub fn nonzero_count(&self) -> usize {
        self.weights.data().iter().filter(|&&v| v != 0.0).count()
    }

    /// Plain-text serialization that re-parses to an identical matrix.
    pub fn to_text(&self) -> String {
        let n = self.n();
        let mut out = String::new();
        for i in 0..n {
            let row: Vec<String> = (0..n)
                .map(|j| format!("{}", self.weights.get(i, j)))
                .collect();
            out.push_str(&row.join(", "));
            out.push('\n');
        }
        out
    }
}

/// Normalizes each row by its sum: `f_ij = a_ij / sum_j a_ij`. The zero
/// pattern is preserved.
pub fn row_normalize(t: &DirectedTopology) -> RowStochasticMatrix {
    let n = t.n();
    let mut out = Mat::zeros(n, n);
    for i in 0..n {
        let sum: f64 = t.weights().row(i).iter().sum();
        for j in 0..n {
            let a = t.weights().get(i, j);
            // Keep exact zeros exact.
            out.set(i, j, if a == 0.0 { 0.0 } else { a / sum });
        }
    }
    RowStochasticMatrix::new(out).expect("row normalization yields a row-stochastic matrix")
}

/// Indices (0-based) of leader agents: rows equal to the corresponding
/// standard basis vector within [`LEADER_TOL`].
pub fn find_leaders(f: &RowStochasticMatrix) -> Vec<usize> {
    let n = f.dim();
    (0..n)
        .filter(|&i| {
            (f.get(i, i) - 1.0).abs() <= LEADER_TOL
                && (0..n).all(|j| j == i || f.get(i, j).abs() <= LEADER_TOL)
        })
        .collect()
}

/// Structural classification of a row-stochastic interaction matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct RootedStructure {
    /// Leader indices, 0-based, ascending.
    pub leaders: Vec<usize>,
    pub m: usize,
    /// Some single node reaches all others along influence edges.
    pub has_spanning_tree: bool,
    /// At least one leader exists and every non-leader is influenced,
    /// directly or transitively, by some leader.
    pub is_m_rooted_leader_form: bool,
}

fn reachable_from(f: &RowStochasticMatrix, starts: &[usize]) -> Vec<bool> {
    let n = f.dim();
    let mut seen = vec![false; n];
    let mut queue: Vec<usize> = Vec::new();
    for &s in starts {
        if !seen[s] {
            seen[s] = true;
            queue.push(s);
        }
    }
    while let Some(j) = queue.pop() {
        // influence edge j -> i exists when f_ij > 0, i != j
        #[allow(clippy::needless_range_loop)]
        for i in 0..n {
            if i != j && f.get(i, j) > 0.0 && !seen[i] {
                seen[i] = true;
                queue.push(i);
            }
        }
    }
    seen
}

pub fn classify_roots(f: &RowStochasticMatrix) -> RootedStructure {
    let n = f.dim();
    let leaders = find_leaders(f);
    let has_spanning_tree = (0..n).any(|r| reachable_from(f, &[r]).iter().all(|&s| s));
    let is_m_rooted_leader_form = !leaders.is_empty() && {
        let seen = reachable_from(f, &leaders);
        seen.iter().all(|&s| s)
    };
    RootedStructure {
        m: leaders.len(),
        leaders,
        has_spanning_tree,
        is_m_rooted_leader_form,
    }
}

/// Permutes agents so leaders come first, yielding the block form
/// `[[I, 0], [X, Y]]`. Returns the permutation (`perm[new] = old`) together
/// with the reordered matrix.
pub fn reorder_leaders_first(
    f: &RowStochasticMatrix,
) -> Result<(Vec<usize>, RowStochasticMatrix), TopologyError> {
    let structure = classify_roots(f);
    if structure.leaders.is_empty() {
        return Err(TopologyError::NotLeaderForm {
            reason: "no leader (identity) rows".into(),
        });
    }
    if !structure.is_m_rooted_leader_form {
        return Err(TopologyError::NotLeaderForm {
            reason: "some non-leader is not influenced by any leader".into(),
        });
    }
    let n = f.dim();
    let mut perm = structure.leaders.clone();
    perm.extend((0..n).filter(|i| !structure.leaders.contains(i)));
    let mut out = Mat::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            out.set(i, j, f.get(perm[i], perm[j]));
        }
    }
    let reordered = RowStochasticMatrix::new(out).expect("permutation preserves row-stochasticity");
    Ok((perm, reordered))
}

/// Applies the inverse of `perm` (as returned by [`reorder_leaders_first`])
/// to a matrix in reordered coordinates, recovering original agent order.
pub fn unpermute(m: &Mat, perm: &[usize]) -> Mat {
    let n = perm.len();
    let mut out = Mat::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            out.set(perm[i], perm[j], m.get(i, j));
        }
    }
    out
}
