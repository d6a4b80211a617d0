//! Row-stochastic matrix algebra: products, spectral radii, stationary
//! limits, and the consensus weight vector.

use crate::matrix::{Mat, MatrixError};
use thiserror::Error;

/// Default entrywise tolerance for row-stochasticity checks.
pub const STOCHASTIC_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum StochasticError {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not row-stochastic: {reason}")]
    NotStochastic { reason: String },
    #[error("dimension mismatch: {left} vs {right}")]
    DimMismatch { left: usize, right: usize },
    #[error(
        "spectral radius did not converge within {max_iter} iterations \
         (best bracket [{lower:.6e}, {upper:.6e}])"
    )]
    SpectralNoConvergence {
        max_iter: usize,
        lower: f64,
        upper: f64,
    },
    #[error("stationary form does not exist: matrix powers oscillate (periodic chain)")]
    Oscillation,
    #[error("stationary limit not reached within {max_iter} squarings (residual {residual:.3e})")]
    SlowConvergence { max_iter: usize, residual: f64 },
    #[error("rows of the stationary form differ by {spread:.3e}: no rank-one stationary form (multi-leader case)")]
    NoRankOneForm { spread: f64 },
    #[error("leading {m} rows are not identity rows")]
    NotLeaderFirstForm { m: usize },
    #[error(transparent)]
    Matrix(#[from] MatrixError),
}

/// True iff every entry lies in `[-tol, 1+tol]` and every row sums to 1
/// within `tol`.
pub fn is_row_stochastic(m: &Mat, tol: f64) -> bool {
    if !m.is_square() {
        return false;
    }
    for i in 0..m.rows() {
        let mut sum = 0.0;
        for j in 0..m.cols() {
            let v = m.get(i, j);
            if v < -tol || v > 1.0 + tol {
                return false;
            }
            sum += v;
        }
        if (sum - 1.0).abs() > tol {
            return false;
        }
    }
    true
}

/// A square nonnegative matrix with unit row sums, validated at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct RowStochasticMatrix {
    mat: Mat,
}

impl RowStochasticMatrix {
    pub fn new(mat: Mat) -> Result<Self, StochasticError> {
        Self::with_tolerance(mat, STOCHASTIC_TOL)
    }

    /// Construction with a caller-chosen tolerance. Long product chains
    /// accumulate rounding in the row sums, so chain code validates at a
    /// looser tolerance than fresh input does.
    pub fn with_tolerance(mat: Mat, tol: f64) -> Result<Self, StochasticError> {
        if !mat.is_square() {
            return Err(StochasticError::NotSquare {
                rows: mat.rows(),
                cols: mat.cols(),
            });
        }
        for i in 0..mat.rows() {
            let mut sum = 0.0;
            for j in 0..mat.cols() {
                let v = mat.get(i, j);
                if v < -tol {
                    return Err(StochasticError::NotStochastic {
                        reason: format!("negative entry {v} at ({}, {})", i + 1, j + 1),
                    });
                }
                sum += v;
            }
            if (sum - 1.0).abs() > tol {
                return Err(StochasticError::NotStochastic {
                    reason: format!("row {} sums to {sum}", i + 1),
                });
            }
        }
        Ok(RowStochasticMatrix { mat })
    }

    pub fn dim(&self) -> usize {
        self.mat.rows()
    }

    pub fn mat(&self) -> &Mat {
        &self.mat
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.mat.get(i, j)
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.mat.row(i)
    }

    /// Off-diagonal support: pairs `(i, j)`, `i != j`, with `f_ij > 0`.
    pub fn off_diagonal_support(&self) -> Vec<(usize, usize)> {
        let n = self.dim();
        let mut support = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if i != j && self.get(i, j) > 0.0 {
                    support.push((i, j));
                }
            }
        }
        support
    }
}

/// Product of two row-stochastic matrices; closed under multiplication.
pub fn product(
    a: &RowStochasticMatrix,
    b: &RowStochasticMatrix,
) -> Result<RowStochasticMatrix, StochasticError> {
    if a.dim() != b.dim() {
        return Err(StochasticError::DimMismatch {
            left: a.dim(),
            right: b.dim(),
        });
    }
    RowStochasticMatrix::with_tolerance(a.mat().matmul(b.mat()), 1e-9)
}

/// Spectral radius estimate for a nonnegative matrix.
#[derive(Debug, Clone, Copy)]
pub struct SpectralEstimate {
    pub value: f64,
    pub converged: bool,
    pub iterations: usize,
}

/// Spectral radius of a nonnegative square matrix by power iteration with
/// Collatz-Wielandt brackets, falling back to Gelfand's formula
/// `rho = lim ||M^k||^(1/k)` (evaluated by repeated squaring) when the
/// iteration fails to settle.
pub fn spectral_radius(
    m: &Mat,
    tol: f64,
    max_iter: usize,
) -> Result<SpectralEstimate, StochasticError> {
    assert!(m.is_square(), "spectral_radius requires a square matrix");
    debug_assert!(
        m.data().iter().all(|&v| v >= 0.0),
        "entries must be nonnegative"
    );
    let n = m.rows();
    if n == 0 {
        return Ok(SpectralEstimate {
            value: 0.0,
            converged: true,
            iterations: 0,
        });
    }

    let mut x = vec![1.0 / n as f64; n];
    let mut best = (0.0f64, f64::INFINITY);
    for it in 0..max_iter {
        let y = m.matvec(&x);
        let norm: f64 = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Ok(SpectralEstimate {
                value: 0.0,
                converged: true,
                iterations: it,
            });
        }
        // Collatz-Wielandt bracket; valid only while the iterate is positive.
        if x.iter().all(|&v| v > 0.0) {
            let mut lo = f64::INFINITY;
            let mut hi = 0.0f64;
            for i in 0..n {
                let r = y[i] / x[i];
                lo = lo.min(r);
                hi = hi.max(r);
            }
            if hi - lo < best.1 - best.0 {
                best = (lo, hi);
            }
            if hi - lo <= tol {
                return Ok(SpectralEstimate {
                    value: 0.5 * (lo + hi),
                    converged: true,
                    iterations: it + 1,
                });
            }
        }
        for i in 0..n {
            x[i] = y[i] / norm;
        }
        // Power iteration stalls on oscillatory or defective spectra; hand
        // over to Gelfand once it has had a fair chance.
        if it >= 200 {
            break;
        }
    }

    // Gelfand fallback via repeated squaring with norm scaling:
    // maintain A = M^k / exp(logscale), ||A||_inf = 1.
    let mut a = m.clone();
    let mut logscale = 0.0f64;
    let mut k = 1u64;
    let mut prev = f64::INFINITY;
    for it in 0..64 {
        let norm = a.inf_norm();
        if norm == 0.0 {
            return Ok(SpectralEstimate {
                value: 0.0,
                converged: true,
                iterations: it,
            });
        }
        logscale += norm.ln();
        a = a.scale(1.0 / norm);
        let est = (logscale / k as f64).exp();
        if (est - prev).abs() <= tol {
            return Ok(SpectralEstimate {
                value: est,
                converged: true,
                iterations: it + 1,
            });
        }
        prev = est;
        a = a.matmul(&a);
        logscale *= 2.0;
        k *= 2;
    }
    Err(StochasticError::SpectralNoConvergence {
        max_iter,
        lower: best.0.min(prev),
        upper: best.1.max(prev),
    })
}

/// Stationary form `F* = lim F^k` by repeated squaring.
///
/// Convergence is declared when successive squarings agree entrywise within
/// `tol`. A fixed point of squaring that is not invariant under one more
/// multiplication by `F` indicates a periodic chain, which has no limit.
pub fn stationary(
    f: &RowStochasticMatrix,
    tol: f64,
    max_iter: usize,
) -> Result<RowStochasticMatrix, StochasticError> {
    let mut g = f.mat().clone();
    let mut residual = f64::INFINITY;
    for _ in 0..max_iter.min(64) {
        let g2 = g.matmul(&g);
        residual = g2.max_abs_diff(&g);
        g = g2;
        if residual < tol {
            // Squaring converged to G; the true limit exists only if G is a
            // fixed point of the single-step map as well.
            let gf = g.matmul(f.mat());
            if gf.max_abs_diff(&g) > 1e3 * tol.max(1e-14) {
                return Err(StochasticError::Oscillation);
            }
            return RowStochasticMatrix::with_tolerance(g, 1e-9);
        }
    }
    Err(StochasticError::SlowConvergence { max_iter, residual })
}

/// Closed-form stationary matrix for a leader-first block matrix
/// `[[I, 0], [X, Y]]`: the follower block of the limit is `(I - Y)^{-1} X`
/// and the follower-follower block vanishes.
pub fn stationary_closed_form(
    f_ordered: &RowStochasticMatrix,
    m: usize,
) -> Result<RowStochasticMatrix, StochasticError> {
    let n = f_ordered.dim();
    assert!(m <= n, "leader count exceeds dimension");
    for i in 0..m {
        for j in 0..n {
            let want = if i == j { 1.0 } else { 0.0 };
            if (f_ordered.get(i, j) - want).abs() > STOCHASTIC_TOL {
                return Err(StochasticError::NotLeaderFirstForm { m });
            }
        }
    }
    let mut star = Mat::zeros(n, n);
    for i in 0..m {
        star.set(i, i, 1.0);
    }
    if m < n {
        let x = f_ordered.mat().block(m, 0, n - m, m);
        let y = f_ordered.mat().block(m, m, n - m, n - m);
        let i_minus_y = Mat::identity(n - m).sub(&y);
        let r_star = Mat::solve(&i_minus_y, &x)?;
        for i in 0..n - m {
            for j in 0..m {
                star.set(m + i, j, r_star.get(i, j));
            }
        }
    }
    RowStochasticMatrix::with_tolerance(star, 1e-9)
}

/// Consensus weight vector: nonnegative, sums to one.
#[derive(Debug, Clone, PartialEq)]
pub struct ConsensusWeights {
    mu: Vec<f64>,
}

impl ConsensusWeights {
    pub fn as_slice(&self) -> &[f64] {
        &self.mu
    }

    /// Predicted synchronous consensus value `mu . x0`.
    pub fn predict(&self, x0: &[f64]) -> f64 {
        self.mu.iter().zip(x0).map(|(m, x)| m * x).sum()
    }
}

/// Extracts the consensus weights `mu` from the rank-one stationary form
/// `F* = 1 mu^T`. Fails when the stationary rows differ (multi-leader case);
/// use [`stationary_closed_form`] there instead.
pub fn consensus_weights(
    f: &RowStochasticMatrix,
    tol: f64,
) -> Result<ConsensusWeights, StochasticError> {
    let star = stationary(f, STOCHASTIC_TOL, 64)?;
    let n = star.dim();
    let mut spread = 0.0f64;
    for j in 0..n {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            lo = lo.min(star.get(i, j));
            hi = hi.max(star.get(i, j));
        }
        spread = spread.max(hi - lo);
    }
    if spread > tol {
        return Err(StochasticError::NoRankOneForm { spread });
    }
    // Average the rows; marginally more symmetric than picking one.
    let mu: Vec<f64> = (0..n)
        .map(|j| (0..n).map(|i| star.get(i, j)).sum::<f64>() / n as f64)
        .collect();
    Ok(ConsensusWeights { mu })
}

/// The asynchronous reachability margin `rho(|F - F*|)`; values below 1 mean
/// asynchronous consensus is attainable.
pub fn async_margin(
    f: &RowStochasticMatrix,
    f_star: &RowStochasticMatrix,
) -> Result<f64, StochasticError> {
    let diff = f.mat().sub(f_star.mat()).abs();
    Ok(spectral_radius(&diff, 1e-10, 100_000)?.value)
}
