//! Small dense row-major matrix type used throughout the crate.
//!
//! Everything here operates at desk scale (n up to a few hundred), so a plain
//! `Vec<f64>` backing store and textbook algorithms are sufficient.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MatrixError {
    #[error("dimension mismatch: {left} vs {right}")]
    DimMismatch { left: String, right: String },
    #[error("matrix is numerically singular (pivot {pivot:.3e} at column {col})")]
    Singular { col: usize, pivot: f64 },
}

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    /// Builds from nested rows. Panics if the rows are ragged; callers that
    /// ingest untrusted input validate shape beforehand.
    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = if r == 0 { 0 } else { rows[0].len() };
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            data.extend_from_slice(row);
        }
        Mat {
            rows: r,
            cols: c,
            data,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn matmul(&self, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.rows, "matmul dimension mismatch");
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for j in 0..other.cols {
                let mut acc = 0.0;
                for r in 0..self.cols {
                    acc += self.get(i, r) * other.get(r, j);
                }
                out.set(i, j, acc);
            }
        }
        out
    }

    /// Matrix-vector product. Accumulates each row dot product in column
    /// order; simulation code relies on this exact summation order for
    /// bit-level reproducibility.
    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, v.len(), "matvec dimension mismatch");
        let mut out = vec![0.0; self.rows];
        #[allow(clippy::needless_range_loop)]
        for i in 0..self.rows {
            let mut acc = 0.0;
            let row = self.row(i);
            for (a, x) in row.iter().zip(v) {
                acc += a * x;
            }
            out[i] = acc;
        }
        out
    }

    pub fn sub(&self, other: &Mat) -> Mat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a - b)
            .collect();
        Mat {
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }

    pub fn abs(&self) -> Mat {
        let data = self.data.iter().map(|a| a.abs()).collect();
        Mat {
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, a| m.max(a.abs()))
    }

    /// Entrywise sup-norm of the difference.
    pub fn max_abs_diff(&self, other: &Mat) -> f64 {
        self.sub(other).max_abs()
    }

    /// Induced infinity norm (max absolute row sum).
    pub fn inf_norm(&self) -> f64 {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(|a| a.abs()).sum::<f64>())
            .fold(0.0f64, f64::max)
    }

    pub fn scale(&self, s: f64) -> Mat {
        let data = self.data.iter().map(|a| a * s).collect();
        Mat {
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }

    /// Extracts the block with rows `r0..r0+nr` and columns `c0..c0+nc`.
    pub fn block(&self, r0: usize, c0: usize, nr: usize, nc: usize) -> Mat {
        let mut out = Mat::zeros(nr, nc);
        for i in 0..nr {
            for j in 0..nc {
                out.set(i, j, self.get(r0 + i, c0 + j));
            }
        }
        out
    }

    /// Solves A X = B by Gaussian elimination with partial pivoting.
    pub fn solve(a: &Mat, b: &Mat) -> Result<Mat, MatrixError> {
        assert!(a.is_square(), "solve requires a square system");
        if a.rows != b.rows {
            return Err(MatrixError::DimMismatch {
                left: format!("{}x{}", a.rows, a.cols),
                right: format!("{}x{}", b.rows, b.cols),
            });
        }
        let n = a.rows;
        let mut aug = a.clone();
        let mut rhs = b.clone();
        for col in 0..n {
            let (pivot_row, pivot) = (col..n)
                .map(|r| (r, aug.get(r, col)))
                .max_by(|x, y| x.1.abs().total_cmp(&y.1.abs()))
                .unwrap();
            if pivot.abs() < 1e-300 {
                return Err(MatrixError::Singular { col, pivot });
            }
            if pivot_row != col {
                for j in 0..n {
                    let (x, y) = (aug.get(col, j), aug.get(pivot_row, j));
                    aug.set(col, j, y);
                    aug.set(pivot_row, j, x);
                }
                for j in 0..rhs.cols {
                    let (x, y) = (rhs.get(col, j), rhs.get(pivot_row, j));
                    rhs.set(col, j, y);
                    rhs.set(pivot_row, j, x);
                }
            }
            for r in col + 1..n {
                let factor = aug.get(r, col) / aug.get(col, col);
                if factor == 0.0 {
                    continue;
                }
                for j in col..n {
                    let v = aug.get(r, j) - factor * aug.get(col, j);
                    aug.set(r, j, v);
                }
                for j in 0..rhs.cols {
                    let v = rhs.get(r, j) - factor * rhs.get(col, j);
                    rhs.set(r, j, v);
                }
            }
        }
        // back substitution
        let mut x = Mat::zeros(n, rhs.cols);
        for j in 0..rhs.cols {
            for i in (0..n).rev() {
                let mut acc = rhs.get(i, j);
                for r in i + 1..n {
                    acc -= aug.get(i, r) * x.get(r, j);
                }
                x.set(i, j, acc / aug.get(i, i));
            }
        }
        Ok(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matmul_identity() {
        let a = Mat::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]);
        assert_eq!(a.matmul(&Mat::identity(2)), a);
    }

    #[test]
    fn solve_recovers_known_solution() {
        let a = Mat::from_rows(&[vec![2.0, 1.0], vec![1.0, 3.0]]);
        let x_true = Mat::from_rows(&[vec![1.0], vec![-2.0]]);
        let b = a.matmul(&x_true);
        let x = Mat::solve(&a, &b).unwrap();
        assert!(x.max_abs_diff(&x_true) < 1e-12);
    }

    #[test]
    fn solve_detects_singular() {
        let a = Mat::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]);
        let b = Mat::from_rows(&[vec![1.0], vec![1.0]]);
        assert!(matches!(
            Mat::solve(&a, &b),
            Err(MatrixError::Singular { .. })
        ));
    }

    #[test]
    fn inf_norm_is_max_row_sum() {
        let a = Mat::from_rows(&[vec![0.5, -0.5], vec![0.1, 0.2]]);
        assert_eq!(a.inf_norm(), 1.0);
    }
}
