//! Minimal dense matrix support for the Newton solvers.
//!
//! Parameter counts never exceed a few dozen, so a row-major `Vec<f64>`
//! with LU solves is all the fitting code needs.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        debug_assert!(rows.iter().all(|row| row.len() == c));
        let mut data = Vec::with_capacity(r * c);
        for row in &rows {
            data.extend_from_slice(row);
        }
        Matrix {
            rows: r,
            cols: c,
            data,
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// X' X of `self` interpreted as an n x q design.
    pub fn gram(&self) -> Matrix {
        let q = self.cols;
        let mut g = Matrix::zeros(q, q);
        for i in 0..self.rows {
            let r = self.row(i);
            for a in 0..q {
                for b in a..q {
                    g[(a, b)] += r[a] * r[b];
                }
            }
        }
        for a in 0..q {
            for b in 0..a {
                g[(a, b)] = g[(b, a)];
            }
        }
        g
    }

    /// Solve `self * x = b` by LU with partial pivoting.
    pub fn solve(&self, b: &[f64]) -> Option<Vec<f64>> {
        assert_eq!(self.rows, self.cols);
        assert_eq!(b.len(), self.rows);
        let n = self.rows;
        let mut lu = self.data.clone();
        let mut x: Vec<f64> = b.to_vec();
        let mut perm: Vec<usize> = (0..n).collect();

        for k in 0..n {
            let mut pivot = k;
            let mut best = lu[perm[k] * n + k].abs();
            for i in (k + 1)..n {
                let v = lu[perm[i] * n + k].abs();
                if v > best {
                    best = v;
                    pivot = i;
                }
            }
            if best == 0.0 || !best.is_finite() {
                return None;
            }
            perm.swap(k, pivot);
            let pk = perm[k];
            let pivval = lu[pk * n + k];
            for i in (k + 1)..n {
                let pi = perm[i];
                let f = lu[pi * n + k] / pivval;
                lu[pi * n + k] = f;
                for j in (k + 1)..n {
                    lu[pi * n + j] -= f * lu[pk * n + j];
                }
            }
        }
        // forward substitution on permuted rhs
        let mut y = vec![0.0; n];
        for i in 0..n {
            let mut s = x[perm[i]];
            for j in 0..i {
                s -= lu[perm[i] * n + j] * y[j];
            }
            y[i] = s;
        }
        // back substitution
        for i in (0..n).rev() {
            let mut s = y[i];
            for j in (i + 1)..n {
                s -= lu[perm[i] * n + j] * x[j];
            }
            let d = lu[perm[i] * n + i];
            if d == 0.0 || !d.is_finite() {
                return None;
            }
            x[i] = s / d;
        }
        if x.iter().any(|v| !v.is_finite()) {
            return None;
        }
        Some(x)
    }

    /// Solve a symmetric system after symmetric diagonal equilibration,
    /// which keeps badly scaled Hessians (e.g. squared-term columns)
    /// numerically tractable. One round of iterative refinement recovers
    /// accuracy lost to ill conditioning.
    pub fn solve_sym(&self, b: &[f64]) -> Option<Vec<f64>> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut d = vec![1.0; n];
        for i in 0..n {
            let a = self[(i, i)].abs();
            if a > 0.0 && a.is_finite() {
                d[i] = 1.0 / a.sqrt();
            }
        }
        let mut scaled = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                scaled[(i, j)] = self[(i, j)] * d[i] * d[j];
            }
        }
        let bs: Vec<f64> = (0..n).map(|i| b[i] * d[i]).collect();
        let mut z = scaled.solve(&bs)?;
        for _ in 0..2 {
            let mut resid = bs.clone();
            for i in 0..n {
                let mut s = 0.0;
                for j in 0..n {
                    s += scaled[(i, j)] * z[j];
                }
                resid[i] -= s;
            }
            let Some(corr) = scaled.solve(&resid) else {
                break;
            };
            for i in 0..n {
                z[i] += corr[i];
            }
        }
        Some((0..n).map(|i| z[i] * d[i]).collect())
    }

    pub fn inverse(&self) -> Option<Matrix> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut inv = Matrix::zeros(n, n);
        for j in 0..n {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            let col = self.solve_sym(&e)?;
            for i in 0..n {
                inv[(i, j)] = col[i];
            }
        }
        Some(inv)
    }

    /// Index of the first linearly dependent column of an n x q design,
    /// detected by pivoted Cholesky on the column-equilibrated Gram matrix.
    pub fn rank_check(&self) -> Result<()> {
        let q = self.cols;
        if q == 0 {
            return Ok(());
        }
        let mut g = self.gram();
        let norms: Vec<f64> = (0..q)
            .map(|j| g[(j, j)].max(f64::MIN_POSITIVE).sqrt())
            .collect();
        for a in 0..q {
            for b in 0..q {
                g[(a, b)] /= norms[a] * norms[b];
            }
        }
        // unpivoted Cholesky; equilibrated diagonals are all 1
        let tol = 1e-10;
        let mut l = Matrix::zeros(q, q);
        for j in 0..q {
            let mut s = g[(j, j)];
            for k in 0..j {
                s -= l[(j, k)] * l[(j, k)];
            }
            if s <= tol {
                return Err(Error::RankDeficient(j));
            }
            let diag = s.sqrt();
            l[(j, j)] = diag;
            for i in (j + 1)..q {
                let mut v = g[(i, j)];
                for k in 0..j {
                    v -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = v / diag;
            }
        }
        Ok(())
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (r, c): (usize, usize)) -> &f64 {
        &self.data[r * self.cols + c]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut f64 {
        &mut self.data[r * self.cols + c]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solve_small_system() {
        let a = Matrix::from_rows(vec![vec![4.0, 1.0], vec![1.0, 3.0]]);
        let x = a.solve(&[1.0, 2.0]).unwrap();
        assert!((4.0 * x[0] + x[1] - 1.0).abs() < 1e-12);
        assert!((x[0] + 3.0 * x[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn solve_requires_pivoting() {
        let a = Matrix::from_rows(vec![vec![0.0, 1.0], vec![1.0, 0.0]]);
        let x = a.solve(&[5.0, 7.0]).unwrap();
        assert!((x[0] - 7.0).abs() < 1e-12);
        assert!((x[1] - 5.0).abs() < 1e-12);
    }

    #[test]
    fn singular_returns_none() {
        let a = Matrix::from_rows(vec![vec![1.0, 2.0], vec![2.0, 4.0]]);
        assert!(a.solve(&[1.0, 2.0]).is_none());
    }

    #[test]
    fn inverse_roundtrip() {
        let a = Matrix::from_rows(vec![
            vec![2.0, 0.5, 0.1],
            vec![0.5, 3.0, 0.2],
            vec![0.1, 0.2, 1.5],
        ]);
        let inv = a.inverse().unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let mut s = 0.0;
                for k in 0..3 {
                    s += a[(i, k)] * inv[(k, j)];
                }
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((s - expect).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn rank_check_flags_duplicate_column() {
        let x = Matrix::from_rows(vec![
            vec![1.0, 2.0, 2.0],
            vec![1.0, 3.0, 3.0],
            vec![1.0, 5.0, 5.0],
            vec![1.0, 7.0, 7.0],
        ]);
        assert!(matches!(x.rank_check(), Err(Error::RankDeficient(2))));
    }

    #[test]
    fn rank_check_passes_well_conditioned() {
        let x = Matrix::from_rows(vec![
            vec![1.0, 2.0, 4.0],
            vec![1.0, 3.0, 9.0],
            vec![1.0, 5.0, 25.0],
            vec![1.0, 7.0, 49.0],
        ]);
        assert!(x.rank_check().is_ok());
    }
}
