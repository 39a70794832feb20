//! Small dense linear algebra for normal-equation solves.

use thiserror::Error;

use crate::scalar::Real;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("matrix is singular or not positive definite (rank deficient at pivot {pivot})")]
pub struct SingularMatrix {
    pub pivot: usize,
}

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn from_rows(rows: usize, cols: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), rows * cols, "data length does not match shape");
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.cols + j] = v;
    }

    pub fn column(&self, j: usize) -> impl Iterator<Item = T> + '_ {
        (0..self.rows).map(move |i| self.get(i, j))
    }

    /// `X^T W X` with optional per-row weights.
    pub fn weighted_gram(&self, weights: Option<&[T]>) -> Matrix<T> {
        let p = self.cols;
        let mut g = Matrix::zeros(p, p);
        for i in 0..self.rows {
            let w = weights.map_or(T::one(), |w| w[i]);
            let r = self.row(i);
            for a in 0..p {
                let wa = w * r[a];
                for b in a..p {
                    g.data[a * p + b] = g.data[a * p + b] + wa * r[b];
                }
            }
        }
        for a in 0..p {
            for b in 0..a {
                g.data[a * p + b] = g.data[b * p + a];
            }
        }
        g
    }

    /// `X^T v`.
    pub fn t_mul_vec(&self, v: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.cols];
        for i in 0..self.rows {
            let vi = v[i];
            for (o, &x) in out.iter_mut().zip(self.row(i)) {
                *o = *o + x * vi;
            }
        }
        out
    }

    /// `X b`.
    pub fn mul_vec(&self, b: &[T]) -> Vec<T> {
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(b).fold(T::zero(), |acc, (&x, &c)| acc + x * c))
            .collect()
    }

    pub fn mul(&self, other: &Matrix<T>) -> Matrix<T> {
        assert_eq!(self.cols, other.rows);
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                for j in 0..other.cols {
                    let idx = i * other.cols + j;
                    out.data[idx] = out.data[idx] + a * other.get(k, j);
                }
            }
        }
        out
    }
}

/// Symmetric-pivoted Cholesky factorisation `P^T A P = L L^T` of a symmetric
/// positive definite matrix, computed on a diagonally equilibrated copy.
#[derive(Debug, Clone)]
pub struct PivotedCholesky<T> {
    n: usize,
    lower: Vec<T>,
    perm: Vec<usize>,
    scale: Vec<T>,
}

impl<T: Real> PivotedCholesky<T> {
    /// Relative pivot threshold on the equilibrated matrix, whose diagonal is 1.
    pub fn factor(a: &Matrix<T>) -> Result<Self, SingularMatrix> {
        Self::factor_with_tol(a, T::lit(1e-12))
    }

    pub fn factor_with_tol(a: &Matrix<T>, tol: T) -> Result<Self, SingularMatrix> {
        assert_eq!(a.rows, a.cols, "matrix must be square");
        let n = a.rows;
        let mut scale = vec![T::one(); n];
        for (j, s) in scale.iter_mut().enumerate() {
            let d = a.get(j, j);
            if !(d > T::zero()) {
                return Err(SingularMatrix { pivot: j });
            }
            *s = T::one() / d.sqrt();
        }
        let mut w: Vec<T> = (0..n * n).map(|idx| a.data[idx] * scale[idx / n] * scale[idx % n]).collect();
        let mut perm: Vec<usize> = (0..n).collect();

        for k in 0..n {
            let (piv, best) = (k..n)
                .map(|j| (j, w[j * n + j]))
                .fold((k, T::neg_infinity()), |acc, (j, d)| if d > acc.1 { (j, d) } else { acc });
            if !(best > tol) {
                return Err(SingularMatrix { pivot: k });
            }
            if piv != k {
                perm.swap(k, piv);
                for c in 0..n {
                    w.swap(k * n + c, piv * n + c);
                }
                for r in 0..n {
                    w.swap(r * n + k, r * n + piv);
                }
            }
            let lkk = w[k * n + k].sqrt();
            w[k * n + k] = lkk;
            for i in k + 1..n {
                w[i * n + k] = w[i * n + k] / lkk;
            }
            // keep the trailing block fully symmetric so later swaps stay valid
            for j in k + 1..n {
                let ljk = w[j * n + k];
                for i in k + 1..n {
                    w[i * n + j] = w[i * n + j] - w[i * n + k] * ljk;
                }
            }
            for j in k + 1..n {
                w[k * n + j] = T::zero();
            }
        }
        Ok(Self {
            n,
            lower: w,
            perm,
            scale,
        })
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.n;
        // A x = b  <=>  (S A S)(S^-1 x) = S b
        let mut y: Vec<T> = self.perm.iter().map(|&p| b[p] * self.scale[p]).collect();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s = s - self.lower[i * n + k] * y[k];
            }
            y[i] = s / self.lower[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..n {
                s = s - self.lower[k * n + i] * y[k];
            }
            y[i] = s / self.lower[i * n + i];
        }
        let mut x = vec![T::zero(); n];
        for (i, &p) in self.perm.iter().enumerate() {
            x[p] = y[i] * self.scale[p];
        }
        x
    }

    pub fn inverse(&self) -> Matrix<T> {
        let n = self.n;
        let mut inv = Matrix::zeros(n, n);
        let mut e = vec![T::zero(); n];
        for j in 0..n {
            e.iter_mut().for_each(|v| *v = T::zero());
            e[j] = T::one();
            let col = self.solve(&e);
            for (i, v) in col.into_iter().enumerate() {
                inv.set(i, j, v);
            }
        }
        inv
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn solves_spd_system() {
        let a = Matrix::from_rows(3, 3, vec![4.0, 12.0, -16.0, 12.0, 37.0, -43.0, -16.0, -43.0, 98.0]);
        let f = PivotedCholesky::factor(&a).unwrap();
        let x = f.solve(&[1.0, 2.0, 3.0]);
        let back = a.mul_vec(&x);
        for (u, v) in back.iter().zip([1.0, 2.0, 3.0]) {
            assert_relative_eq!(*u, v, max_relative = 1e-10);
        }
        let id = a.mul(&f.inverse());
        for i in 0..3 {
            for j in 0..3 {
                assert_relative_eq!(id.get(i, j), if i == j { 1.0 } else { 0.0 }, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn detects_rank_deficiency() {
        let x = Matrix::from_rows(3, 2, vec![1.0, 2.0, 1.0, 2.0, 1.0, 2.0]);
        assert!(PivotedCholesky::factor(&x.weighted_gram(None)).is_err());
    }

    #[test]
    fn badly_scaled_columns() {
        // intercept next to a column with values around 1e5
        let rows: Vec<f64> = (0..50).flat_map(|i| [1.0, -70_000.0 + 2_800.0 * i as f64]).collect();
        let x = Matrix::from_rows(50, 2, rows);
        let y: Vec<f64> = (0..50).map(|i| 3.0 + 1e-4 * (-70_000.0 + 2_800.0 * i as f64)).collect();
        let f = PivotedCholesky::factor(&x.weighted_gram(None)).unwrap();
        let beta = f.solve(&x.t_mul_vec(&y));
        assert_relative_eq!(beta[0], 3.0, max_relative = 1e-10);
        assert_relative_eq!(beta[1], 1e-4, max_relative = 1e-10);
    }

    #[test]
    fn works_in_f32() {
        let a: Matrix<f32> = Matrix::from_rows(2, 2, vec![2.0, 1.0, 1.0, 3.0]);
        let x = PivotedCholesky::factor(&a).unwrap().solve(&[3.0, 5.0]);
        assert!((x[0] - 0.8).abs() < 1e-5 && (x[1] - 1.4).abs() < 1e-5);
    }
}
