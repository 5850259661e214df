//! Small dense linear algebra: LU with partial pivoting, used for the
//! Vandermonde weight systems (`M ≤ 12`) and the implicit starting block.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Row-major square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    n: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![T::zero(); n * n],
        }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        Self { n, data }
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for row in rows {
            if row.len() != n {
                return Err(Error::LengthMismatch {
                    context: "matrix row",
                    expected: n,
                    found: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Ok(Self { n, data })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: T) {
        self.data[i * self.n + j] = value;
    }

    pub fn rows(&self) -> Vec<Vec<T>> {
        self.data.chunks(self.n.max(1)).map(|r| r.to_vec()).collect()
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j).modulus()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j) * x[j]).sum())
            .collect()
    }

    pub fn lu(&self) -> Result<Lu<T>> {
        Lu::factor(self.clone())
    }

    /// `‖A‖∞ ‖A⁻¹‖∞` with the inverse formed explicitly.
    pub fn condition_inf(&self) -> Result<f64> {
        let inverse = self.lu()?.inverse();
        Ok(self.norm_inf() * inverse.norm_inf())
    }
}

#[derive(Debug, Clone)]
pub struct Lu<T> {
    factors: Matrix<T>,
    pivots: Vec<usize>,
}

impl<T: Scalar> Lu<T> {
    fn factor(mut a: Matrix<T>) -> Result<Self> {
        let n = a.n;
        let mut pivots: Vec<usize> = (0..n).collect();
        for col in 0..n {
            let (pivot_row, pivot_mag) = (col..n)
                .map(|r| (r, a.get(r, col).modulus()))
                .fold((col, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if !(pivot_mag > 0.0) || !pivot_mag.is_finite() {
                return Err(Error::SingularMatrix);
            }
            if pivot_row != col {
                for j in 0..n {
                    a.data.swap(col * n + j, pivot_row * n + j);
                }
                pivots.swap(col, pivot_row);
            }
            let pivot = a.get(col, col);
            for r in col + 1..n {
                let factor = a.get(r, col) / pivot;
                a.set(r, col, factor);
                for j in col + 1..n {
                    let v = a.get(r, j) - factor * a.get(col, j);
                    a.set(r, j, v);
                }
            }
        }
        Ok(Self { factors: a, pivots })
    }

    pub fn solve(&self, b: &[T]) -> Result<Vec<T>> {
        let n = self.factors.n;
        if b.len() != n {
            return Err(Error::LengthMismatch {
                context: "LU right-hand side",
                expected: n,
                found: b.len(),
            });
        }
        let mut x: Vec<T> = self.pivots.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for j in 0..i {
                let v = x[i] - self.factors.get(i, j) * x[j];
                x[i] = v;
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                let v = x[i] - self.factors.get(i, j) * x[j];
                x[i] = v;
            }
            x[i] = x[i] / self.factors.get(i, i);
        }
        Ok(x)
    }

    pub fn inverse(&self) -> Matrix<T> {
        let n = self.factors.n;
        let mut inv = Matrix::zeros(n);
        for j in 0..n {
            let mut e = vec![T::zero(); n];
            e[j] = T::one();
            let col = self.solve(&e).expect("dimension checked");
            for i in 0..n {
                inv.set(i, j, col[i]);
            }
        }
        inv
    }
}
