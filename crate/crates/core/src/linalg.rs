//! Small dense matrices: a complex matrix for codeword algebra and a real
//! Householder QR without pivoting.

use num_complex::Complex64;
use std::ops::{Add, Index, IndexMut, Mul, Sub};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("dimension mismatch: {left:?} vs {right:?}")]
pub struct DimensionError {
    pub left: (usize, usize),
    pub right: (usize, usize),
}

/// Row-major complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_rows(rows: &[&[Complex64]]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        assert!(rows.iter().all(|x| x.len() == c), "ragged rows");
        Self {
            rows: r,
            cols: c,
            data: rows.iter().flat_map(|x| x.iter().copied()).collect(),
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &[Complex64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn conj_transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t[(c, r)] = self[(r, c)].conj();
            }
        }
        t
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| x * s).collect(),
        }
    }

    pub fn try_mul(&self, rhs: &Self) -> Result<Self, DimensionError> {
        if self.cols != rhs.rows {
            return Err(DimensionError {
                left: self.shape(),
                right: rhs.shape(),
            });
        }
        let mut out = Self::zeros(self.rows, rhs.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(r, k)];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for c in 0..rhs.cols {
                    out[(r, c)] += a * rhs[(k, c)];
                }
            }
        }
        Ok(out)
    }

    pub fn try_add(&self, rhs: &Self) -> Result<Self, DimensionError> {
        if self.shape() != rhs.shape() {
            return Err(DimensionError {
                left: self.shape(),
                right: rhs.shape(),
            });
        }
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|x| x.norm()).fold(0.0, f64::max)
    }

    /// Numerical rank by Gaussian elimination with partial pivoting.
    pub fn rank(&self, tol: f64) -> usize {
        let mut m = self.clone();
        let mut rank = 0;
        for c in 0..m.cols {
            if rank == m.rows {
                break;
            }
            let (piv, val) = (rank..m.rows)
                .map(|r| (r, m[(r, c)].norm()))
                .fold((rank, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            if val <= tol {
                continue;
            }
            for k in 0..m.cols {
                m.data.swap(piv * m.cols + k, rank * m.cols + k);
            }
            let p = m[(rank, c)];
            for r in rank + 1..m.rows {
                let f = m[(r, c)] / p;
                for k in c..m.cols {
                    let v = m[(rank, k)];
                    m[(r, k)] -= f * v;
                }
            }
            rank += 1;
        }
        rank
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = Complex64;
    fn index(&self, (r, c): (usize, usize)) -> &Complex64 {
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex64 {
        &mut self.data[r * self.cols + c]
    }
}

impl Add for &CMatrix {
    type Output = CMatrix;
    fn add(self, rhs: &CMatrix) -> CMatrix {
        self.try_add(rhs).expect("shape mismatch in add")
    }
}

impl Sub for &CMatrix {
    type Output = CMatrix;
    fn sub(self, rhs: &CMatrix) -> CMatrix {
        self.try_add(&rhs.scale(Complex64::new(-1.0, 0.0)))
            .expect("shape mismatch in sub")
    }
}

impl Mul for &CMatrix {
    type Output = CMatrix;
    fn mul(self, rhs: &CMatrix) -> CMatrix {
        self.try_mul(rhs).expect("shape mismatch in mul")
    }
}

/// Householder QR of an `R x C` real matrix (`R <= C`), no pivoting.
///
/// Returns `(q, r)` with `q` an `R x R` orthogonal matrix and `r` `R x C`,
/// upper triangular in its leading `R x R` block.
pub fn householder_qr<const R: usize, const C: usize>(
    a: &[[f64; C]; R],
) -> ([[f64; R]; R], [[f64; C]; R]) {
    let mut r = *a;
    let mut q = [[0.0; R]; R];
    for (i, row) in q.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    for k in 0..R.min(C) {
        let norm = (k..R).map(|i| r[i][k] * r[i][k]).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let alpha = if r[k][k] > 0.0 { -norm } else { norm };
        let mut v = [0.0; R];
        for i in k..R {
            v[i] = r[i][k];
        }
        v[k] -= alpha;
        let vnorm2 = (k..R).map(|i| v[i] * v[i]).sum::<f64>();
        if vnorm2 == 0.0 {
            continue;
        }
        // r <- (I - 2vvᵀ/vᵀv) r
        for c in 0..C {
            let dot = (k..R).map(|i| v[i] * r[i][c]).sum::<f64>();
            let f = 2.0 * dot / vnorm2;
            for i in k..R {
                r[i][c] -= f * v[i];
            }
        }
        // q <- q (I - 2vvᵀ/vᵀv)
        for row in q.iter_mut() {
            let dot = (k..R).map(|i| row[i] * v[i]).sum::<f64>();
            let f = 2.0 * dot / vnorm2;
            for i in k..R {
                row[i] -= f * v[i];
            }
        }
        for i in k + 1..R {
            r[i][k] = 0.0;
        }
    }
    (q, r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn qr_reconstructs_and_is_orthogonal() {
        let a = [
            [1.0, 2.0, 0.5, -1.0, 3.0],
            [0.3, -1.0, 2.0, 0.0, 1.0],
            [4.0, 0.1, -0.2, 1.5, -2.0],
        ];
        let (q, r) = householder_qr(&a);
        for i in 0..3 {
            for j in 0..3 {
                let d: f64 = (0..3).map(|k| q[k][i] * q[k][j]).sum();
                assert!((d - if i == j { 1.0 } else { 0.0 }).abs() < 1e-12);
            }
            for j in 0..i {
                assert_eq!(r[i][j], 0.0);
            }
        }
        for i in 0..3 {
            for c in 0..5 {
                let v: f64 = (0..3).map(|k| q[i][k] * r[k][c]).sum();
                assert!((v - a[i][c]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rank_of_simple_matrices() {
        let one = Complex64::new(1.0, 0.0);
        let z = Complex64::new(0.0, 0.0);
        assert_eq!(CMatrix::identity(3).rank(1e-12), 3);
        assert_eq!(CMatrix::zeros(2, 2).rank(1e-12), 0);
        assert_eq!(
            CMatrix::from_rows(&[&[one, one], &[one, one], &[z, z]]).rank(1e-12),
            1
        );
    }

    #[test]
    fn mul_dimension_error() {
        assert!(CMatrix::zeros(2, 3).try_mul(&CMatrix::zeros(2, 3)).is_err());
        assert!(CMatrix::zeros(2, 3).try_add(&CMatrix::zeros(3, 2)).is_err());
    }
}
