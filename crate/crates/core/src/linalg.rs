//! Dense square matrices over the reals acting on `R^n` with the Euclidean
//! inner product.
//!
//! The operator norm is the largest singular value and the adjoint is the
//! transpose. Sizes in this crate are small (2 or 3 for the worked systems,
//! up to a few dozen for quadrature-embedded kernels), so everything here is
//! plain row-major `Vec<f64>` with cubic algorithms.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Condition estimates above this are treated as singular by [`invert`].
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct LinearOperator {
    n: usize,
    data: Vec<f64>,
}

impl LinearOperator {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn scalar(n: usize, s: f64) -> Self {
        Self::identity(n).scaled(s)
    }

    pub fn diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, d) in diag.iter().enumerate() {
            m.data[i * diag.len() + i] = *d;
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                got: 0,
            });
        }
        let mut data = Vec::with_capacity(n * n);
        for row in rows {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: row.len(),
                });
            }
            if row.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidMeasure("non-finite matrix entry".into()));
            }
            data.extend(row);
        }
        Ok(Self { n, data })
    }

    /// Builds an `n x n` operator from a closure over `(row, col)`.
    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        Self { n, data }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.n).map(|r| r.to_vec()).collect()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.n);
        self.data
            .chunks(self.n)
            .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `y += self * x`, accumulating in coordinate order.
    pub fn apply_add(&self, x: &[f64], y: &mut [f64]) {
        for (row, yi) in self.data.chunks(self.n).zip(y.iter_mut()) {
            *yi += row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
        }
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.n, |i, j| self.get(j, i))
    }

    /// Adjoint with respect to the Euclidean inner product.
    pub fn adjoint(&self) -> Self {
        self.transpose()
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n, "matmul dimension mismatch");
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * other.data[k * n + j];
                }
            }
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        Self {
            n: self.n,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        Self {
            n: self.n,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            n: self.n,
            data: self.data.iter().map(|a| a * s).collect(),
        }
    }

    /// Maximum absolute column sum.
    pub fn norm_one(&self) -> f64 {
        (0..self.n)
            .map(|j| (0..self.n).map(|i| self.get(i, j).abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Largest singular value.
    pub fn operator_norm(&self) -> f64 {
        operator_norm(self)
    }
}

impl TryFrom<Vec<Vec<f64>>> for LinearOperator {
    type Error = Error;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::from_rows(rows)
    }
}

impl From<LinearOperator> for Vec<Vec<f64>> {
    fn from(m: LinearOperator) -> Self {
        m.rows()
    }
}

/// Largest singular value of `r`.
///
/// 1x1 and 2x2 use closed forms; larger sizes take the largest eigenvalue of
/// the Gram matrix `R^T R` by cyclic Jacobi rotations.
pub fn operator_norm(r: &LinearOperator) -> f64 {
    match r.n {
        1 => r.data[0].abs(),
        2 => {
            let (a, b, c, d) = (r.data[0], r.data[1], r.data[2], r.data[3]);
            let p = (a + d).hypot(c - b);
            let q = (a - d).hypot(b + c);
            0.5 * (p + q)
        }
        _ => singular_value_range(r).1,
    }
}

/// `(sigma_min, sigma_max)` of `r`.
pub fn singular_value_range(r: &LinearOperator) -> (f64, f64) {
    if r.n == 2 {
        let (a, b, c, d) = (r.data[0], r.data[1], r.data[2], r.data[3]);
        let p = (a + d).hypot(c - b);
        let q = (a - d).hypot(b + c);
        return (0.5 * (p - q).abs(), 0.5 * (p + q));
    }
    let gram = r.transpose().matmul(r);
    let eig = symmetric_eigenvalues(&gram);
    let lo = eig.iter().cloned().fold(f64::INFINITY, f64::min).max(0.0);
    let hi = eig.iter().cloned().fold(0.0, f64::max);
    (lo.sqrt(), hi.sqrt())
}

/// `sigma_max / sigma_min`; infinite for singular input.
pub fn condition_number(a: &LinearOperator) -> f64 {
    let (lo, hi) = singular_value_range(a);
    if hi == 0.0 {
        return f64::INFINITY;
    }
    if lo == 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

/// Eigenvalues of a symmetric matrix (cyclic Jacobi).
fn symmetric_eigenvalues(s: &LinearOperator) -> Vec<f64> {
    let n = s.n;
    let mut a = s.data.clone();
    let scale = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    if scale == 0.0 {
        return vec![0.0; n];
    }
    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += a[i * n + j] * a[i * n + j];
            }
        }
        if off.sqrt() <= 1e-17 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s_ = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s_ * akq;
                    a[k * n + q] = s_ * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s_ * aqk;
                    a[q * n + k] = s_ * apk + c * aqk;
                }
            }
        }
    }
    (0..n).map(|i| a[i * n + i]).collect()
}

/// Inverse by Gauss-Jordan elimination with partial pivoting.
///
/// Rejects matrices whose condition estimate exceeds [`MAX_CONDITION`].
pub fn invert(a: &LinearOperator) -> Result<LinearOperator> {
    let condition = condition_number(a);
    if !(condition <= MAX_CONDITION) {
        return Err(Error::Singular { condition });
    }
    let n = a.n;
    let mut m = a.data.clone();
    let mut inv = LinearOperator::identity(n).data;
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| m[i * n + col].abs().total_cmp(&m[j * n + col].abs()))
            .expect("non-empty pivot range");
        if m[pivot * n + col] == 0.0 {
            return Err(Error::Singular {
                condition: f64::INFINITY,
            });
        }
        if pivot != col {
            for k in 0..n {
                m.swap(pivot * n + k, col * n + k);
                inv.swap(pivot * n + k, col * n + k);
            }
        }
        let d = m[col * n + col];
        for k in 0..n {
            m[col * n + k] /= d;
            inv[col * n + k] /= d;
        }
        for i in 0..n {
            if i == col {
                continue;
            }
            let f = m[i * n + col];
            if f == 0.0 {
                continue;
            }
            for k in 0..n {
                m[i * n + k] -= f * m[col * n + k];
                inv[i * n + k] -= f * inv[col * n + k];
            }
        }
    }
    Ok(LinearOperator { n, data: inv })
}

/// Matrix exponential by scaling and squaring of a truncated Taylor series.
pub fn matrix_exp(p: &LinearOperator) -> LinearOperator {
    let n = p.n;
    let norm = p.norm_one();
    let mut squarings = 0u32;
    if norm > 0.5 {
        squarings = (norm / 0.5).log2().ceil() as u32;
    }
    let scaled = p.scaled(0.5f64.powi(squarings as i32));
    // ||scaled|| <= 1/2: 30 terms put the remainder far below f64 resolution.
    let mut sum = LinearOperator::identity(n);
    let mut term = LinearOperator::identity(n);
    for k in 1..=30 {
        term = term.matmul(&scaled).scaled(1.0 / k as f64);
        sum = sum.add(&term);
        if term.norm_one() <= 1e-18 * sum.norm_one() {
            break;
        }
    }
    for _ in 0..squarings {
        sum = sum.matmul(&sum);
    }
    sum
}
