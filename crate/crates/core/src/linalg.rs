//! Dense symmetric matrices and the factorizations the priors are built on.
//!
//! Everything here is sized for the covariance dimensions a mixture model
//! sees in practice (a few dozen at most): storage is a plain row-major
//! `Vec<f64>` and the algorithms are the textbook O(J³) ones.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};

/// Relative pivot tolerance for Cholesky: a pivot is rejected when it falls
/// below this fraction of the largest diagonal entry.
pub const PD_TOLERANCE: f64 = 1e-12;

/// Sweep cap for the cyclic Jacobi eigensolver.
const JACOBI_MAX_SWEEPS: usize = 100;

/// Symmetric `J × J` matrix stored in full. Every mutator writes both
/// triangles, so symmetry is exact.
#[derive(Clone, PartialEq)]
pub struct SymMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl fmt::Debug for SymMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut list = f.debug_list();
        for i in 0..self.dim {
            list.entry(&self.row(i));
        }
        list.finish()
    }
}

impl SymMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::scaled_identity(dim, 1.0)
    }

    pub fn scaled_identity(dim: usize, value: f64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = value;
        }
        m
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let dim = diag.len();
        let mut m = Self::zeros(dim);
        for (i, &d) in diag.iter().enumerate() {
            m.data[i * dim + i] = d;
        }
        m
    }

    /// Builds a matrix from its lower triangle; `f(i, j)` is only called with
    /// `i >= j`.
    pub fn from_lower_fn(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..=i {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    /// Builds a matrix from row slices. The input must be square and
    /// symmetric to within `1e-12` relative; the two triangles are averaged.
    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let dim = rows.len();
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: rows.iter().map(|r| r.len()).find(|&l| l != dim).unwrap_or(0),
            });
        }
        let scale = rows
            .iter()
            .flat_map(|r| r.iter())
            .fold(0.0f64, |acc, v| acc.max(v.abs()))
            .max(1.0);
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..=i {
                let (a, b) = (rows[i][j], rows[j][i]);
                if (a - b).abs() > 1e-12 * scale {
                    return Err(Error::NotSymmetric { row: i, col: j });
                }
                m.set(i, j, 0.5 * (a + b));
            }
        }
        Ok(m)
    }

    /// Symmetrizes an arbitrary row-major square buffer as `(A + Aᵀ)/2`.
    pub fn symmetrize(dim: usize, data: &[f64]) -> Self {
        assert_eq!(data.len(), dim * dim, "buffer is not {dim}x{dim}");
        Self::from_lower_fn(dim, |i, j| 0.5 * (data[i * dim + j] + data[j * dim + i]))
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.dim + j] = value;
        self.data[j * self.dim + i] = value;
    }

    #[inline]
    pub fn add_to(&mut self, i: usize, j: usize, value: f64) {
        let v = self.get(i, j) + value;
        self.set(i, j, v);
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    /// Row-major view of all entries.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn max_abs_diag(&self) -> f64 {
        (0..self.dim).fold(0.0f64, |acc, i| acc.max(self.get(i, i).abs()))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// `‖self − other‖_F / max(‖other‖_F, tiny)`.
    pub fn relative_distance(&self, other: &SymMatrix) -> f64 {
        let diff: f64 = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        diff / other.frobenius_norm().max(f64::MIN_POSITIVE)
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    pub fn add(&self, other: &SymMatrix) -> Self {
        assert_eq!(self.dim, other.dim);
        Self {
            dim: self.dim,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn add_assign(&mut self, other: &SymMatrix) {
        assert_eq!(self.dim, other.dim);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    /// `self += weight · v vᵀ`.
    pub fn add_outer(&mut self, v: &[f64], weight: f64) {
        let d = self.dim;
        for i in 0..d {
            let wi = weight * v[i];
            for j in 0..d {
                self.data[i * d + j] += wi * v[j];
            }
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.dim)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `xᵀ A x`.
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        self.mul_vec(x).iter().zip(x).map(|(a, b)| a * b).sum()
    }

    /// `D A D` for diagonal `D = diag(d)`.
    pub fn diag_congruence(&self, d: &[f64]) -> Self {
        Self::from_lower_fn(self.dim, |i, j| d[i] * self.get(i, j) * d[j])
    }

    /// `tr(A B)` for symmetric `A`, `B`.
    pub fn trace_product(&self, other: &SymMatrix) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    /// Correlation implied by entry `(i, j)`.
    pub fn correlation(&self, i: usize, j: usize) -> f64 {
        self.get(i, j) / (self.get(i, i) * self.get(j, j)).sqrt()
    }

    pub fn cholesky(&self) -> Result<Cholesky> {
        Cholesky::factor(self)
    }

    pub fn is_positive_definite(&self) -> bool {
        self.cholesky().is_ok()
    }

    /// Inverse of a positive definite matrix.
    pub fn inverse(&self) -> Result<SymMatrix> {
        Ok(self.cholesky()?.inverse())
    }

    pub fn spectral(&self) -> Result<SpectralPair> {
        SpectralPair::jacobi(self)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// Lower-triangular Cholesky factor `L` with `A = L Lᵀ`.
#[derive(Clone, Debug, PartialEq)]
pub struct Cholesky {
    dim: usize,
    lower: Vec<f64>,
}

impl Cholesky {
    /// Factors `a`, rejecting any pivot at or below
    /// `PD_TOLERANCE × max|diag(a)|`.
    pub fn factor(a: &SymMatrix) -> Result<Self> {
        let n = a.dim();
        let tol = PD_TOLERANCE * a.max_abs_diag();
        let mut l = vec![0.0; n * n];
        for j in 0..n {
            let mut d = a.get(j, j);
            for k in 0..j {
                d -= l[j * n + k] * l[j * n + k];
            }
            if !(d > tol) || !d.is_finite() {
                return Err(Error::NotPositiveDefinite);
            }
            let djj = d.sqrt();
            l[j * n + j] = djj;
            for i in (j + 1)..n {
                let mut s = a.get(i, j);
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                l[i * n + j] = s / djj;
            }
        }
        Ok(Self { dim: n, lower: l })
    }

    /// Wraps a lower-triangular buffer (row-major, upper part ignored) whose
    /// diagonal is strictly positive.
    pub fn from_lower(dim: usize, mut lower: Vec<f64>) -> Result<Self> {
        if lower.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                found: lower.len(),
            });
        }
        for i in 0..dim {
            for j in (i + 1)..dim {
                lower[i * dim + j] = 0.0;
            }
            let d = lower[i * dim + i];
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::NotPositiveDefinite);
            }
        }
        Ok(Self { dim, lower })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.lower[i * self.dim + j]
    }

    /// Row-major lower-triangular entries.
    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    /// `log|A|`.
    pub fn log_det(&self) -> f64 {
        2.0 * (0..self.dim).map(|i| self.get(i, i).ln()).sum::<f64>()
    }

    /// `L z`.
    pub fn mul_vec(&self, z: &[f64]) -> Vec<f64> {
        let n = self.dim;
        (0..n)
            .map(|i| (0..=i).map(|k| self.lower[i * n + k] * z[k]).sum())
            .collect()
    }

    /// Solves `L y = b` in place.
    pub fn solve_lower_in_place(&self, b: &mut [f64]) {
        let n = self.dim;
        for i in 0..n {
            let row = &self.lower[i * n..i * n + i];
            let s: f64 = row.iter().zip(&b[..i]).map(|(l, y)| l * y).sum();
            b[i] = (b[i] - s) / self.lower[i * n + i];
        }
    }

    /// Solves `Lᵀ y = b` in place.
    pub fn solve_upper_in_place(&self, b: &mut [f64]) {
        let n = self.dim;
        for i in (0..n).rev() {
            let mut s = b[i];
            for k in (i + 1)..n {
                s -= self.lower[k * n + i] * b[k];
            }
            b[i] = s / self.lower[i * n + i];
        }
    }

    pub fn solve_lower(&self, b: &[f64]) -> Vec<f64> {
        let mut y = b.to_vec();
        self.solve_lower_in_place(&mut y);
        y
    }

    /// `A⁻¹ b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut y = b.to_vec();
        self.solve_lower_in_place(&mut y);
        self.solve_upper_in_place(&mut y);
        y
    }

    /// `(x−μ)ᵀ A⁻¹ (x−μ)` without allocating.
    pub fn mahalanobis_sq(&self, x: &[f64], mean: &[f64], scratch: &mut [f64]) -> f64 {
        let n = self.dim;
        for i in 0..n {
            let row = &self.lower[i * n..i * n + i];
            let s: f64 = row.iter().zip(&scratch[..i]).map(|(l, y)| l * y).sum();
            scratch[i] = (x[i] - mean[i] - s) / self.lower[i * n + i];
        }
        scratch[..n].iter().map(|v| v * v).sum()
    }

    /// `L⁻¹` as a row-major lower-triangular buffer.
    pub fn inverse_lower(&self) -> Vec<f64> {
        let n = self.dim;
        let mut inv = vec![0.0; n * n];
        for j in 0..n {
            inv[j * n + j] = 1.0 / self.lower[j * n + j];
            for i in (j + 1)..n {
                let mut s = 0.0;
                for k in j..i {
                    s += self.lower[i * n + k] * inv[k * n + j];
                }
                inv[i * n + j] = -s / self.lower[i * n + i];
            }
        }
        inv
    }

    /// `A⁻¹ = L⁻ᵀ L⁻¹`.
    pub fn inverse(&self) -> SymMatrix {
        let n = self.dim;
        let li = self.inverse_lower();
        SymMatrix::from_lower_fn(n, |i, j| {
            // (L⁻ᵀ L⁻¹)_ij = Σ_k L⁻¹_ki L⁻¹_kj, nonzero for k ≥ max(i, j) = i
            (i..n).map(|k| li[k * n + i] * li[k * n + j]).sum()
        })
    }

    /// `L Lᵀ`.
    pub fn reconstruct(&self) -> SymMatrix {
        let n = self.dim;
        SymMatrix::from_lower_fn(n, |i, j| {
            (0..=j).map(|k| self.lower[i * n + k] * self.lower[j * n + k]).sum()
        })
    }

    /// Product of two lower-triangular factors, itself lower-triangular.
    pub fn mul_lower(&self, other_lower: &[f64]) -> Vec<f64> {
        let n = self.dim;
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                out[i * n + j] = (j..=i).map(|k| self.lower[i * n + k] * other_lower[k * n + j]).sum();
            }
        }
        out
    }
}

/// Eigen decomposition `A = E D Eᵀ` of a symmetric matrix, eigenvalues in
/// descending order, eigenvectors as the columns of `E`.
#[derive(Clone, Debug)]
pub struct SpectralPair {
    pub values: Vec<f64>,
    /// Row-major `J × J`; column `k` is the eigenvector for `values[k]`.
    pub vectors: Vec<f64>,
}

impl SpectralPair {
    /// Cyclic Jacobi rotations until the off-diagonal mass is negligible.
    pub fn jacobi(a: &SymMatrix) -> Result<Self> {
        let n = a.dim();
        let mut m = a.as_slice().to_vec();
        let mut v = vec![0.0; n * n];
        for i in 0..n {
            v[i * n + i] = 1.0;
        }
        let total: f64 = m.iter().map(|x| x * x).sum();
        if !total.is_finite() {
            return Err(Error::NoConvergence);
        }
        let target = (f64::EPSILON * f64::EPSILON) * total;
        let mut converged = n < 2;
        for _ in 0..JACOBI_MAX_SWEEPS {
            if converged {
                break;
            }
            let off: f64 = (0..n)
                .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
                .map(|(i, j)| m[i * n + j] * m[i * n + j])
                .sum();
            if off <= target || off == 0.0 {
                converged = true;
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = m[p * n + q];
                    if apq == 0.0 {
                        continue;
                    }
                    let app = m[p * n + p];
                    let aqq = m[q * n + q];
                    let theta = (aqq - app) / (2.0 * apq);
                    let t = if theta.is_infinite() {
                        0.0
                    } else {
                        theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                    };
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let mkp = m[k * n + p];
                        let mkq = m[k * n + q];
                        m[k * n + p] = c * mkp - s * mkq;
                        m[k * n + q] = s * mkp + c * mkq;
                    }
                    for k in 0..n {
                        let mpk = m[p * n + k];
                        let mqk = m[q * n + k];
                        m[p * n + k] = c * mpk - s * mqk;
                        m[q * n + k] = s * mpk + c * mqk;
                    }
                    m[p * n + q] = 0.0;
                    m[q * n + p] = 0.0;
                    for k in 0..n {
                        let vkp = v[k * n + p];
                        let vkq = v[k * n + q];
                        v[k * n + p] = c * vkp - s * vkq;
                        v[k * n + q] = s * vkp + c * vkq;
                    }
                }
            }
        }
        if !converged {
            let off: f64 = (0..n)
                .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
                .map(|(i, j)| m[i * n + j] * m[i * n + j])
                .sum();
            if off > target {
                return Err(Error::NoConvergence);
            }
        }

        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&x, &y| m[y * n + y].total_cmp(&m[x * n + x]));
        let values = order.iter().map(|&k| m[k * n + k]).collect();
        let mut vectors = vec![0.0; n * n];
        for (new, &old) in order.iter().enumerate() {
            for r in 0..n {
                vectors[r * n + new] = v[r * n + old];
            }
        }
        Ok(Self { values, vectors })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn vector_entry(&self, row: usize, k: usize) -> f64 {
        self.vectors[row * self.dim() + k]
    }

    pub fn vector(&self, k: usize) -> Vec<f64> {
        (0..self.dim()).map(|r| self.vector_entry(r, k)).collect()
    }

    /// `E f(D) Eᵀ`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> SymMatrix {
        let n = self.dim();
        let fd: Vec<f64> = self.values.iter().map(|&d| f(d)).collect();
        SymMatrix::from_lower_fn(n, |i, j| {
            (0..n)
                .map(|k| self.vectors[i * n + k] * fd[k] * self.vectors[j * n + k])
                .sum()
        })
    }

    pub fn reconstruct(&self) -> SymMatrix {
        self.map(|d| d)
    }
}

/// Principal logarithm of a positive definite matrix.
pub fn matrix_log(a: &SymMatrix) -> Result<SymMatrix> {
    let sp = a.spectral()?;
    if sp.values.iter().any(|&d| !(d > 0.0)) {
        return Err(Error::NotPositiveDefinite);
    }
    Ok(sp.map(f64::ln))
}

/// Exponential of a symmetric matrix; positive definite whenever the
/// eigenvalues do not underflow.
pub fn matrix_exp(a: &SymMatrix) -> Result<SymMatrix> {
    let sp = a.spectral()?;
    Ok(sp.map(f64::exp))
}
