//! Log-matrix prior: `Σ_c = exp(A_c)` with the `q = J(J+1)/2` free entries
//! of the symmetric `A_c` stacked in a vector `a_c ~ N_q(μ_a, Σ_a)`.
//!
//! The update is an independence Metropolis–Hastings step. Its proposal is
//! a multivariate t centred at the Newton point of (log prior + quadratic
//! expansion of the log likelihood in `a`), with the expansion taken at the
//! log of a regularized within-component scatter. Acceptance uses the exact
//! likelihood.
//!
//! The expansion needs first and second derivatives of `tr(exp(B) W)`;
//! these come from the divided-difference (Daleckii–Krein) formulas in the
//! eigenbasis of `B`.

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;

use super::{CovBlock, Latent};
use crate::error::{Error, Result};
use crate::linalg::{matrix_log, Cholesky, SymMatrix};
use crate::random::{mvn_logpdf, mvt_logpdf, sample_mvn, sample_mvt};

/// Largest dimension accepted by default; the expansion costs `O(J⁵)` and
/// the proposal `O(q³) = O(J⁶)`.
pub const DEFAULT_MAX_DIM: usize = 25;

/// `(row, col)` of each entry of `a`: the diagonal first, then successive
/// superdiagonals `(1,2), (2,3), …`, `(1,3), …`, ending with `(1,J)`.
pub fn log_coordinates(dim: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(dim * (dim + 1) / 2);
    for band in 0..dim {
        for i in 0..dim - band {
            out.push((i, i + band));
        }
    }
    out
}

/// Symmetric matrix with entries taken from `a` in [`log_coordinates`] order.
pub fn log_matrix(a: &[f64], dim: usize) -> SymMatrix {
    let mut m = SymMatrix::zeros(dim);
    for (&v, (i, j)) in a.iter().zip(log_coordinates(dim)) {
        m.set(i, j, v);
    }
    m
}

/// Inverse of [`log_matrix`].
pub fn log_vector(m: &SymMatrix) -> Vec<f64> {
    log_coordinates(m.dim()).into_iter().map(|(i, j)| m.get(i, j)).collect()
}

/// `(e^x − e^y)/(x − y)`.
fn dd2(x: f64, y: f64) -> f64 {
    let (lo, hi) = if x < y { (x, y) } else { (y, x) };
    let d = hi - lo;
    if d == 0.0 {
        lo.exp()
    } else {
        lo.exp() * d.exp_m1() / d
    }
}

/// Second divided difference of `exp`.
fn dd3(x: f64, y: f64, z: f64) -> f64 {
    let mut v = [x, y, z];
    v.sort_by(|a, b| a.total_cmp(b));
    let [lo, mid, hi] = v;
    let spread = hi - lo;
    if spread > 1e-3 {
        (dd2(mid, hi) - dd2(lo, mid)) / spread
    } else {
        // Taylor series about the mean: Σ_k h_k(δ)/(k+2)!
        let c = (lo + mid + hi) / 3.0;
        let d = [lo - c, mid - c, hi - c];
        let mut h2 = 0.0;
        let mut h3 = 0.0;
        for i in 0..3 {
            for j in i..3 {
                h2 += d[i] * d[j];
                for k in j..3 {
                    h3 += d[i] * d[j] * d[k];
                }
            }
        }
        c.exp() * (0.5 + h2 / 24.0 + h3 / 120.0)
    }
}

/// Exact log likelihood in `A = log Σ` up to the `2π` constant:
/// `−½ (n tr A + tr(exp(−A) W))`. Also returns `Σ = exp(A)`.
pub fn log_lik_exact(a: &SymMatrix, n: usize, scatter: &SymMatrix) -> Result<(f64, SymMatrix)> {
    let sp = a.spectral()?;
    let dim = a.dim();
    let mut tr = 0.0;
    for k in 0..dim {
        let v = sp.vector(k);
        tr += (-sp.values[k]).exp() * scatter.quad_form(&v);
    }
    let ll = -0.5 * (n as f64 * a.trace() + tr);
    Ok((ll, sp.map(f64::exp)))
}

/// Second-order expansion of [`log_lik_exact`] in the coordinates `a`:
/// `ℓ(a) ≈ ℓ(a₀) + gᵀ(a − a₀) − ½ (a − a₀)ᵀ Q (a − a₀)`.
#[derive(Clone, Debug)]
pub struct LogExpansion {
    pub a0: Vec<f64>,
    pub grad: Vec<f64>,
    pub q: SymMatrix,
}

impl LogExpansion {
    pub fn at(a0: &SymMatrix, n: usize, scatter: &SymMatrix) -> Result<Self> {
        let dim = a0.dim();
        let coords = log_coordinates(dim);
        let nq = coords.len();
        let sp = a0.spectral()?;
        // B = −A₀ shares eigenvectors; its eigenvalues are x_k = −λ_k
        let x: Vec<f64> = sp.values.iter().map(|l| -l).collect();
        let e = |row: usize, k: usize| sp.vectors[row * dim + k];

        // W̃ = Eᵀ W E
        let ew: Vec<f64> = {
            let mut tmp = alloc::vec![0.0; dim * dim];
            for a in 0..dim {
                for k in 0..dim {
                    tmp[a * dim + k] = (0..dim).map(|b| scatter.get(a, b) * e(b, k)).sum();
                }
            }
            let mut out = alloc::vec![0.0; dim * dim];
            for i in 0..dim {
                for k in 0..dim {
                    out[i * dim + k] = (0..dim).map(|a| e(a, i) * tmp[a * dim + k]).sum();
                }
            }
            out
        };
        let wt = |i: usize, j: usize| ew[i * dim + j];

        // E M Eᵀ for a row-major J×J buffer
        let rotate_back = |m: &[f64]| -> Vec<f64> {
            let mut tmp = alloc::vec![0.0; dim * dim];
            for p in 0..dim {
                for j in 0..dim {
                    tmp[p * dim + j] = (0..dim).map(|i| e(p, i) * m[i * dim + j]).sum();
                }
            }
            let mut out = alloc::vec![0.0; dim * dim];
            for p in 0..dim {
                for r in 0..dim {
                    out[p * dim + r] = (0..dim).map(|j| tmp[p * dim + j] * e(r, j)).sum();
                }
            }
            out
        };
        // Σ_ij M_ij H̃^(p,r)_ij read off E M Eᵀ
        let contract = |rot: &[f64], p: usize, r: usize| {
            if p == r {
                rot[p * dim + p]
            } else {
                rot[p * dim + r] + rot[r * dim + p]
            }
        };

        let mut f = alloc::vec![0.0; dim * dim];
        for i in 0..dim {
            for j in 0..dim {
                f[i * dim + j] = dd2(x[i], x[j]) * wt(i, j);
            }
        }
        let g_rot = rotate_back(&f);
        let nf = n as f64;
        let grad: Vec<f64> = coords
            .iter()
            .map(|&(p, r)| {
                let trace = if p == r { nf } else { 0.0 };
                -0.5 * trace + 0.5 * contract(&g_rot, p, r)
            })
            .collect();

        let mut e3 = alloc::vec![0.0; dim * dim * dim];
        for i in 0..dim {
            for m in 0..=i {
                for j in 0..=m {
                    let v = dd3(x[i], x[m], x[j]);
                    for (a, b, c) in [(i, m, j), (i, j, m), (m, i, j), (m, j, i), (j, i, m), (j, m, i)] {
                        e3[(a * dim + b) * dim + c] = v;
                    }
                }
            }
        }

        // Q_kl = Σ_{imj} e3[i,m,j] W̃_ji H̃^k_im H̃^l_mj
        let mut qfull = alloc::vec![0.0; nq * nq];
        let mut hk = alloc::vec![0.0; dim * dim];
        let mut z = alloc::vec![0.0; dim * dim];
        for (k, &(p, r)) in coords.iter().enumerate() {
            for i in 0..dim {
                for m in 0..dim {
                    hk[i * dim + m] = if p == r {
                        e(p, i) * e(p, m)
                    } else {
                        e(p, i) * e(r, m) + e(r, i) * e(p, m)
                    };
                }
            }
            for m in 0..dim {
                for j in 0..dim {
                    z[m * dim + j] = (0..dim)
                        .map(|i| e3[(i * dim + m) * dim + j] * wt(j, i) * hk[i * dim + m])
                        .sum();
                }
            }
            let rot = rotate_back(&z);
            for (l, &(pl, rl)) in coords.iter().enumerate() {
                qfull[k * nq + l] = contract(&rot, pl, rl);
            }
        }
        let q = SymMatrix::from_lower_fn(nq, |k, l| 0.5 * (qfull[k * nq + l] + qfull[l * nq + k]));
        Ok(Self {
            a0: log_vector(a0),
            grad,
            q,
        })
    }
}

#[derive(Clone, Debug)]
pub struct LogSpec {
    pub mu_a: Vec<f64>,
    pub sigma_a: SymMatrix,
    sigma_a_chol: Cholesky,
    sigma_a_inv: SymMatrix,
    /// Degrees of freedom of the multivariate t proposal.
    pub t_df: f64,
    dim: usize,
}

impl LogSpec {
    pub fn new(dim: usize, mu_a: Vec<f64>, sigma_a: SymMatrix, t_df: f64, max_dim: usize) -> Result<Self> {
        let q = dim * (dim + 1) / 2;
        if dim > max_dim {
            return Err(Error::QComputationOverflow { q, cap_dim: max_dim });
        }
        if mu_a.len() != q || sigma_a.dim() != q {
            return Err(Error::DimensionMismatch {
                expected: q,
                found: if mu_a.len() != q { mu_a.len() } else { sigma_a.dim() },
            });
        }
        super::positive("t_df", t_df)?;
        let sigma_a_chol = sigma_a.cholesky()?;
        let sigma_a_inv = sigma_a_chol.inverse();
        Ok(Self {
            mu_a,
            sigma_a,
            sigma_a_chol,
            sigma_a_inv,
            t_df,
            dim,
        })
    }

    /// `μ_a = (−1, …, −1, 0, …, 0)`, `Σ_a = diag(3, …, 3, 1, …, 1)` (the first
    /// `J` entries belong to the diagonal of `A`), t proposal with 7 df.
    pub fn defaults(dim: usize) -> Result<Self> {
        let q = dim * (dim + 1) / 2;
        let mu = (0..q).map(|k| if k < dim { -1.0 } else { 0.0 }).collect();
        let var: Vec<f64> = (0..q).map(|k| if k < dim { 3.0 } else { 1.0 }).collect();
        Self::new(dim, mu, SymMatrix::from_diag(&var), 7.0, DEFAULT_MAX_DIM)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn block_from(&self, a: Vec<f64>, sigma: SymMatrix) -> Result<CovBlock> {
        CovBlock::new(sigma, Latent::Log { a })
    }

    pub(super) fn g0_draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<CovBlock> {
        let a = sample_mvn(&self.mu_a, &self.sigma_a_chol, rng);
        let sigma = crate::linalg::matrix_exp(&log_matrix(&a, self.dim))?;
        self.block_from(a, sigma)
    }

    /// Expansion point: log of `(W + diag(exp(μ_a,jj))) / (n + 1)`, the
    /// scatter with one prior pseudo-observation.
    pub fn expansion_point(&self, n: usize, scatter: &SymMatrix) -> Result<SymMatrix> {
        let mut reg = scatter.clone();
        for j in 0..self.dim {
            reg.add_to(j, j, self.mu_a[j].exp());
        }
        matrix_log(&reg.scaled(1.0 / (n as f64 + 1.0)))
    }

    /// Location and scale factor of the t proposal.
    pub fn proposal(&self, n: usize, scatter: &SymMatrix) -> Result<(Vec<f64>, Cholesky)> {
        let a0 = self.expansion_point(n, scatter)?;
        let exp = LogExpansion::at(&a0, n, scatter)?;
        let precision = exp.q.add(&self.sigma_a_inv);
        let Ok(p_chol) = precision.cholesky() else {
            return Ok((self.mu_a.clone(), self.sigma_a_chol.clone()));
        };
        let prior_pull = self
            .sigma_a_inv
            .mul_vec(&self.mu_a.iter().zip(&exp.a0).map(|(m, a)| m - a).collect::<Vec<_>>());
        let rhs: Vec<f64> = exp.grad.iter().zip(&prior_pull).map(|(g, p)| g + p).collect();
        let step = p_chol.solve(&rhs);
        let centre = exp.a0.iter().zip(&step).map(|(a, s)| a + s).collect();
        let scale = p_chol.inverse().cholesky()?;
        Ok((centre, scale))
    }

    pub(super) fn update<R: Rng + ?Sized>(
        &self,
        block: &CovBlock,
        n: usize,
        scatter: &SymMatrix,
        rng: &mut R,
    ) -> Result<CovBlock> {
        if n == 0 {
            return self.g0_draw(rng);
        }
        let a_cur = match &block.latent {
            Latent::Log { a } => a.clone(),
            other => panic!("log prior given latent {other:?}"),
        };
        let (centre, scale) = self.proposal(n, scatter)?;
        let a_prop = sample_mvt(&centre, &scale, self.t_df, rng);

        let target = |a: &[f64]| -> Result<(f64, SymMatrix)> {
            let (ll, sigma) = log_lik_exact(&log_matrix(a, self.dim), n, scatter)?;
            Ok((ll + mvn_logpdf(a, &self.mu_a, &self.sigma_a_chol), sigma))
        };
        let (cur_lp, _) = target(&a_cur)?;
        let (prop_lp, prop_sigma) = target(&a_prop)?;
        let log_ratio = prop_lp - cur_lp + mvt_logpdf(&a_cur, &centre, &scale, self.t_df)
            - mvt_logpdf(&a_prop, &centre, &scale, self.t_df);
        if log_ratio.is_finite() && crate::random::open01(rng).ln() < log_ratio {
            // draws whose exponential is numerically singular are rejected
            if let Ok(b) = self.block_from(a_prop, prop_sigma) {
                return Ok(b);
            }
        }
        Ok(block.clone())
    }
}
