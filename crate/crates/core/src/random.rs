//! Random variate generation.
//!
//! Gamma-family laws use the shape/rate convention throughout:
//! `Gamma(a, b)` has mean `a / b`, `InvGamma(a, b)` has mean `b / (a − 1)`.

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;
use rand_distr::{Beta, Distribution, Gamma, Open01, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{Cholesky, SymMatrix};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

#[inline]
pub fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// Uniform on the open interval `(0, 1)`.
#[inline]
pub fn open01<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(Open01)
}

/// `Gamma(shape, rate)`.
pub fn gamma<R: Rng + ?Sized>(shape: f64, rate: f64, rng: &mut R) -> f64 {
    debug_assert!(shape > 0.0 && rate > 0.0, "gamma({shape}, {rate})");
    Gamma::new(shape, 1.0 / rate)
        .expect("gamma parameters must be positive and finite")
        .sample(rng)
}

/// `InvGamma(shape, scale)`: reciprocal of `Gamma(shape, rate = scale)`.
pub fn inv_gamma<R: Rng + ?Sized>(shape: f64, scale: f64, rng: &mut R) -> f64 {
    1.0 / gamma(shape, scale, rng)
}

pub fn beta<R: Rng + ?Sized>(a: f64, b: f64, rng: &mut R) -> f64 {
    Beta::new(a, b)
        .expect("beta parameters must be positive and finite")
        .sample(rng)
}

pub fn chi_squared<R: Rng + ?Sized>(df: f64, rng: &mut R) -> f64 {
    gamma(0.5 * df, 0.5, rng)
}

pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

/// Log of the multivariate gamma function `Γ_J(x)`.
pub fn ln_mv_gamma(dim: usize, x: f64) -> f64 {
    let d = dim as f64;
    0.25 * d * (d - 1.0) * core::f64::consts::PI.ln() + (0..dim).map(|j| ln_gamma(x - 0.5 * j as f64)).sum::<f64>()
}

pub fn gamma_logpdf(x: f64, shape: f64, rate: f64) -> f64 {
    shape * rate.ln() - ln_gamma(shape) + (shape - 1.0) * x.ln() - rate * x
}

pub fn inv_gamma_logpdf(x: f64, shape: f64, scale: f64) -> f64 {
    shape * scale.ln() - ln_gamma(shape) - (shape + 1.0) * x.ln() - scale / x
}

/// Draw from `N_J(mean, L Lᵀ)`.
pub fn sample_mvn<R: Rng + ?Sized>(mean: &[f64], cov_chol: &Cholesky, rng: &mut R) -> Vec<f64> {
    let z: Vec<f64> = (0..mean.len()).map(|_| standard_normal(rng)).collect();
    cov_chol.mul_vec(&z).into_iter().zip(mean).map(|(a, m)| a + m).collect()
}

/// Draw from `N(P⁻¹ b, P⁻¹)` given the precision `P` and linear term `b`.
pub fn sample_mvn_precision<R: Rng + ?Sized>(precision: &SymMatrix, linear: &[f64], rng: &mut R) -> Result<Vec<f64>> {
    let l = precision.cholesky()?;
    let mut z: Vec<f64> = (0..linear.len()).map(|_| standard_normal(rng)).collect();
    l.solve_upper_in_place(&mut z);
    Ok(l.solve(linear).into_iter().zip(z).map(|(m, e)| m + e).collect())
}

/// Multivariate normal log density evaluated through the covariance factor.
pub fn mvn_logpdf(x: &[f64], mean: &[f64], cov_chol: &Cholesky) -> f64 {
    let mut scratch = alloc::vec![0.0; x.len()];
    let maha = cov_chol.mahalanobis_sq(x, mean, &mut scratch);
    -0.5 * (x.len() as f64 * LN_2PI + cov_chol.log_det() + maha)
}

/// Draw `mean + L z √(df / g)` with `z ~ N(0, I)`, `g ~ χ²(df)`.
pub fn sample_mvt<R: Rng + ?Sized>(mean: &[f64], scale_chol: &Cholesky, df: f64, rng: &mut R) -> Vec<f64> {
    let z: Vec<f64> = (0..mean.len()).map(|_| standard_normal(rng)).collect();
    let g = chi_squared(df, rng);
    let w = (df / g).sqrt();
    scale_chol
        .mul_vec(&z)
        .into_iter()
        .zip(mean)
        .map(|(a, m)| m + w * a)
        .collect()
}

pub fn mvt_logpdf(x: &[f64], mean: &[f64], scale_chol: &Cholesky, df: f64) -> f64 {
    let p = x.len() as f64;
    let mut scratch = alloc::vec![0.0; x.len()];
    let maha = scale_chol.mahalanobis_sq(x, mean, &mut scratch);
    ln_gamma(0.5 * (df + p))
        - ln_gamma(0.5 * df)
        - 0.5 * p * (df * core::f64::consts::PI).ln()
        - 0.5 * scale_chol.log_det()
        - 0.5 * (df + p) * (maha / df).ln_1p()
}

fn check_df(df: f64, dim: usize) -> Result<()> {
    if df.is_finite() && df > dim as f64 - 1.0 {
        Ok(())
    } else {
        Err(Error::DegreesOfFreedomTooSmall { df, dim })
    }
}

/// Bartlett factor: returns the lower-triangular `L A` whose outer product is
/// a `Wishart(L Lᵀ, df)` draw.
pub fn sample_wishart_factor<R: Rng + ?Sized>(scale_chol: &Cholesky, df: f64, rng: &mut R) -> Result<Cholesky> {
    let n = scale_chol.dim();
    check_df(df, n)?;
    let mut a = alloc::vec![0.0; n * n];
    for i in 0..n {
        a[i * n + i] = chi_squared(df - i as f64, rng).sqrt();
        for j in 0..i {
            a[i * n + j] = standard_normal(rng);
        }
    }
    Cholesky::from_lower(n, scale_chol.mul_lower(&a))
}

/// `Wishart(scale, df)`, mean `df · scale`.
pub fn sample_wishart<R: Rng + ?Sized>(scale: &SymMatrix, df: f64, rng: &mut R) -> Result<SymMatrix> {
    check_df(df, scale.dim())?;
    let l = scale.cholesky()?;
    Ok(sample_wishart_factor(&l, df, rng)?.reconstruct())
}

/// `InvWishart(scale, df)` (density ∝ |Σ|^{-(df+J+1)/2} exp(−tr(scale Σ⁻¹)/2)),
/// drawn as the inverse of a `Wishart(scale⁻¹, df)` variate. Returns the draw
/// together with its Cholesky factor.
pub fn sample_inv_wishart_factored<R: Rng + ?Sized>(
    scale: &SymMatrix,
    df: f64,
    rng: &mut R,
) -> Result<(SymMatrix, Cholesky)> {
    check_df(df, scale.dim())?;
    let inv_scale = scale.cholesky()?.inverse();
    let l = inv_scale.cholesky()?;
    let w = sample_wishart_factor(&l, df, rng)?;
    let sigma = w.inverse();
    let chol = sigma.cholesky()?;
    Ok((sigma, chol))
}

pub fn sample_inv_wishart<R: Rng + ?Sized>(scale: &SymMatrix, df: f64, rng: &mut R) -> Result<SymMatrix> {
    Ok(sample_inv_wishart_factored(scale, df, rng)?.0)
}

/// Log density of `InvWishart(scale, df)` at `x` (given its factor).
pub fn inv_wishart_logpdf(x_chol: &Cholesky, scale: &SymMatrix, scale_log_det: f64, df: f64) -> f64 {
    let j = x_chol.dim() as f64;
    let tr = x_chol.inverse().trace_product(scale);
    0.5 * df * scale_log_det
        - 0.5 * df * j * core::f64::consts::LN_2
        - ln_mv_gamma(x_chol.dim(), 0.5 * df)
        - 0.5 * (df + j + 1.0) * x_chol.log_det()
        - 0.5 * tr
}

/// Inverse Gaussian draw by the Michael–Schucany–Haas transformation.
pub fn sample_inv_gaussian<R: Rng + ?Sized>(mu: f64, lambda: f64, rng: &mut R) -> f64 {
    debug_assert!(mu > 0.0 && lambda > 0.0);
    let nu = standard_normal(rng);
    let y = nu * nu;
    // smaller root of the quadratic, written to avoid cancellation when
    // mu·y/lambda is large
    let r = 0.5 * mu * y / lambda;
    let x = mu / (1.0 + r + (r * (2.0 + r)).sqrt());
    let u = open01(rng);
    if u <= mu / (mu + x) {
        x
    } else {
        mu * mu / x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn mvn_logpdf_known_values() {
        let l = SymMatrix::identity(2).cholesky().unwrap();
        let v = mvn_logpdf(&[0.0, 0.0], &[0.0, 0.0], &l);
        assert!((v + (2.0 * core::f64::consts::PI).ln()).abs() < 1e-14);
        assert!((v + 1.83788).abs() < 1e-5);

        let l = SymMatrix::from_diag(&[4.0]).cholesky().unwrap();
        let v = mvn_logpdf(&[2.0], &[0.0], &l);
        let want = -0.5 * (8.0 * core::f64::consts::PI).ln() - 0.5;
        assert!((v - want).abs() < 1e-14);
        assert!((v + 2.11209).abs() < 1e-5);
    }

    #[test]
    fn seeded_draws_reproduce() {
        let l = SymMatrix::identity(3).cholesky().unwrap();
        let a = sample_mvn(&[0.0; 3], &l, &mut ChaCha8Rng::seed_from_u64(9));
        let b = sample_mvn(&[0.0; 3], &l, &mut ChaCha8Rng::seed_from_u64(9));
        assert_eq!(a, b);
        let a = sample_mvt(&[0.0; 3], &l, 4.0, &mut ChaCha8Rng::seed_from_u64(9));
        let b = sample_mvt(&[0.0; 3], &l, 4.0, &mut ChaCha8Rng::seed_from_u64(9));
        assert_eq!(a, b);
    }

    #[test]
    fn wishart_rejects_small_df() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = SymMatrix::identity(3);
        assert!(matches!(
            sample_wishart(&s, 2.0, &mut rng),
            Err(Error::DegreesOfFreedomTooSmall { .. })
        ));
        assert!(matches!(
            sample_inv_wishart(&s, 1.5, &mut rng),
            Err(Error::DegreesOfFreedomTooSmall { .. })
        ));
    }

    #[test]
    fn inv_gaussian_is_positive() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..100_000 {
            assert!(sample_inv_gaussian(3.0, 0.01, &mut rng) > 0.0);
            assert!(sample_inv_gaussian(1e8, 1.0, &mut rng) > 0.0);
        }
    }

    #[test]
    fn inv_wishart_density_scalar_matches_inv_gamma() {
        // IW_1(scale s, df ν) is InvGamma(ν/2, s/2)
        let x = 0.7;
        let l = SymMatrix::from_diag(&[x]).cholesky().unwrap();
        let s = 2.0;
        let nu = 5.0;
        let iw = inv_wishart_logpdf(&l, &SymMatrix::from_diag(&[s]), s.ln(), nu);
        let ig = inv_gamma_logpdf(x, nu / 2.0, s / 2.0);
        assert!((iw - ig).abs() < 1e-12);
    }
}
