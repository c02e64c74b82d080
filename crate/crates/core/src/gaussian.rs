//! Multivariate Gaussian primitives with the covariance regularization policy.
//!
//! A covariance is first factored as is. If that fails, jitter
//! `ε · trace(Σ)/d · I` is added with `ε = 1e-12`, escalating by ×10 up to
//! `1e-8`. Sampling additionally accepts exactly singular PSD matrices through
//! an eigendecomposition square root.

use crate::error::{Error, Result};
use crate::linalg::{Cholesky, Matrix, Vector};
use crate::scalar::Real;

pub const JITTER_START: f64 = 1e-12;
pub const JITTER_MAX: f64 = 1e-8;

/// Cholesky factor of an SPD matrix, regularized on failure.
pub fn spd_factor<S: Real>(cov: &Matrix<S>) -> Result<Cholesky<S>> {
    if !cov.is_finite() {
        return Err(Error::numeric("non-finite covariance"));
    }
    if let Some(c) = cov.cholesky() {
        return Ok(c);
    }
    let d = cov.nrows().max(1);
    let base = cov.trace() / S::of_usize(d);
    if !(base > S::zero()) {
        return Err(Error::numeric(
            "covariance has non-positive trace; cannot regularize",
        ));
    }
    let mut eps = JITTER_START;
    while eps <= JITTER_MAX * (1.0 + 1e-9) {
        let mut m = cov.clone();
        m.add_diagonal(S::lit(eps) * base);
        if let Some(c) = m.cholesky() {
            return Ok(c);
        }
        eps *= 10.0;
    }
    Err(Error::numeric(format!(
        "covariance not positive definite after jitter {JITTER_MAX:e}·trace/d"
    )))
}

/// A square root `L` with `L·L* = cov` for PSD `cov`, including singular ones.
pub fn psd_sqrt<S: Real>(cov: &Matrix<S>) -> Result<Matrix<S>> {
    if let Ok(c) = spd_factor(cov) {
        return Ok(c.into_lower());
    }
    if !cov.is_finite() {
        return Err(Error::numeric("non-finite covariance"));
    }
    let (vals, vecs) = cov.symmetric_eigen();
    let top = vals.iter().fold(S::zero(), |m, &v| m.max(v.abs()));
    let tol = S::lit(JITTER_MAX) * top;
    if vals.iter().any(|&v| v < -tol) {
        return Err(Error::numeric(format!(
            "covariance is not positive semi-definite (eigenvalues {vals:?})"
        )));
    }
    let roots: Vec<S> = vals.iter().map(|&v| v.max(S::zero()).sqrt()).collect();
    Ok(vecs.matmul(&Matrix::diag(&roots)))
}

/// `mean + L·noise` with `L·L* = cov`.
pub fn gaussian_sample<S: Real>(mean: &[S], cov: &Matrix<S>, noise: &[S]) -> Result<Vector<S>> {
    let l = psd_sqrt(cov)?;
    let mut out = Vector::from_slice(mean);
    out.axpy(S::one(), &l.mul_vec(noise));
    Ok(out)
}

/// `log φ(x; mean, LL*)` for an already factored covariance.
pub fn log_pdf_factored<S: Real>(x: &[S], mean: &[S], factor: &Cholesky<S>) -> S {
    let d = S::of_usize(x.len());
    let r: Vector<S> = x.iter().zip(mean).map(|(&a, &b)| a - b).collect();
    let two_pi = S::lit(2.0) * S::PI();
    -S::lit(0.5) * (d * two_pi.ln() + factor.log_det() + factor.mahalanobis_sq(&r))
}

pub fn log_pdf<S: Real>(x: &[S], mean: &[S], cov: &Matrix<S>) -> Result<S> {
    let f = spd_factor(cov)?;
    Ok(log_pdf_factored(x, mean, &f))
}
