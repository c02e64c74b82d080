//! Euler–Maruyama transition `x_{k+1} | x_k ~ N(x_k + Δt·μ, Δt·ζ)`.

use crate::error::{Error, Result};
use crate::gaussian::{log_pdf_factored, spd_factor};
use crate::linalg::{Matrix, Vector};
use crate::model::DiffusionModel;
use crate::scalar::Real;

/// Mean and covariance of the EM transition from `x` at time `t`.
pub fn em_mean_cov<S: Real, M: DiffusionModel<S> + ?Sized>(
    model: &M,
    x: &[S],
    t: S,
    dt: S,
) -> Result<(Vector<S>, Matrix<S>)> {
    if !(dt > S::zero()) {
        return Err(Error::invalid("EM step needs dt > 0"));
    }
    model.check_state(x)?;
    let mut mean = Vector::from_slice(x);
    mean.axpy(dt, &model.drift(x, t));
    let cov = model.volatility(x, t).scale(dt);
    Ok((mean, cov))
}

/// `log f̂(x_next | x)` under the EM transition.
pub fn em_log_density<S: Real, M: DiffusionModel<S> + ?Sized>(
    model: &M,
    x_next: &[S],
    x: &[S],
    t: S,
    dt: S,
) -> Result<S> {
    let (mean, cov) = em_mean_cov(model, x, t, dt)?;
    let f = spd_factor(&cov)?;
    Ok(log_pdf_factored(x_next, &mean, &f))
}

/// `x + Δt·μ + √Δt·σ·noise` with `noise` an r-vector of standard normals.
pub fn em_forward_step<S: Real, M: DiffusionModel<S> + ?Sized>(
    model: &M,
    x: &[S],
    t: S,
    dt: S,
    noise: &[S],
) -> Result<Vector<S>> {
    if !(dt > S::zero()) {
        return Err(Error::invalid("EM step needs dt > 0"));
    }
    model.check_state(x)?;
    if noise.len() != model.noise_dim() {
        return Err(Error::invalid(format!(
            "noise has {} components, model noise dimension is {}",
            noise.len(),
            model.noise_dim()
        )));
    }
    let mut out = Vector::from_slice(x);
    out.axpy(dt, &model.drift(x, t));
    out.axpy(dt.sqrt(), &model.diffusion(x, t).mul_vec(noise));
    Ok(out)
}
