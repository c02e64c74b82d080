use crate::error::{Error, Result};
use crate::gaussian::{log_pdf_factored, spd_factor};
use crate::linalg::{Matrix, Vector};
use crate::scalar::Real;

/// Linear-Gaussian observation `Y¹ | X_T = x ~ N(P₁x, Σ₁)` with realized value `y¹`.
#[derive(Clone, Debug, PartialEq)]
pub struct ObservationModel<S> {
    projection: Matrix<S>,
    noise_cov: Matrix<S>,
    value: Vector<S>,
}

impl<S: Real> ObservationModel<S> {
    pub fn new(projection: Matrix<S>, noise_cov: Matrix<S>, value: Vector<S>) -> Result<Self> {
        let r = projection.nrows();
        if noise_cov.shape() != (r, r) || value.dim() != r {
            return Err(Error::invalid(format!(
                "observation shapes disagree: P is {:?}, Σ is {:?}, y has {}",
                projection.shape(),
                noise_cov.shape(),
                value.dim()
            )));
        }
        let scale = noise_cov.max_abs();
        let tol = S::lit(1e-12) * (S::one() + scale);
        for i in 0..r {
            for j in 0..r {
                if (noise_cov[(i, j)] - noise_cov[(j, i)]).abs() > tol {
                    return Err(Error::invalid("observation noise covariance is not symmetric"));
                }
            }
        }
        let (vals, _) = noise_cov.symmetric_eigen();
        if vals.iter().any(|&v| v < -tol) {
            return Err(Error::invalid(
                "observation noise covariance is not positive semi-definite",
            ));
        }
        Ok(ObservationModel {
            projection,
            noise_cov,
            value,
        })
    }

    /// Full observation of the state with isotropic noise `σ²·I` (`P₁ = I`).
    pub fn direct(value: Vector<S>, noise_var: S) -> Result<Self> {
        let d = value.dim();
        Self::new(
            Matrix::identity(d),
            Matrix::identity(d).scale(noise_var),
            value,
        )
    }

    pub fn projection(&self) -> &Matrix<S> {
        &self.projection
    }

    pub fn noise_cov(&self) -> &Matrix<S> {
        &self.noise_cov
    }

    pub fn value(&self) -> &Vector<S> {
        &self.value
    }

    pub fn obs_dim(&self) -> usize {
        self.projection.nrows()
    }

    pub fn state_dim(&self) -> usize {
        self.projection.ncols()
    }

    /// Same `P₁`, `Σ₁` with a different realized `y¹`.
    pub fn with_value(&self, value: Vector<S>) -> Self {
        assert_eq!(value.dim(), self.obs_dim());
        ObservationModel {
            value,
            ..self.clone()
        }
    }

    /// `log g₁(y¹ | x)`
    pub fn log_density(&self, x: &[S]) -> Result<S> {
        let f = spd_factor(&self.noise_cov)?;
        Ok(log_pdf_factored(&self.value, &self.projection.mul_vec(x), &f))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_asymmetric_or_indefinite_noise() {
        let p = Matrix::identity(2);
        let y = Vector::from_slice(&[0.0, 0.0]);
        let asym = Matrix::from_rows(&[&[1.0, 0.5], &[0.0, 1.0]]);
        assert!(ObservationModel::new(p.clone(), asym, y.clone()).is_err());
        let indef = Matrix::from_rows(&[&[1.0, 2.0], &[2.0, 1.0]]);
        assert!(ObservationModel::new(p, indef, y).is_err());
    }

    #[test]
    fn scalar_log_density() {
        let obs = ObservationModel::direct(Vector::from_slice(&[1.0]), 4.0).unwrap();
        let lp = obs.log_density(&[0.0]).unwrap();
        let expect = -0.5 * (2.0 * std::f64::consts::PI * 4.0).ln() - 0.5 * 0.25;
        assert!((lp - expect).abs() < 1e-14);
    }
}
