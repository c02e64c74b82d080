//! The diffusion abstraction `dX = μ(X,t)dt + σ(X,t)dB`.
//!
//! Parameters θ live inside each model value; the trait only sees states and times.

use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector};
use crate::scalar::Real;

/// Constant reaction-structure matrix `S` of a chemical-Langevin volatility
/// `ζ = S Λ² S*`, with `σ = S Λ` and `Λ` diagonal.
pub trait ChemicalLangevin<S: Real> {
    /// `S`, a `d × r` matrix.
    fn stoichiometry(&self) -> &Matrix<S>;
    /// Diagonal of `Λ(x, t)` as an r-vector.
    fn rate_roots(&self, x: &[S], t: S) -> Vector<S>;
}

pub trait DiffusionModel<S: Real>: Send + Sync {
    /// State dimension `d`.
    fn dim(&self) -> usize;
    /// Brownian dimension `r`.
    fn noise_dim(&self) -> usize;

    fn drift(&self, x: &[S], t: S) -> Vector<S>;

    /// `σ(x, t)`, a `d × r` matrix. Only meaningful on valid states.
    fn diffusion(&self, x: &[S], t: S) -> Matrix<S>;

    /// `ζ = σσ*`.
    fn volatility(&self, x: &[S], t: S) -> Matrix<S> {
        self.diffusion(x, t).gram()
    }

    /// Domain predicate (e.g. non-negative populations).
    fn is_valid(&self, _x: &[S]) -> bool {
        true
    }

    /// `J_ij = ∂μ_i/∂x_j`; central differences unless overridden.
    fn jacobian(&self, x: &[S], t: S) -> Matrix<S> {
        finite_difference_jacobian(|z| self.drift(z, t), x)
    }

    /// The `σ = SΛ` factorization, when the model has one.
    fn factorization(&self) -> Option<&dyn ChemicalLangevin<S>> {
        None
    }

    /// Errors with a domain violation if `x` is outside the model domain.
    fn check_state(&self, x: &[S]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::invalid(format!(
                "state has {} components, model dimension is {}",
                x.len(),
                self.dim()
            )));
        }
        if !x.iter().all(|v| v.is_finite()) {
            return Err(Error::domain(format!("non-finite state {x:?}")));
        }
        if self.is_valid(x) {
            Ok(())
        } else {
            Err(Error::domain(format!("state {x:?} outside model domain")))
        }
    }
}

/// Central differences with step `h_j = 1e-5·(1 + |x_j|)`.
pub fn finite_difference_jacobian<S: Real>(
    f: impl Fn(&[S]) -> Vector<S>,
    x: &[S],
) -> Matrix<S> {
    let n = x.len();
    let m = f(x).dim();
    let mut jac = Matrix::zeros(m, n);
    let mut probe = Vector::from_slice(x);
    for j in 0..n {
        let h = S::lit(1e-5) * (S::one() + x[j].abs());
        probe[j] = x[j] + h;
        let up = f(&probe);
        probe[j] = x[j] - h;
        let down = f(&probe);
        probe[j] = x[j];
        for i in 0..m {
            jac[(i, j)] = (up[i] - down[i]) / (S::lit(2.0) * h);
        }
    }
    jac
}

impl<S: Real, M: DiffusionModel<S> + ?Sized> DiffusionModel<S> for &M {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn noise_dim(&self) -> usize {
        (**self).noise_dim()
    }
    fn drift(&self, x: &[S], t: S) -> Vector<S> {
        (**self).drift(x, t)
    }
    fn diffusion(&self, x: &[S], t: S) -> Matrix<S> {
        (**self).diffusion(x, t)
    }
    fn volatility(&self, x: &[S], t: S) -> Matrix<S> {
        (**self).volatility(x, t)
    }
    fn is_valid(&self, x: &[S]) -> bool {
        (**self).is_valid(x)
    }
    fn jacobian(&self, x: &[S], t: S) -> Matrix<S> {
        (**self).jacobian(x, t)
    }
    fn factorization(&self) -> Option<&dyn ChemicalLangevin<S>> {
        (**self).factorization()
    }
}

impl<S: Real, M: DiffusionModel<S> + ?Sized> DiffusionModel<S> for Box<M> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn noise_dim(&self) -> usize {
        (**self).noise_dim()
    }
    fn drift(&self, x: &[S], t: S) -> Vector<S> {
        (**self).drift(x, t)
    }
    fn diffusion(&self, x: &[S], t: S) -> Matrix<S> {
        (**self).diffusion(x, t)
    }
    fn volatility(&self, x: &[S], t: S) -> Matrix<S> {
        (**self).volatility(x, t)
    }
    fn is_valid(&self, x: &[S]) -> bool {
        (**self).is_valid(x)
    }
    fn jacobian(&self, x: &[S], t: S) -> Matrix<S> {
        (**self).jacobian(x, t)
    }
    fn factorization(&self) -> Option<&dyn ChemicalLangevin<S>> {
        (**self).factorization()
    }
}
