use crate::linalg::{Matrix, Vector};
use crate::model::DiffusionModel;
use crate::scalar::Real;

/// `dX = sin(t) dt + (1 + a·sin(t)) dB`: state-independent drift and a
/// time-varying volatility.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SineDiffusion<S> {
    pub volatility_swing: S,
}

impl<S: Real> SineDiffusion<S> {
    pub fn new(volatility_swing: S) -> Self {
        SineDiffusion { volatility_swing }
    }
}

impl<S: Real> DiffusionModel<S> for SineDiffusion<S> {
    fn dim(&self) -> usize {
        1
    }

    fn noise_dim(&self) -> usize {
        1
    }

    fn drift(&self, _x: &[S], t: S) -> Vector<S> {
        Vector::from_slice(&[t.sin()])
    }

    fn diffusion(&self, _x: &[S], t: S) -> Matrix<S> {
        Matrix::scalar(S::one() + self.volatility_swing * t.sin())
    }

    fn jacobian(&self, _x: &[S], _t: S) -> Matrix<S> {
        Matrix::scalar(S::zero())
    }
}

/// Diffusion with constant drift and constant diffusion factor.
#[derive(Clone, Debug, PartialEq)]
pub struct ConstantDiffusion<S> {
    pub drift: Vector<S>,
    pub sigma: Matrix<S>,
}

impl<S: Real> ConstantDiffusion<S> {
    pub fn new(drift: Vector<S>, sigma: Matrix<S>) -> Self {
        assert_eq!(drift.dim(), sigma.nrows());
        ConstantDiffusion { drift, sigma }
    }

    /// `μ ≡ 0`, `σ ≡ I`.
    pub fn standard(d: usize) -> Self {
        Self::new(Vector::zeros(d), Matrix::identity(d))
    }
}

impl<S: Real> DiffusionModel<S> for ConstantDiffusion<S> {
    fn dim(&self) -> usize {
        self.drift.dim()
    }

    fn noise_dim(&self) -> usize {
        self.sigma.ncols()
    }

    fn drift(&self, _x: &[S], _t: S) -> Vector<S> {
        self.drift.clone()
    }

    fn diffusion(&self, _x: &[S], _t: S) -> Matrix<S> {
        self.sigma.clone()
    }

    fn jacobian(&self, _x: &[S], _t: S) -> Matrix<S> {
        Matrix::zeros(self.dim(), self.dim())
    }
}
