use crate::linalg::{Matrix, Vector};
use crate::model::{ChemicalLangevin, DiffusionModel};
use crate::scalar::Real;

/// mRNA/protein diffusion with the time-inhomogeneous transcription rate
/// `k_R(t) = b₀·exp(−b₁(t − b₂)²) + b₃`.
///
/// `θ = (γ_R, γ_P, k_P, b₀, b₁, b₂, b₃)`. The diffusion factor is the diagonal
/// matrix `diag(√(k_R(t) + γ_R R), √(k_P R + γ_P P))`, so it factors as
/// `S = I`, `Λ = σ`.
#[derive(Clone, Debug, PartialEq)]
pub struct GeneExpression<S> {
    theta: [S; 7],
    identity: Matrix<S>,
}

impl<S: Real> GeneExpression<S> {
    pub fn new(theta: [S; 7]) -> Self {
        GeneExpression {
            theta,
            identity: Matrix::identity(2),
        }
    }

    pub fn theta(&self) -> [S; 7] {
        self.theta
    }

    pub fn transcription_rate(&self, t: S) -> S {
        let [_, _, _, b0, b1, b2, b3] = self.theta;
        let u = t - b2;
        b0 * (-b1 * u * u).exp() + b3
    }

    fn intensities(&self, x: &[S], t: S) -> [S; 2] {
        let [gamma_r, gamma_p, k_p, ..] = self.theta;
        [
            self.transcription_rate(t) + gamma_r * x[0],
            k_p * x[0] + gamma_p * x[1],
        ]
    }
}

impl<S: Real> DiffusionModel<S> for GeneExpression<S> {
    fn dim(&self) -> usize {
        2
    }

    fn noise_dim(&self) -> usize {
        2
    }

    fn drift(&self, x: &[S], t: S) -> Vector<S> {
        let [gamma_r, gamma_p, k_p, ..] = self.theta;
        Vector::from_slice(&[
            self.transcription_rate(t) - gamma_r * x[0],
            k_p * x[0] - gamma_p * x[1],
        ])
    }

    fn diffusion(&self, x: &[S], t: S) -> Matrix<S> {
        let [a, b] = self.intensities(x, t);
        Matrix::diag(&[a.sqrt(), b.sqrt()])
    }

    fn volatility(&self, x: &[S], t: S) -> Matrix<S> {
        let [a, b] = self.intensities(x, t);
        Matrix::diag(&[a, b])
    }

    fn is_valid(&self, x: &[S]) -> bool {
        x.iter().all(|&v| v >= S::zero())
    }

    fn jacobian(&self, _x: &[S], _t: S) -> Matrix<S> {
        let [gamma_r, gamma_p, k_p, ..] = self.theta;
        Matrix::from_rows(&[&[-gamma_r, S::zero()], &[k_p, -gamma_p]])
    }

    fn factorization(&self) -> Option<&dyn ChemicalLangevin<S>> {
        Some(self)
    }
}

impl<S: Real> ChemicalLangevin<S> for GeneExpression<S> {
    fn stoichiometry(&self) -> &Matrix<S> {
        &self.identity
    }

    fn rate_roots(&self, x: &[S], t: S) -> Vector<S> {
        self.intensities(x, t).iter().map(|r| r.sqrt()).collect()
    }
}
