use crate::linalg::{Matrix, Vector};
use crate::model::DiffusionModel;
use crate::scalar::Real;

/// Scalar birth–death diffusion `dX = (θ₁−θ₂)X dt + √((θ₁+θ₂)X) dB`.
///
/// Linear drift makes `η`, `G` and `φ` available in closed form.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BirthDeath<S> {
    pub birth: S,
    pub death: S,
}

impl<S: Real> BirthDeath<S> {
    pub fn new(theta: [S; 2]) -> Self {
        BirthDeath {
            birth: theta[0],
            death: theta[1],
        }
    }

    fn growth(&self) -> S {
        self.birth - self.death
    }

    fn turnover(&self) -> S {
        self.birth + self.death
    }

    /// `η_t = x₀·exp((θ₁−θ₂)t)`
    pub fn analytic_eta(&self, x0: S, t: S) -> S {
        x0 * (self.growth() * t).exp()
    }

    /// `G_t = exp((θ₁−θ₂)t)`
    pub fn analytic_generator(&self, t: S) -> S {
        (self.growth() * t).exp()
    }

    /// `φ_t = (θ₁+θ₂)/(θ₁−θ₂)·η_t·(exp((θ₁−θ₂)t) − 1)`
    pub fn analytic_phi(&self, x0: S, t: S) -> S {
        let a = self.growth();
        if a == S::zero() {
            return self.turnover() * x0 * t;
        }
        self.turnover() / a * self.analytic_eta(x0, t) * ((a * t).exp() - S::one())
    }
}

impl<S: Real> DiffusionModel<S> for BirthDeath<S> {
    fn dim(&self) -> usize {
        1
    }

    fn noise_dim(&self) -> usize {
        1
    }

    fn drift(&self, x: &[S], _t: S) -> Vector<S> {
        Vector::from_slice(&[self.growth() * x[0]])
    }

    fn diffusion(&self, x: &[S], _t: S) -> Matrix<S> {
        Matrix::scalar((self.turnover() * x[0]).sqrt())
    }

    fn volatility(&self, x: &[S], _t: S) -> Matrix<S> {
        Matrix::scalar(self.turnover() * x[0])
    }

    fn is_valid(&self, x: &[S]) -> bool {
        x[0] >= S::zero()
    }

    fn jacobian(&self, _x: &[S], _t: S) -> Matrix<S> {
        Matrix::scalar(self.growth())
    }
}

/// The birth–death diffusion after `Y = 2√(X/(θ₁+θ₂))`, which has unit volatility:
/// `dY = ((θ₁−θ₂)/2·Y − 1/(2Y)) dt + dB`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TransformedBirthDeath<S> {
    pub birth: S,
    pub death: S,
}

impl<S: Real> TransformedBirthDeath<S> {
    pub fn new(theta: [S; 2]) -> Self {
        TransformedBirthDeath {
            birth: theta[0],
            death: theta[1],
        }
    }

    /// Maps an original-scale state to the unit-volatility scale.
    pub fn transform(&self, x: S) -> S {
        S::lit(2.0) * (x / (self.birth + self.death)).sqrt()
    }

    pub fn inverse_transform(&self, y: S) -> S {
        let half = y / S::lit(2.0);
        half * half * (self.birth + self.death)
    }
}

impl<S: Real> DiffusionModel<S> for TransformedBirthDeath<S> {
    fn dim(&self) -> usize {
        1
    }

    fn noise_dim(&self) -> usize {
        1
    }

    fn drift(&self, x: &[S], _t: S) -> Vector<S> {
        let two = S::lit(2.0);
        let y = x[0];
        Vector::from_slice(&[(self.birth - self.death) / two * y - S::one() / (two * y)])
    }

    fn diffusion(&self, _x: &[S], _t: S) -> Matrix<S> {
        Matrix::scalar(S::one())
    }

    fn is_valid(&self, x: &[S]) -> bool {
        x[0] > S::zero()
    }

    fn jacobian(&self, x: &[S], _t: S) -> Matrix<S> {
        let two = S::lit(2.0);
        let y = x[0];
        Matrix::scalar((self.birth - self.death) / two + S::one() / (two * y * y))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_forms_at_unit_time() {
        let m = BirthDeath::<f64>::new([0.1, 0.8]);
        assert!((m.analytic_eta(50.0, 1.0) - 24.8293).abs() < 1e-4);
        assert!((m.analytic_generator(1.0) - 0.496585).abs() < 1e-6);
        // 0.9/0.7 · 24.829265 · (1 − 0.496585)
        assert!((m.analytic_phi(50.0, 1.0) - 16.070679).abs() < 1e-5);
    }

    #[test]
    fn equal_rates_give_zero_drift() {
        let m = BirthDeath::<f64>::new([0.4, 0.4]);
        assert_eq!(m.drift(&[12.0], 0.0)[0], 0.0);
    }

    #[test]
    fn transform_maps_the_start_and_round_trips() {
        let m = TransformedBirthDeath::<f64>::new([0.1, 0.8]);
        let y0 = m.transform(50.0);
        assert!((y0 - 14.9071).abs() < 1e-4);
        assert!((m.inverse_transform(y0) - 50.0).abs() < 1e-12);
        assert_eq!(m.volatility(&[3.0], 0.0)[(0, 0)], 1.0);
        assert!(!m.is_valid(&[0.0]));
    }

    #[test]
    fn transformed_drift_vanishes_at_its_fixed_point() {
        // ((θ₁−θ₂)/2)y − 1/(2y) = 0 needs θ₁ > θ₂
        let m = TransformedBirthDeath::<f64>::new([0.8, 0.1]);
        let y = (1.0f64 / 0.7).sqrt();
        assert!(m.drift(&[y], 0.0)[0].abs() < 1e-12);
    }
}
