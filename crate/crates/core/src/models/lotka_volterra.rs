use crate::linalg::{Matrix, Vector};
use crate::model::{ChemicalLangevin, DiffusionModel};
use crate::scalar::Real;

/// Predator–prey chemical Langevin diffusion.
///
/// Reactions, in this order: prey birth (`θ₁x₁`), predation (`θ₂x₁x₂`),
/// predator death (`θ₃x₂`).
#[derive(Clone, Debug, PartialEq)]
pub struct LotkaVolterra<S> {
    theta: [S; 3],
    stoichiometry: Matrix<S>,
}

impl<S: Real> LotkaVolterra<S> {
    pub fn new(theta: [S; 3]) -> Self {
        let one = S::one();
        let z = S::zero();
        LotkaVolterra {
            theta,
            stoichiometry: Matrix::from_rows(&[&[one, -one, z], &[z, one, -one]]),
        }
    }

    pub fn theta(&self) -> [S; 3] {
        self.theta
    }

    fn rates(&self, x: &[S]) -> [S; 3] {
        let [a, b, c] = self.theta;
        [a * x[0], b * x[0] * x[1], c * x[1]]
    }
}

impl<S: Real> DiffusionModel<S> for LotkaVolterra<S> {
    fn dim(&self) -> usize {
        2
    }

    fn noise_dim(&self) -> usize {
        3
    }

    fn drift(&self, x: &[S], _t: S) -> Vector<S> {
        let [birth, predation, death] = self.rates(x);
        Vector::from_slice(&[birth - predation, predation - death])
    }

    fn diffusion(&self, x: &[S], t: S) -> Matrix<S> {
        let lam = self.rate_roots(x, t);
        Matrix::from_fn(2, 3, |i, j| self.stoichiometry[(i, j)] * lam[j])
    }

    fn volatility(&self, x: &[S], _t: S) -> Matrix<S> {
        let [birth, predation, death] = self.rates(x);
        Matrix::from_rows(&[
            &[birth + predation, -predation],
            &[-predation, predation + death],
        ])
    }

    fn is_valid(&self, x: &[S]) -> bool {
        x.iter().all(|&v| v >= S::zero())
    }

    fn jacobian(&self, x: &[S], _t: S) -> Matrix<S> {
        let [a, b, c] = self.theta;
        Matrix::from_rows(&[
            &[a - b * x[1], -b * x[0]],
            &[b * x[1], b * x[0] - c],
        ])
    }

    fn factorization(&self) -> Option<&dyn ChemicalLangevin<S>> {
        Some(self)
    }
}

impl<S: Real> ChemicalLangevin<S> for LotkaVolterra<S> {
    fn stoichiometry(&self) -> &Matrix<S> {
        &self.stoichiometry
    }

    fn rate_roots(&self, x: &[S], _t: S) -> Vector<S> {
        self.rates(x).iter().map(|r| r.sqrt()).collect()
    }
}
