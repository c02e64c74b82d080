//! Deterministic skeletons ξ: the drift-only ODE path η and the linear noise
//! approximation (LNA) conditioned on the observation.
//!
//! The LNA residual `dR = J(η_t,t)R dt + σ(η_t,t)dB` has generator `G`
//! (`G' = JG`, `G_0 = I`) and covariance `φ` (`φ' = Jφ + φJ* + ζ`, `φ_0 = 0`).
//! Its conditional mean given `y¹` is
//! `φ_t G_t⁻* G_T* P₁* (P₁φ_T P₁* + Σ₁)⁻¹ (y¹ − P₁η_T)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::spd_factor;
use crate::grid::TimeGrid;
use crate::linalg::{Matrix, Vector};
use crate::model::DiffusionModel;
use crate::observation::ObservationModel;
use crate::ode::{integrate_on_grid, IntegratorStats, OdeOptions, OdeSystem};
use crate::scalar::Real;

/// Values of an ODE solution at every grid point.
#[derive(Clone, Debug, PartialEq)]
pub struct OdeSolution<T> {
    pub values: Vec<T>,
    pub stats: IntegratorStats,
}

impl<T> OdeSolution<T> {
    pub fn at(&self, k: usize) -> &T {
        &self.values[k]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

struct EtaSystem<'a, M: ?Sized>(&'a M);

impl<S: Real, M: DiffusionModel<S> + ?Sized> OdeSystem<S> for EtaSystem<'_, M> {
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn rhs(&self, t: S, y: &[S], dy: &mut [S]) -> Result<()> {
        dy.copy_from_slice(&self.0.drift(y, t));
        Ok(())
    }
}

fn unpack<S: Real>(d: usize, block: &[S]) -> Matrix<S> {
    Matrix::from_row_slice(d, d, &block[..d * d])
}

/// State layout `[η (d), G (d²), φ (d²)]`.
struct LnaSystem<'a, M: ?Sized>(&'a M);

impl<S: Real, M: DiffusionModel<S> + ?Sized> OdeSystem<S> for LnaSystem<'_, M> {
    fn dim(&self) -> usize {
        let d = self.0.dim();
        d + 2 * d * d
    }

    fn rhs(&self, t: S, y: &[S], dy: &mut [S]) -> Result<()> {
        let d = self.0.dim();
        let eta = &y[..d];
        let g = unpack(d, &y[d..]);
        let phi = unpack(d, &y[d + d * d..]);
        let jac = self.0.jacobian(eta, t);
        let zeta = self.0.volatility(eta, t);
        dy[..d].copy_from_slice(&self.0.drift(eta, t));
        dy[d..d + d * d].copy_from_slice(jac.matmul(&g).as_slice());
        let jphi = jac.matmul(&phi);
        let mut dphi = &jphi + &jphi.transpose();
        dphi.add_assign(&zeta);
        dy[d + d * d..].copy_from_slice(dphi.as_slice());
        Ok(())
    }

    fn project(&self, y: &mut [S]) {
        let d = self.0.dim();
        let mut phi = unpack(d, &y[d + d * d..]);
        phi.symmetrize();
        y[d + d * d..].copy_from_slice(phi.as_slice());
    }
}

/// State layout `[η (d), G (d²), ψ (d²)]` with `ψ' = G⁻¹ ζ G⁻*`.
struct PsiSystem<'a, M: ?Sized>(&'a M);

impl<S: Real, M: DiffusionModel<S> + ?Sized> OdeSystem<S> for PsiSystem<'_, M> {
    fn dim(&self) -> usize {
        let d = self.0.dim();
        d + 2 * d * d
    }

    fn rhs(&self, t: S, y: &[S], dy: &mut [S]) -> Result<()> {
        let d = self.0.dim();
        let eta = &y[..d];
        let g = unpack(d, &y[d..]);
        let jac = self.0.jacobian(eta, t);
        let zeta = self.0.volatility(eta, t);
        dy[..d].copy_from_slice(&self.0.drift(eta, t));
        dy[d..d + d * d].copy_from_slice(jac.matmul(&g).as_slice());
        // X = G⁻¹ζ, then ψ' = X G⁻* = (G⁻¹ X*)*
        let x = g.solve(&zeta)?;
        let dpsi = g.solve(&x.transpose())?.transpose();
        dy[d + d * d..].copy_from_slice(dpsi.as_slice());
        Ok(())
    }

    fn project(&self, y: &mut [S]) {
        let d = self.0.dim();
        let mut psi = unpack(d, &y[d + d * d..]);
        psi.symmetrize();
        y[d + d * d..].copy_from_slice(psi.as_slice());
    }
}

/// Solves `dη/dt = μ(η, t)`, `η_0 = x₀`.
pub fn solve_eta<S: Real, M: DiffusionModel<S> + ?Sized>(
    model: &M,
    x0: &[S],
    grid: &TimeGrid<S>,
    opts: &OdeOptions<S>,
) -> Result<OdeSolution<Vector<S>>> {
    model.check_state(x0)?;
    let (ys, stats) = integrate_on_grid(&EtaSystem(model), x0, grid, opts)?;
    Ok(OdeSolution {
        values: ys.into_iter().map(Vector::from).collect(),
        stats,
    })
}

/// η together with the LNA generator `G_t` and covariance `φ_t`.
#[derive(Clone, Debug, PartialEq)]
pub struct LnaSolution<S> {
    pub eta: Vec<Vector<S>>,
    pub generator: Vec<Matrix<S>>,
    pub phi: Vec<Matrix<S>>,
    pub stats: IntegratorStats,
}

/// Integrates `(η, G, φ)` jointly so that `G` and `φ` see η at every internal stage.
pub fn solve_lna<S: Real, M: DiffusionModel<S> + ?Sized>(
    model: &M,
    x0: &[S],
    grid: &TimeGrid<S>,
    opts: &OdeOptions<S>,
) -> Result<LnaSolution<S>> {
    model.check_state(x0)?;
    let d = model.dim();
    let mut y0 = x0.to_vec();
    y0.extend_from_slice(Matrix::<S>::identity(d).as_slice());
    y0.extend(std::iter::repeat(S::zero()).take(d * d));
    let (ys, stats) = integrate_on_grid(&LnaSystem(model), &y0, grid, opts)?;
    let mut sol = LnaSolution {
        eta: Vec::with_capacity(ys.len()),
        generator: Vec::with_capacity(ys.len()),
        phi: Vec::with_capacity(ys.len()),
        stats,
    };
    for y in ys {
        sol.eta.push(Vector::from_slice(&y[..d]));
        sol.generator.push(unpack(d, &y[d..]));
        sol.phi.push(unpack(d, &y[d + d * d..]));
    }
    Ok(sol)
}

/// Solves `ψ' = G⁻¹ζ(η_t,t)G⁻*`, `ψ_0 = 0`, the inverse-laden ODE that `φ = GψG*` avoids.
pub fn solve_psi<S: Real, M: DiffusionModel<S> + ?Sized>(
    model: &M,
    x0: &[S],
    grid: &TimeGrid<S>,
    opts: &OdeOptions<S>,
) -> Result<OdeSolution<Matrix<S>>> {
    model.check_state(x0)?;
    let d = model.dim();
    let mut y0 = x0.to_vec();
    y0.extend_from_slice(Matrix::<S>::identity(d).as_slice());
    y0.extend(std::iter::repeat(S::zero()).take(d * d));
    let (ys, stats) = integrate_on_grid(&PsiSystem(model), &y0, grid, opts)?;
    Ok(OdeSolution {
        values: ys.iter().map(|y| unpack(d, &y[d + d * d..])).collect(),
        stats,
    })
}

/// `E(R̂_t | Y¹ = y¹)` at every grid point.
pub fn conditioned_residual_mean<S: Real>(
    lna: &LnaSolution<S>,
    obs: &ObservationModel<S>,
) -> Result<Vec<Vector<S>>> {
    let last = lna.eta.len() - 1;
    let p = obs.projection();
    let mut innovation_cov = p.matmul(&lna.phi[last]).mul_transpose(p);
    innovation_cov.add_assign(obs.noise_cov());
    innovation_cov.symmetrize();
    let factor = spd_factor(&innovation_cov)?;
    let residual = obs.value() - &p.mul_vec(&lna.eta[last]);
    let weights = factor.solve_vec(&residual);
    let v = lna.generator[last]
        .transpose()
        .mul_vec(&p.transpose().mul_vec(&weights));
    lna.generator
        .iter()
        .zip(&lna.phi)
        .map(|(g, phi)| {
            // φ_t G_t⁻* v, solving against G_t* instead of inverting
            let u = g.transpose().solve_vec(&v)?;
            Ok(phi.mul_vec(&u))
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PathKind {
    /// ξ = η
    Ode,
    /// ξ = η + E(R̂ | y¹)
    LnaConditioned,
}

/// ξ at every grid point with `σ(ξ_k, t_k)` (and `Λ(ξ_k, t_k)` for factored models) cached.
#[derive(Clone, Debug, PartialEq)]
pub struct DeterministicPath<S> {
    kind: PathKind,
    values: Vec<Vector<S>>,
    sigma: Vec<Matrix<S>>,
    rate_roots: Option<Vec<Vector<S>>>,
}

impl<S: Real> DeterministicPath<S> {
    /// Wraps precomputed ξ values, evaluating the σ cache.
    pub fn from_values<M: DiffusionModel<S> + ?Sized>(
        kind: PathKind,
        values: Vec<Vector<S>>,
        model: &M,
        grid: &TimeGrid<S>,
    ) -> Result<Self> {
        if values.len() != grid.steps() + 1 {
            return Err(Error::invalid(format!(
                "deterministic path has {} points, grid has {}",
                values.len(),
                grid.steps() + 1
            )));
        }
        let mut sigma = Vec::with_capacity(values.len());
        for (k, xi) in values.iter().enumerate() {
            model.check_state(xi).map_err(|e| e.at_index(k))?;
            let s = model.diffusion(xi, grid.time(k));
            if !s.is_finite() {
                return Err(Error::DomainViolation {
                    index: Some(k),
                    detail: format!("σ undefined at ξ = {xi:?}"),
                });
            }
            sigma.push(s);
        }
        let rate_roots = model.factorization().map(|f| {
            values
                .iter()
                .enumerate()
                .map(|(k, xi)| f.rate_roots(xi, grid.time(k)))
                .collect()
        });
        Ok(DeterministicPath {
            kind,
            values,
            sigma,
            rate_roots,
        })
    }

    pub fn kind(&self) -> PathKind {
        self.kind
    }

    pub fn values(&self) -> &[Vector<S>] {
        &self.values
    }

    pub fn at(&self, k: usize) -> &Vector<S> {
        &self.values[k]
    }

    pub fn sigma_at(&self, k: usize) -> &Matrix<S> {
        &self.sigma[k]
    }

    pub fn rate_roots(&self) -> Option<&[Vector<S>]> {
        self.rate_roots.as_deref()
    }

    pub fn terminal(&self) -> &Vector<S> {
        self.values.last().expect("non-empty path")
    }
}

/// Builds ξ of the requested kind; `obs` is required for [`PathKind::LnaConditioned`].
pub fn build_xi<S: Real, M: DiffusionModel<S> + ?Sized>(
    kind: PathKind,
    model: &M,
    x0: &[S],
    grid: &TimeGrid<S>,
    obs: Option<&ObservationModel<S>>,
    opts: &OdeOptions<S>,
) -> Result<DeterministicPath<S>> {
    let values = match kind {
        PathKind::Ode => solve_eta(model, x0, grid, opts)?.values,
        PathKind::LnaConditioned => {
            let obs = obs.ok_or_else(|| {
                Error::invalid("the LNA-conditioned path needs an observation")
            })?;
            let lna = solve_lna(model, x0, grid, opts)?;
            let shift = conditioned_residual_mean(&lna, obs)?;
            lna.eta
                .iter()
                .zip(&shift)
                .map(|(eta, r)| eta + r)
                .collect()
        }
    };
    DeterministicPath::from_values(kind, values, model, grid)
}
