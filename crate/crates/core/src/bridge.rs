//! Per-step Gaussian proposals `x_{k+1} | x_k, y¹ ~ N(a_k, V_k)`.
//!
//! Every bridge conditions the joint Gaussian of `(X_{k+1}, X_K)` on the
//! observation. They differ only in the terminal mean `m_K` and terminal
//! covariance `Ψ_K`:
//!
//! | kind | `m_K` | `Ψ_K` |
//! |------|-------|-------|
//! | MDB  | `x_k + τμ` | `τζ(x_k)` |
//! | RB   | `x_k + (ξ_K−ξ_k) + τ(μ − (ξ_{k+1}−ξ_k)/Δt)` | `τζ(x_k)` |
//! | RB̄   | as RB | `Δtζ(x_k) + Δt Σ_{j>k} (A_j + D)(A_j + D)*` |
//!
//! with `τ = T − t_k`, `A_j = σ(ξ_j, t_j)` and `D = σ(x_k) − σ(ξ_k)`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::em::em_mean_cov;
use crate::error::{Error, Result};
use crate::gaussian::spd_factor;
use crate::grid::TimeGrid;
use crate::linalg::{Matrix, Vector};
use crate::model::DiffusionModel;
use crate::observation::ObservationModel;
use crate::ode::OdeOptions;
use crate::paths::{build_xi, DeterministicPath, PathKind};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ProposalKind {
    #[serde(rename = "fs")]
    Fs,
    #[serde(rename = "mdb")]
    Mdb,
    #[serde(rename = "rb-ode")]
    RbOde,
    #[serde(rename = "rb-lna")]
    RbLna,
    #[serde(rename = "rbbar-ode")]
    RbBarOde,
    #[serde(rename = "rbbar-lna")]
    RbBarLna,
}

impl ProposalKind {
    pub const ALL: [ProposalKind; 6] = [
        ProposalKind::Fs,
        ProposalKind::Mdb,
        ProposalKind::RbOde,
        ProposalKind::RbLna,
        ProposalKind::RbBarOde,
        ProposalKind::RbBarLna,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ProposalKind::Fs => "fs",
            ProposalKind::Mdb => "mdb",
            ProposalKind::RbOde => "rb-ode",
            ProposalKind::RbLna => "rb-lna",
            ProposalKind::RbBarOde => "rbbar-ode",
            ProposalKind::RbBarLna => "rbbar-lna",
        }
    }

    /// The skeleton this kind needs, if any.
    pub fn path_kind(self) -> Option<PathKind> {
        match self {
            ProposalKind::Fs | ProposalKind::Mdb => None,
            ProposalKind::RbOde | ProposalKind::RbBarOde => Some(PathKind::Ode),
            ProposalKind::RbLna | ProposalKind::RbBarLna => Some(PathKind::LnaConditioned),
        }
    }

    /// True for the volatility-tracking residual bridges.
    pub fn tracks_volatility(self) -> bool {
        matches!(self, ProposalKind::RbBarOde | ProposalKind::RbBarLna)
    }
}

impl fmt::Display for ProposalKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProposalKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ProposalKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                Error::invalid(format!(
                    "unknown proposal '{s}' (expected fs, mdb, rb-ode, rb-lna, rbbar-ode, rbbar-lna)"
                ))
            })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepConditional<S> {
    pub mean: Vector<S>,
    pub cov: Matrix<S>,
    pub kind: ProposalKind,
}

/// Suffix sums over `j = k+1..K−1` of `A_j = σ(ξ_j, t_j)` and `A_j A_j*`,
/// indexed by `k = 0..K−1`.
#[derive(Clone, Debug, PartialEq)]
pub struct SigmaSuffixStats<S> {
    sum_sigma: Vec<Matrix<S>>,
    sum_gram: Vec<Matrix<S>>,
    factored: Option<FactoredSuffix<S>>,
}

/// Suffix sums of `Λ(ξ_j)` diagonals and their squares.
#[derive(Clone, Debug, PartialEq)]
pub struct FactoredSuffix<S> {
    pub stoichiometry: Matrix<S>,
    pub sum_roots: Vec<Vector<S>>,
    pub sum_roots_sq: Vec<Vector<S>>,
}

impl<S: Real> SigmaSuffixStats<S> {
    /// One backward pass over the cached `σ(ξ_j, t_j)`.
    pub fn new<M: DiffusionModel<S> + ?Sized>(xi: &DeterministicPath<S>, model: &M) -> Result<Self> {
        let n_steps = xi.values().len() - 1;
        if n_steps == 0 {
            return Err(Error::invalid("deterministic path has no steps"));
        }
        let (d, r) = xi.sigma_at(0).shape();
        let mut sum_sigma = vec![Matrix::zeros(d, r); n_steps];
        let mut sum_gram = vec![Matrix::zeros(d, d); n_steps];
        for k in (0..n_steps - 1).rev() {
            let a = xi.sigma_at(k + 1);
            sum_sigma[k] = &sum_sigma[k + 1] + a;
            sum_gram[k] = &sum_gram[k + 1] + &a.gram();
        }
        let factored = match (model.factorization(), xi.rate_roots()) {
            (Some(f), Some(roots)) => {
                let mut sum_roots = vec![Vector::zeros(r); n_steps];
                let mut sum_roots_sq = vec![Vector::zeros(r); n_steps];
                for k in (0..n_steps - 1).rev() {
                    let l = &roots[k + 1];
                    sum_roots[k] = &sum_roots[k + 1] + l;
                    let sq: Vector<S> = l.iter().map(|v| *v * *v).collect();
                    sum_roots_sq[k] = &sum_roots_sq[k + 1] + &sq;
                }
                Some(FactoredSuffix {
                    stoichiometry: f.stoichiometry().clone(),
                    sum_roots,
                    sum_roots_sq,
                })
            }
            _ => None,
        };
        Ok(SigmaSuffixStats {
            sum_sigma,
            sum_gram,
            factored,
        })
    }

    /// Number of steps `K` the stats were built for.
    pub fn steps(&self) -> usize {
        self.sum_sigma.len()
    }

    /// Number of terms `K−1−k` in the suffix at `k`.
    pub fn count(&self, k: usize) -> usize {
        self.steps() - 1 - k
    }

    /// `Σ_{j>k} A_j`.
    pub fn sum_sigma(&self, k: usize) -> &Matrix<S> {
        &self.sum_sigma[k]
    }

    /// `Σ_{j>k} A_j A_j*`.
    pub fn sum_gram(&self, k: usize) -> &Matrix<S> {
        &self.sum_gram[k]
    }

    pub fn factored(&self) -> Option<&FactoredSuffix<S>> {
        self.factored.as_ref()
    }

    /// Drops the factored sums so the dense expansion is used.
    pub fn without_factored(mut self) -> Self {
        self.factored = None;
        self
    }
}

fn check_step<S: Real>(k: usize, grid: &TimeGrid<S>) -> Result<()> {
    if k >= grid.steps() {
        return Err(Error::invalid(format!(
            "step index {k} is not before the terminal index {}",
            grid.steps()
        )));
    }
    Ok(())
}

/// `τζ` written as `Δtζ + Δt·(nζ)`, so it is the RB̄ expression with a
/// constant σ along ξ, operation for operation.
fn frozen_terminal_cov<S: Real>(zeta: &Matrix<S>, k: usize, grid: &TimeGrid<S>) -> Matrix<S> {
    let n = S::of_usize(grid.steps() - 1 - k);
    let mut psi = zeta.scale(grid.dt());
    psi.axpy(grid.dt(), &zeta.scale(n));
    psi.symmetrize();
    psi
}

/// `a = m_{k+1} + Δtζ P*(PΨ_K P* + Σ₁)⁻¹(y − P m_K)`,
/// `V = Δtζ − Δtζ P*(PΨ_K P* + Σ₁)⁻¹ P Δtζ`.
fn condition_on_observation<S: Real>(
    mean_next: Vector<S>,
    step_cov: &Matrix<S>,
    terminal_mean: &Vector<S>,
    terminal_cov: &Matrix<S>,
    obs: &ObservationModel<S>,
    kind: ProposalKind,
) -> Result<StepConditional<S>> {
    let p = obs.projection();
    let mut innovation = p.matmul(terminal_cov).mul_transpose(p);
    innovation.add_assign(obs.noise_cov());
    innovation.symmetrize();
    let factor = spd_factor(&innovation)?;
    let cross = step_cov.mul_transpose(p);
    let gain_t = factor.solve_mat(&cross.transpose());
    let residual = obs.value() - &p.mul_vec(terminal_mean);
    let mut mean = mean_next;
    mean.axpy(S::one(), &cross.mul_vec(&factor.solve_vec(&residual)));
    let mut cov = step_cov - &cross.matmul(&gain_t);
    cov.symmetrize();
    if !mean.is_finite() || !cov.is_finite() {
        return Err(Error::numeric("non-finite bridge conditional"));
    }
    Ok(StepConditional { mean, cov, kind })
}

/// Chord-corrected terminal mean shared by RB and RB̄.
fn residual_terminal_mean<S: Real>(
    x_k: &[S],
    drift: &Vector<S>,
    k: usize,
    grid: &TimeGrid<S>,
    xi: &DeterministicPath<S>,
) -> Vector<S> {
    let tau = grid.remaining(k);
    let chord = (xi.at(k + 1) - xi.at(k)).scale(S::one() / grid.dt());
    let mut m = Vector::from_slice(x_k);
    m.axpy(S::one(), &(xi.terminal() - xi.at(k)));
    m.axpy(tau, &(drift - &chord));
    m
}

/// Forward simulation: the EM transition, ignoring `y¹`.
pub fn fs_step_conditional<S: Real, M: DiffusionModel<S> + ?Sized>(
    model: &M,
    x_k: &[S],
    k: usize,
    grid: &TimeGrid<S>,
) -> Result<StepConditional<S>> {
    check_step(k, grid)?;
    let (mean, cov) = em_mean_cov(model, x_k, grid.time(k), grid.dt())?;
    Ok(StepConditional {
        mean,
        cov,
        kind: ProposalKind::Fs,
    })
}

/// Modified diffusion bridge: drift and volatility frozen at `x_k`.
pub fn mdb_conditional<S: Real, M: DiffusionModel<S> + ?Sized>(
    model: &M,
    x_k: &[S],
    k: usize,
    grid: &TimeGrid<S>,
    obs: &ObservationModel<S>,
) -> Result<StepConditional<S>> {
    check_step(k, grid)?;
    model.check_state(x_k)?;
    let t = grid.time(k);
    let drift = model.drift(x_k, t);
    let zeta = model.volatility(x_k, t);
    let mut mean_next = Vector::from_slice(x_k);
    mean_next.axpy(grid.dt(), &drift);
    let mut terminal_mean = Vector::from_slice(x_k);
    terminal_mean.axpy(grid.remaining(k), &drift);
    let psi = frozen_terminal_cov(&zeta, k, grid);
    condition_on_observation(
        mean_next,
        &zeta.scale(grid.dt()),
        &terminal_mean,
        &psi,
        obs,
        ProposalKind::Mdb,
    )
}

fn residual_kind(path: PathKind, tracks_volatility: bool) -> ProposalKind {
    match (path, tracks_volatility) {
        (PathKind::Ode, false) => ProposalKind::RbOde,
        (PathKind::LnaConditioned, false) => ProposalKind::RbLna,
        (PathKind::Ode, true) => ProposalKind::RbBarOde,
        (PathKind::LnaConditioned, true) => ProposalKind::RbBarLna,
    }
}

/// Residual bridge: MDB applied to `X − ξ`.
pub fn rb_conditional<S: Real, M: DiffusionModel<S> + ?Sized>(
    model: &M,
    x_k: &[S],
    k: usize,
    grid: &TimeGrid<S>,
    obs: &ObservationModel<S>,
    xi: &DeterministicPath<S>,
) -> Result<StepConditional<S>> {
    check_step(k, grid)?;
    model.check_state(x_k)?;
    let t = grid.time(k);
    let drift = model.drift(x_k, t);
    let zeta = model.volatility(x_k, t);
    let mut mean_next = Vector::from_slice(x_k);
    mean_next.axpy(grid.dt(), &drift);
    let terminal_mean = residual_terminal_mean(x_k, &drift, k, grid, xi);
    let psi = frozen_terminal_cov(&zeta, k, grid);
    condition_on_observation(
        mean_next,
        &zeta.scale(grid.dt()),
        &terminal_mean,
        &psi,
        obs,
        residual_kind(xi.kind(), false),
    )
}

/// `Ψ_K` of the volatility-tracking bridge, from the suffix sums in O(d²)
/// (or O(d·r) through `S diag(·) S*` when the model is factored).
pub fn rbbar_terminal_cov<S: Real, M: DiffusionModel<S> + ?Sized>(
    model: &M,
    x_k: &[S],
    k: usize,
    grid: &TimeGrid<S>,
    xi: &DeterministicPath<S>,
    stats: &SigmaSuffixStats<S>,
) -> Result<Matrix<S>> {
    check_step(k, grid)?;
    model.check_state(x_k)?;
    if stats.steps() != grid.steps() {
        return Err(Error::invalid("suffix statistics were built for a different grid"));
    }
    let t = grid.time(k);
    let zeta = model.volatility(x_k, t);
    let n = S::of_usize(stats.count(k));
    let suffix = match (stats.factored(), model.factorization(), xi.rate_roots()) {
        (Some(fs), Some(f), Some(roots)) => {
            let delta = &f.rate_roots(x_k, t) - &roots[k];
            let weights: Vector<S> = (0..delta.dim())
                .map(|i| {
                    fs.sum_roots_sq[k][i]
                        + S::lit(2.0) * delta[i] * fs.sum_roots[k][i]
                        + n * delta[i] * delta[i]
                })
                .collect();
            let s = &fs.stoichiometry;
            let scaled = Matrix::from_fn(s.nrows(), s.ncols(), |i, j| s[(i, j)] * weights[j]);
            scaled.mul_transpose(s)
        }
        _ => {
            let delta = &model.diffusion(x_k, t) - xi.sigma_at(k);
            let a = stats.sum_sigma(k);
            let mut sum = stats.sum_gram(k).clone();
            sum.add_assign(&a.mul_transpose(&delta));
            sum.add_assign(&delta.mul_transpose(a));
            sum.axpy(n, &delta.gram());
            sum
        }
    };
    let mut psi = zeta.scale(grid.dt());
    psi.axpy(grid.dt(), &suffix);
    psi.symmetrize();
    Ok(psi)
}

/// Residual bridge whose terminal covariance follows σ along ξ.
pub fn rbbar_conditional<S: Real, M: DiffusionModel<S> + ?Sized>(
    model: &M,
    x_k: &[S],
    k: usize,
    grid: &TimeGrid<S>,
    obs: &ObservationModel<S>,
    xi: &DeterministicPath<S>,
    stats: &SigmaSuffixStats<S>,
) -> Result<StepConditional<S>> {
    let psi = rbbar_terminal_cov(model, x_k, k, grid, xi, stats)?;
    let t = grid.time(k);
    let drift = model.drift(x_k, t);
    let zeta = model.volatility(x_k, t);
    let mut mean_next = Vector::from_slice(x_k);
    mean_next.axpy(grid.dt(), &drift);
    let terminal_mean = residual_terminal_mean(x_k, &drift, k, grid, xi);
    condition_on_observation(
        mean_next,
        &zeta.scale(grid.dt()),
        &terminal_mean,
        &psi,
        obs,
        residual_kind(xi.kind(), true),
    )
}

/// A proposal with its skeleton and suffix sums built once per `(T, y¹, Δt)` cell.
#[derive(Clone, Debug)]
pub struct PreparedProposal<S> {
    kind: ProposalKind,
    xi: Option<DeterministicPath<S>>,
    stats: Option<SigmaSuffixStats<S>>,
}

impl<S: Real> PreparedProposal<S> {
    pub fn new<M: DiffusionModel<S> + ?Sized>(
        kind: ProposalKind,
        model: &M,
        x0: &[S],
        grid: &TimeGrid<S>,
        obs: &ObservationModel<S>,
        opts: &OdeOptions<S>,
    ) -> Result<Self> {
        let xi = match kind.path_kind() {
            Some(pk) => Some(build_xi(pk, model, x0, grid, Some(obs), opts)?),
            None => None,
        };
        let stats = match (&xi, kind.tracks_volatility()) {
            (Some(xi), true) => Some(SigmaSuffixStats::new(xi, model)?),
            _ => None,
        };
        Ok(PreparedProposal { kind, xi, stats })
    }

    /// Uses a caller-supplied skeleton instead of solving for one.
    pub fn with_path<M: DiffusionModel<S> + ?Sized>(
        tracks_volatility: bool,
        model: &M,
        xi: DeterministicPath<S>,
    ) -> Result<Self> {
        let kind = residual_kind(xi.kind(), tracks_volatility);
        let stats = if tracks_volatility {
            Some(SigmaSuffixStats::new(&xi, model)?)
        } else {
            None
        };
        Ok(PreparedProposal {
            kind,
            xi: Some(xi),
            stats,
        })
    }

    pub fn forward() -> Self {
        PreparedProposal {
            kind: ProposalKind::Fs,
            xi: None,
            stats: None,
        }
    }

    pub fn modified_bridge() -> Self {
        PreparedProposal {
            kind: ProposalKind::Mdb,
            xi: None,
            stats: None,
        }
    }

    pub fn kind(&self) -> ProposalKind {
        self.kind
    }

    pub fn path(&self) -> Option<&DeterministicPath<S>> {
        self.xi.as_ref()
    }

    pub fn stats(&self) -> Option<&SigmaSuffixStats<S>> {
        self.stats.as_ref()
    }

    pub fn step<M: DiffusionModel<S> + ?Sized>(
        &self,
        model: &M,
        x_k: &[S],
        k: usize,
        grid: &TimeGrid<S>,
        obs: &ObservationModel<S>,
    ) -> Result<StepConditional<S>> {
        match (self.kind, &self.xi, &self.stats) {
            (ProposalKind::Fs, _, _) => fs_step_conditional(model, x_k, k, grid),
            (ProposalKind::Mdb, _, _) => mdb_conditional(model, x_k, k, grid, obs),
            (ProposalKind::RbOde | ProposalKind::RbLna, Some(xi), _) => {
                rb_conditional(model, x_k, k, grid, obs, xi)
            }
            (ProposalKind::RbBarOde | ProposalKind::RbBarLna, Some(xi), Some(stats)) => {
                rbbar_conditional(model, x_k, k, grid, obs, xi, stats)
            }
            _ => Err(Error::invalid("proposal is missing its deterministic path")),
        }
    }
}
