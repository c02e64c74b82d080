//! Weighted bridge ensembles against the EM target
//! `π̂(x_{1:K} | y¹) ∝ g₁(y¹ | x_K) ∏_k f̂(x_{k+1} | x_k)`.

use std::time::Instant;

use rayon::prelude::*;

use crate::em::em_log_density;
use crate::error::{Error, Result};
use crate::gaussian::{log_pdf_factored, spd_factor};
use crate::grid::{SkeletonPath, TimeGrid};
use crate::linalg::Vector;
use crate::bridge::PreparedProposal;
use crate::model::DiffusionModel;
use crate::observation::ObservationModel;
use crate::rng::{fill_standard_normal, RandomSource};
use crate::scalar::Real;

/// `log π̂` up to its normalizing constant; `−∞` when any state leaves the domain.
pub fn log_target<S: Real, M: DiffusionModel<S> + ?Sized>(
    path: &SkeletonPath<S>,
    model: &M,
    grid: &TimeGrid<S>,
    obs: &ObservationModel<S>,
) -> S {
    if path.len() != grid.steps() + 1 {
        return S::neg_infinity();
    }
    let mut total = S::zero();
    for k in 0..grid.steps() {
        match em_log_density(
            model,
            &path.states[k + 1],
            &path.states[k],
            grid.time(k),
            grid.dt(),
        ) {
            Ok(v) => total += v,
            Err(_) => return S::neg_infinity(),
        }
    }
    match model.check_state(path.terminal()) {
        Ok(()) => {}
        Err(_) => return S::neg_infinity(),
    }
    match obs.log_density(path.terminal()) {
        Ok(v) => total + v,
        Err(_) => S::neg_infinity(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PathStatus {
    Accepted,
    /// A drawn state left the model domain.
    DomainRejected,
    /// A covariance could not be factored within the jitter budget.
    NumericRejected,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BridgeSample<S> {
    pub log_weight: S,
    pub status: PathStatus,
    /// States drawn so far; the full skeleton when accepted.
    pub path: SkeletonPath<S>,
}

fn rejected<S: Real>(err: &Error, states: Vec<Vector<S>>) -> BridgeSample<S> {
    BridgeSample {
        log_weight: S::neg_infinity(),
        status: if err.is_numeric_failure() {
            PathStatus::NumericRejected
        } else {
            PathStatus::DomainRejected
        },
        path: SkeletonPath { states },
    }
}

/// Draws one skeleton from the proposal and returns it with `log π̂ − log q`.
pub fn simulate_bridge<S: Real, M: DiffusionModel<S> + ?Sized>(
    proposal: &PreparedProposal<S>,
    model: &M,
    x0: &[S],
    grid: &TimeGrid<S>,
    obs: &ObservationModel<S>,
    source: RandomSource,
) -> BridgeSample<S> {
    let mut rng = source.rng();
    let d = model.dim();
    let mut states = Vec::with_capacity(grid.steps() + 1);
    states.push(Vector::from_slice(x0));
    if let Err(e) = model.check_state(x0) {
        return rejected(&e, states);
    }
    let mut noise = vec![S::zero(); d];
    let mut log_weight = S::zero();
    for k in 0..grid.steps() {
        let x_k = &states[k];
        let step = proposal
            .step(model, x_k, k, grid, obs)
            .and_then(|c| Ok((spd_factor(&c.cov)?, c)));
        let (factor, cond) = match step {
            Ok(v) => v,
            Err(e) => return rejected(&e, states),
        };
        fill_standard_normal(&mut rng, &mut noise);
        let mut next = cond.mean.clone();
        next.axpy(S::one(), &factor.lower().mul_vec(&noise));
        let log_q = log_pdf_factored(&next, &cond.mean, &factor);
        if let Err(e) = model.check_state(&next) {
            states.push(next);
            return rejected(&e, states);
        }
        let log_p = match em_log_density(model, &next, x_k, grid.time(k), grid.dt()) {
            Ok(v) => v,
            Err(e) => return rejected(&e, states),
        };
        log_weight += log_p - log_q;
        states.push(next);
    }
    match obs.log_density(states.last().expect("non-empty")) {
        Ok(v) => log_weight += v,
        Err(e) => return rejected(&e, states),
    }
    if !log_weight.is_finite() {
        return rejected(&Error::numeric("non-finite log-weight"), states);
    }
    BridgeSample {
        log_weight,
        status: PathStatus::Accepted,
        path: SkeletonPath { states },
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct EnsembleOptions {
    /// Keep every skeleton (memory grows as N·K·d).
    pub keep_paths: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct WeightedEnsemble<S> {
    pub seed: u64,
    pub log_weights: Vec<S>,
    pub weights: Vec<S>,
    pub terminals: Vec<Vector<S>>,
    pub paths: Option<Vec<SkeletonPath<S>>>,
    pub domain_rejections: usize,
    pub numeric_rejections: usize,
    pub wall_time: f64,
}

impl<S: Real> WeightedEnsemble<S> {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn rejections(&self) -> usize {
        self.domain_rejections + self.numeric_rejections
    }

    /// Every path was rejected; the weights are all zero.
    pub fn all_rejected(&self) -> bool {
        self.rejections() == self.len()
    }

    pub fn relative_ess(&self) -> S {
        relative_ess(&self.weights)
    }

    /// `(Σ w̃²)⁻¹`.
    pub fn ess(&self) -> S {
        self.relative_ess() * S::of_usize(self.len())
    }
}

/// Simulates `n` independent bridges, path `j` on substream `j` of `seed`.
/// The result does not depend on the number of worker threads.
pub fn run_ensemble<S: Real, M: DiffusionModel<S> + ?Sized>(
    n: usize,
    proposal: &PreparedProposal<S>,
    model: &M,
    x0: &[S],
    grid: &TimeGrid<S>,
    obs: &ObservationModel<S>,
    seed: u64,
    opts: EnsembleOptions,
) -> Result<WeightedEnsemble<S>> {
    if n == 0 {
        return Err(Error::invalid("ensemble size must be at least 1"));
    }
    let root = RandomSource::new(seed);
    let start = Instant::now();
    let samples: Vec<BridgeSample<S>> = (0..n)
        .into_par_iter()
        .map(|j| simulate_bridge(proposal, model, x0, grid, obs, root.substream(j as u64)))
        .collect();
    let wall_time = start.elapsed().as_secs_f64();

    let mut log_weights = Vec::with_capacity(n);
    let mut terminals = Vec::with_capacity(n);
    let mut paths = opts.keep_paths.then(|| Vec::with_capacity(n));
    let (mut domain, mut numeric) = (0, 0);
    for s in samples {
        match s.status {
            PathStatus::Accepted => {}
            PathStatus::DomainRejected => domain += 1,
            PathStatus::NumericRejected => numeric += 1,
        }
        log_weights.push(s.log_weight);
        terminals.push(s.path.terminal().clone());
        if let Some(p) = paths.as_mut() {
            p.push(s.path);
        }
    }
    let weights = normalize_log_weights(&log_weights);
    Ok(WeightedEnsemble {
        seed,
        log_weights,
        weights,
        terminals,
        paths,
        domain_rejections: domain,
        numeric_rejections: numeric,
        wall_time,
    })
}

/// `w̃_j = exp(l_j − max l) / Σ exp(l_i − max l)`; all zeros when every `l_j = −∞`.
pub fn normalize_log_weights<S: Real>(log_weights: &[S]) -> Vec<S> {
    let max = log_weights
        .iter()
        .copied()
        .filter(|v| v.is_finite())
        .fold(S::neg_infinity(), S::max);
    if !max.is_finite() {
        return vec![S::zero(); log_weights.len()];
    }
    let unnorm: Vec<S> = log_weights
        .iter()
        .map(|&l| if l.is_finite() { (l - max).exp() } else { S::zero() })
        .collect();
    let total: S = unnorm.iter().copied().sum();
    unnorm.into_iter().map(|w| w / total).collect()
}

/// `N⁻¹(Σ w̃²)⁻¹`, or 0 when every weight is zero.
pub fn relative_ess<S: Real>(weights: &[S]) -> S {
    let sum_sq: S = weights.iter().map(|w| *w * *w).sum();
    if sum_sq == S::zero() {
        return S::zero();
    }
    S::one() / (sum_sq * S::of_usize(weights.len()))
}

/// `(Σ w̃²)⁻¹ / seconds`.
pub fn ess_per_second<S: Real>(weights: &[S], seconds: f64) -> Result<f64> {
    if !(seconds > 0.0) || !seconds.is_finite() {
        return Err(Error::invalid(format!(
            "ESS per second needs a positive wall time, got {seconds}"
        )));
    }
    let sum_sq: f64 = weights.iter().map(|w| w.to_f64_lossy().powi(2)).sum();
    if sum_sq == 0.0 {
        return Ok(0.0);
    }
    Ok(1.0 / sum_sq / seconds)
}
