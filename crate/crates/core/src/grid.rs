use crate::error::{Error, Result};
use crate::linalg::Vector;
use crate::scalar::Real;

/// Relative tolerance on `K·Δt = T` when a grid is built from `(T, Δt)`.
pub const GRID_EXACTNESS: f64 = 1e-9;

/// Equispaced partition `t_k = kΔt` of `[0, T]` with `K` steps.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeGrid<S> {
    horizon: S,
    dt: S,
    steps: usize,
}

impl<S: Real> TimeGrid<S> {
    /// Builds the grid from a horizon and a step; `Δt` must divide `T`.
    pub fn new(horizon: S, dt: S) -> Result<Self> {
        if !(horizon > S::zero()) || !(dt > S::zero()) {
            return Err(Error::invalid(format!(
                "grid needs T > 0 and dt > 0 (got T = {horizon}, dt = {dt})"
            )));
        }
        let ratio = horizon / dt;
        let steps = ratio.round();
        let k = steps
            .to_usize()
            .ok_or_else(|| Error::invalid("step count overflow"))?;
        if k == 0 || ((steps * dt - horizon).abs() > S::lit(GRID_EXACTNESS) * horizon) {
            return Err(Error::invalid(format!(
                "dt = {dt} does not divide T = {horizon} (T/dt = {ratio})"
            )));
        }
        Ok(TimeGrid {
            horizon,
            dt,
            steps: k,
        })
    }

    pub fn with_steps(horizon: S, steps: usize) -> Result<Self> {
        if steps == 0 || !(horizon > S::zero()) {
            return Err(Error::invalid("grid needs K >= 1 and T > 0"));
        }
        Ok(TimeGrid {
            horizon,
            dt: horizon / S::of_usize(steps),
            steps,
        })
    }

    pub fn horizon(&self) -> S {
        self.horizon
    }

    pub fn dt(&self) -> S {
        self.dt
    }

    /// `K`
    pub fn steps(&self) -> usize {
        self.steps
    }

    /// `t_k`; `t_K` is exactly `T`.
    pub fn time(&self, k: usize) -> S {
        if k == self.steps {
            self.horizon
        } else {
            S::of_usize(k) * self.dt
        }
    }

    /// `T - t_k`, computed as `(K - k)·Δt`.
    pub fn remaining(&self, k: usize) -> S {
        S::of_usize(self.steps - k) * self.dt
    }

    pub fn times(&self) -> impl Iterator<Item = S> + '_ {
        (0..=self.steps).map(|k| self.time(k))
    }
}

/// States `x_0..x_K` of a discretized path.
#[derive(Clone, Debug, PartialEq)]
pub struct SkeletonPath<S> {
    pub states: Vec<Vector<S>>,
}

impl<S: Real> SkeletonPath<S> {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn terminal(&self) -> &Vector<S> {
        self.states.last().expect("non-empty path")
    }
}
