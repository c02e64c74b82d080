//! Embedded Dormand–Prince 5(4) integrator whose steps land exactly on grid points.

use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::scalar::Real;

pub trait OdeSystem<S: Real> {
    fn dim(&self) -> usize;

    fn rhs(&self, t: S, y: &[S], dy: &mut [S]) -> Result<()>;

    /// Applied to the state after every accepted step (e.g. symmetrizing a covariance block).
    fn project(&self, _y: &mut [S]) {}
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OdeOptions<S> {
    pub atol: S,
    pub rtol: S,
    /// Disables step control; each grid interval is split into equal steps no longer than this.
    pub fixed_step: Option<S>,
    pub max_steps: usize,
}

impl<S: Real> Default for OdeOptions<S> {
    fn default() -> Self {
        OdeOptions {
            atol: S::lit(1e-8),
            rtol: S::lit(1e-6),
            fixed_step: None,
            max_steps: 10_000_000,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct IntegratorStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
    /// Largest accepted normalized local error estimate (≤ 1 under step control).
    pub max_error: f64,
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
/// Fifth-order minus embedded fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

struct Stepper<'a, S: Real, Sys: OdeSystem<S> + ?Sized> {
    sys: &'a Sys,
    k: [Vec<S>; 7],
    scratch: Vec<S>,
    y_new: Vec<S>,
    stats: IntegratorStats,
}

impl<'a, S: Real, Sys: OdeSystem<S> + ?Sized> Stepper<'a, S, Sys> {
    fn new(sys: &'a Sys) -> Self {
        let n = sys.dim();
        Stepper {
            sys,
            k: std::array::from_fn(|_| vec![S::zero(); n]),
            scratch: vec![S::zero(); n],
            y_new: vec![S::zero(); n],
            stats: IntegratorStats::default(),
        }
    }

    /// One trial step from `(t, y)` with `k[0] = f(t, y)` already filled.
    /// Leaves the candidate in `y_new`, `f(t+h, y_new)` in `k[6]`, and returns
    /// the error vector's weighted RMS norm.
    fn trial(&mut self, t: S, y: &[S], h: S, atol: S, rtol: S) -> Result<S> {
        let n = y.len();
        for stage in 1..7 {
            for i in 0..n {
                let mut acc = S::zero();
                for (j, &a) in A[stage].iter().enumerate().take(stage) {
                    if a != 0.0 {
                        acc += S::lit(a) * self.k[j][i];
                    }
                }
                self.scratch[i] = y[i] + h * acc;
            }
            let (_, tail) = self.k.split_at_mut(stage);
            self.sys
                .rhs(t + S::lit(C[stage]) * h, &self.scratch, &mut tail[0])?;
            self.stats.rhs_evals += 1;
        }
        // stage 7 evaluates at the 5th-order solution, so scratch holds y_new
        self.y_new.copy_from_slice(&self.scratch);
        let mut sum = S::zero();
        for i in 0..n {
            let mut err = S::zero();
            for (j, &e) in E.iter().enumerate() {
                if e != 0.0 {
                    err += S::lit(e) * self.k[j][i];
                }
            }
            err = err * h;
            let scale = atol + rtol * y[i].abs().max(self.y_new[i].abs());
            let r = err / scale;
            sum += r * r;
        }
        let norm = (sum / S::of_usize(n.max(1))).sqrt();
        if self.y_new.iter().any(|v| !v.is_finite()) {
            return Ok(S::infinity());
        }
        Ok(norm)
    }
}

/// Integrates `y' = f(t, y)` from `y(0) = y0` and returns the state at every grid point.
pub fn integrate_on_grid<S: Real, Sys: OdeSystem<S> + ?Sized>(
    sys: &Sys,
    y0: &[S],
    grid: &TimeGrid<S>,
    opts: &OdeOptions<S>,
) -> Result<(Vec<Vec<S>>, IntegratorStats)> {
    if y0.len() != sys.dim() {
        return Err(Error::invalid("initial state has the wrong dimension"));
    }
    let mut st = Stepper::new(sys);
    let mut y = y0.to_vec();
    let mut out = Vec::with_capacity(grid.steps() + 1);
    out.push(y.clone());
    sys.rhs(S::zero(), &y, &mut st.k[0])?;
    st.stats.rhs_evals += 1;

    let mut h = grid.dt();
    let mut total_steps = 0usize;
    for k in 0..grid.steps() {
        let mut t = grid.time(k);
        let t_end = grid.time(k + 1);
        let substeps = opts
            .fixed_step
            .map(|hf| ((t_end - t) / hf).ceil().to_usize().unwrap_or(1).max(1));
        let mut taken = 0usize;
        loop {
            let remaining = t_end - t;
            let (step, lands) = match substeps {
                Some(n) => {
                    let hh = (t_end - grid.time(k)) / S::of_usize(n);
                    (hh, taken + 1 == n)
                }
                None => {
                    if h >= remaining * (S::one() - S::lit(1e-12)) {
                        (remaining, true)
                    } else {
                        (h, false)
                    }
                }
            };
            let err = st.trial(t, &y, step, opts.atol, opts.rtol)?;
            total_steps += 1;
            if total_steps > opts.max_steps {
                return Err(Error::Integrator {
                    t: t.to_f64_lossy(),
                    reason: format!("exceeded {} steps", opts.max_steps),
                });
            }
            let accept = substeps.is_some() || err <= S::one();
            if accept {
                if !err.is_finite() {
                    return Err(Error::Integrator {
                        t: t.to_f64_lossy(),
                        reason: "non-finite state".into(),
                    });
                }
                st.stats.accepted += 1;
                st.stats.max_error = st.stats.max_error.max(err.to_f64_lossy());
                y.copy_from_slice(&st.y_new);
                let mut projected = y.clone();
                sys.project(&mut projected);
                let moved = projected != y;
                y = projected;
                t = if lands { t_end } else { t + step };
                if moved {
                    sys.rhs(t, &y, &mut st.k[0])?;
                    st.stats.rhs_evals += 1;
                } else {
                    let last = st.k[6].clone();
                    st.k[0].copy_from_slice(&last);
                }
                taken += 1;
            } else {
                st.stats.rejected += 1;
            }
            if substeps.is_none() {
                let factor = if err == S::zero() {
                    S::lit(5.0)
                } else {
                    (S::lit(0.9) * err.powf(S::lit(-0.2)))
                        .max(S::lit(0.2))
                        .min(S::lit(5.0))
                };
                // do not let the final clipped step shrink the next controller step
                if !(accept && lands) || factor < S::one() {
                    h = step * factor;
                }
                let floor = S::lit(1e-13) * (S::one() + t.abs());
                if h < floor {
                    return Err(Error::Integrator {
                        t: t.to_f64_lossy(),
                        reason: format!("step size underflow (h = {h})"),
                    });
                }
            }
            if accept && lands {
                break;
            }
        }
        out.push(y.clone());
    }
    Ok((out, st.stats))
}
