use rayon::prelude::*;
use serde::Serialize;

use crate::em::em_forward_step;
use crate::error::Result;
use crate::gaussian::psd_sqrt;
use crate::grid::TimeGrid;
use crate::linalg::{Matrix, Vector};
use crate::model::DiffusionModel;
use crate::rng::{fill_standard_normal, RandomSource};

use super::config::ObservationScheme;
use super::StudyError;

/// Endpoint draws use substreams from here up, clear of the ensemble's `0..N`.
pub const ENDPOINT_STREAM_BASE: u64 = 1 << 62;

#[derive(Clone, Debug, PartialEq)]
pub struct EndpointCloud {
    pub points: Vec<Vector<f64>>,
    /// Forward paths discarded for leaving the model domain.
    pub resampled: usize,
}

fn forward_endpoint<M: DiffusionModel<f64> + ?Sized>(
    model: &M,
    x0: &[f64],
    grid: &TimeGrid<f64>,
    noise_root: &Matrix<f64>,
    projection: &Matrix<f64>,
    source: RandomSource,
) -> Result<Vector<f64>> {
    let mut rng = source.rng();
    let mut x = Vector::from_slice(x0);
    let mut z = vec![0.0; model.noise_dim()];
    for k in 0..grid.steps() {
        fill_standard_normal(&mut rng, &mut z);
        x = em_forward_step(model, &x, grid.time(k), grid.dt(), &z)?;
    }
    model.check_state(&x)?;
    let mut e = vec![0.0; noise_root.ncols()];
    fill_standard_normal(&mut rng, &mut e);
    let mut y = projection.mul_vec(&x);
    y.axpy(1.0, &noise_root.mul_vec(&e));
    Ok(y)
}

/// `M` observations `y = P x_K + ε`, `ε ~ N(0, Σ₁)`, from forward EM paths.
/// Paths that leave the domain are redrawn on fresh substreams, at most `10·M` draws in total.
pub fn simulate_endpoints<M: DiffusionModel<f64> + ?Sized>(
    model: &M,
    x0: &[f64],
    grid: &TimeGrid<f64>,
    m: usize,
    projection: &Matrix<f64>,
    noise_cov: &Matrix<f64>,
    seed: u64,
) -> std::result::Result<EndpointCloud, StudyError> {
    if m < 2 {
        return Err(StudyError::Config("the endpoint cloud needs M ≥ 2".into()));
    }
    let root = RandomSource::new(seed);
    let noise_root = psd_sqrt(noise_cov)?;
    let draw = |attempt: usize| {
        forward_endpoint(
            model,
            x0,
            grid,
            &noise_root,
            projection,
            root.substream(ENDPOINT_STREAM_BASE + attempt as u64),
        )
    };
    let first: Vec<Result<Vector<f64>>> = (0..m).into_par_iter().map(draw).collect();
    let budget = 10 * m;
    let mut attempts = m;
    let mut resampled = 0;
    let mut points = Vec::with_capacity(m);
    for r in first {
        let mut r = r;
        loop {
            match r {
                Ok(y) => {
                    points.push(y);
                    break;
                }
                Err(e) if e.is_domain_violation() => {
                    resampled += 1;
                    if attempts >= budget {
                        return Err(StudyError::ResampleBudget { budget, accepted: points.len() });
                    }
                    r = draw(attempts);
                    attempts += 1;
                }
                Err(e) => return Err(e.into()),
            }
        }
    }
    Ok(EndpointCloud { points, resampled })
}

/// Type-7 empirical quantile: linear interpolation between order statistics.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(|a, b| a.total_cmp(b));
    v
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LabeledObservation {
    pub label: String,
    pub value: Vec<f64>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Selection {
    pub observations: Vec<LabeledObservation>,
    pub warnings: Vec<String>,
}

pub fn select_observations(
    cloud: &[Vector<f64>],
    scheme: ObservationScheme,
) -> std::result::Result<Selection, StudyError> {
    if cloud.len() < 2 {
        return Err(StudyError::Config("observation selection needs at least 2 points".into()));
    }
    let d = cloud[0].dim();
    let mut out = Selection::default();
    match scheme {
        ObservationScheme::Quantiles => {
            for (label, p) in [("q05", 0.05), ("q50", 0.5), ("q95", 0.95)] {
                let value = (0..d)
                    .map(|i| quantile(&sorted(cloud.iter().map(|x| x[i]).collect()), p))
                    .collect();
                out.observations.push(LabeledObservation {
                    label: label.into(),
                    value,
                });
            }
        }
        ObservationScheme::Pca90 => {
            let n = cloud.len() as f64;
            let mut mean = Vector::zeros(d);
            for x in cloud {
                mean.axpy(1.0, x);
            }
            mean = mean.scale(1.0 / n);
            let mut cov = Matrix::<f64>::zeros(d, d);
            for x in cloud {
                let c = x - &mean;
                for i in 0..d {
                    for j in 0..d {
                        cov[(i, j)] += c[i] * c[j] / (n - 1.0);
                    }
                }
            }
            out.observations.push(LabeledObservation {
                label: "centre".into(),
                value: mean.to_vec(),
            });
            let (values, vectors) = cov.symmetric_eigen();
            // rounding in the mean leaves O(ulp²) variance on a constant cloud
            let floor = (1e-12 * cov.trace().abs()).max(1e-24 * (1.0 + mean.norm_sq()));
            for axis in 0..d {
                if !(values[axis] > floor) {
                    out.warnings.push(format!(
                        "principal axis {} has variance {:.3e}; skipped",
                        axis + 1,
                        values[axis]
                    ));
                    continue;
                }
                let mut v = vectors.column(axis);
                // fix the sign so the largest component is positive
                let lead = (0..d)
                    .max_by(|&a, &b| v[a].abs().total_cmp(&v[b].abs()))
                    .unwrap_or(0);
                if v[lead] < 0.0 {
                    v = -&v;
                }
                let proj = sorted(cloud.iter().map(|x| (x - &mean).dot(&v)).collect());
                for (tag, p) in [("q90", 0.9), ("q10", 0.1)] {
                    let mut point = mean.clone();
                    point.axpy(quantile(&proj, p), &v);
                    out.observations.push(LabeledObservation {
                        label: format!("pc{}-{tag}", axis + 1),
                        value: point.to_vec(),
                    });
                }
            }
        }
    }
    Ok(out)
}
