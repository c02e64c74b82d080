//! Concrete diffusions and the name-indexed catalog used by the study driver.

mod birth_death;
mod fixtures;
mod gene_expression;
mod lotka_volterra;

pub use birth_death::{BirthDeath, TransformedBirthDeath};
pub use fixtures::{ConstantDiffusion, SineDiffusion};
pub use gene_expression::GeneExpression;
pub use lotka_volterra::LotkaVolterra;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::DiffusionModel;

/// Defaults for one study model.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ModelCatalogEntry {
    pub name: &'static str,
    pub description: &'static str,
    pub dim: usize,
    pub theta: Vec<f64>,
    pub x0: Vec<f64>,
    pub dt: f64,
    /// Inter-observation times of the main comparison study.
    pub horizons: Vec<f64>,
    /// Small/medium/large horizons of the step-size robustness study.
    pub dt_study_horizons: Vec<f64>,
    /// Step sizes of the robustness study, decreasing.
    pub dt_study_steps: Vec<f64>,
    pub analytic_oracle: bool,
}

fn horizons(upper: f64) -> Vec<f64> {
    (1..=10).map(|i| upper * i as f64 / 10.0).collect()
}

pub fn catalog() -> Vec<ModelCatalogEntry> {
    let fine_steps = vec![0.01, 0.005, 0.001, 0.0005, 0.0001];
    vec![
        ModelCatalogEntry {
            name: "lv",
            description: "Lotka-Volterra predator-prey chemical Langevin diffusion",
            dim: 2,
            theta: vec![0.5, 0.0025, 0.3],
            x0: vec![71.0, 79.0],
            dt: 0.1,
            horizons: horizons(10.0),
            dt_study_horizons: vec![1.0, 4.0, 7.0],
            dt_study_steps: vec![0.1, 0.05, 0.01, 0.005, 0.001],
            analytic_oracle: false,
        },
        ModelCatalogEntry {
            name: "ge",
            description: "gene expression with time-inhomogeneous transcription",
            dim: 2,
            theta: vec![0.7, 0.72, 3.0, 80.0, 0.05, 2.0, 50.0],
            x0: vec![70.0, 70.0],
            dt: 0.01,
            horizons: horizons(4.0),
            dt_study_horizons: vec![0.4, 2.0, 3.6],
            dt_study_steps: fine_steps.clone(),
            analytic_oracle: false,
        },
        ModelCatalogEntry {
            name: "bd",
            description: "scalar birth-death diffusion",
            dim: 1,
            theta: vec![0.1, 0.8],
            x0: vec![50.0],
            dt: 0.01,
            horizons: horizons(2.0),
            dt_study_horizons: vec![0.2, 1.0, 2.0],
            dt_study_steps: fine_steps.clone(),
            analytic_oracle: true,
        },
        ModelCatalogEntry {
            name: "bd-lamperti",
            description: "birth-death diffusion transformed to unit volatility",
            dim: 1,
            theta: vec![0.1, 0.8],
            // 2·sqrt(50 / 0.9)
            x0: vec![2.0 * (50.0f64 / 0.9).sqrt()],
            dt: 0.01,
            horizons: horizons(2.0),
            dt_study_horizons: vec![0.2, 1.0, 2.0],
            dt_study_steps: fine_steps,
            analytic_oracle: false,
        },
    ]
}

pub fn lookup(name: &str) -> Result<ModelCatalogEntry> {
    catalog()
        .into_iter()
        .find(|e| e.name == name)
        .ok_or_else(|| Error::invalid(format!("unknown model '{name}' (expected lv, ge, bd, bd-lamperti)")))
}

fn fixed<const N: usize>(name: &str, theta: &[f64]) -> Result<[f64; N]> {
    theta.try_into().map_err(|_| {
        Error::invalid(format!(
            "model '{name}' takes {N} parameters, got {}",
            theta.len()
        ))
    })
}

/// Instantiates a catalog model with the given parameters.
pub fn build(name: &str, theta: &[f64]) -> Result<Box<dyn DiffusionModel<f64>>> {
    if theta.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("non-finite model parameter"));
    }
    Ok(match name {
        "lv" => Box::new(LotkaVolterra::new(fixed::<3>(name, theta)?)),
        "ge" => Box::new(GeneExpression::new(fixed::<7>(name, theta)?)),
        "bd" => Box::new(BirthDeath::new(fixed::<2>(name, theta)?)),
        "bd-lamperti" => Box::new(TransformedBirthDeath::new(fixed::<2>(name, theta)?)),
        other => return Err(lookup(other).unwrap_err()),
    })
}
