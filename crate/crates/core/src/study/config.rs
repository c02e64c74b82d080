use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::bridge::ProposalKind;
use crate::grid::TimeGrid;
use crate::models::{lookup, ModelCatalogEntry};

use super::StudyError;

pub const DESK_PATHS: usize = 100_000;
pub const DESK_ENDPOINTS: usize = 10_000;
pub const DESK_REPS: usize = 3;
pub const FULL_PATHS: usize = 1_000_000;
pub const FULL_REPS: usize = 10;
pub const DEFAULT_SIGMA_OBS: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ObservationScheme {
    /// Cloud mean plus the 90%/10% quantiles of the projections on each principal axis.
    #[serde(rename = "pca-90")]
    Pca90,
    /// Coordinatewise 5%, 50% and 95% quantiles.
    #[serde(rename = "quantiles-5-50-95")]
    Quantiles,
}

impl ObservationScheme {
    pub fn name(self) -> &'static str {
        match self {
            ObservationScheme::Pca90 => "pca-90",
            ObservationScheme::Quantiles => "quantiles-5-50-95",
        }
    }

    pub fn parse(s: &str) -> Result<Self, StudyError> {
        match s {
            "pca-90" => Ok(ObservationScheme::Pca90),
            "quantiles-5-50-95" => Ok(ObservationScheme::Quantiles),
            other => Err(StudyError::Config(format!(
                "unknown observation scheme '{other}' (expected pca-90, quantiles-5-50-95)"
            ))),
        }
    }

    /// Label of the central observation.
    pub fn centre_label(self) -> &'static str {
        match self {
            ObservationScheme::Pca90 => "centre",
            ObservationScheme::Quantiles => "q50",
        }
    }

    /// The scheme used for a model of this dimension when none is given.
    pub fn default_for(dim: usize) -> Self {
        if dim == 1 {
            ObservationScheme::Quantiles
        } else {
            ObservationScheme::Pca90
        }
    }
}

/// Partially specified settings, as read from a JSON file or the command line.
/// Later layers override earlier ones field by field.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StudySettings {
    pub model: Option<String>,
    pub theta: Option<Vec<f64>>,
    pub x0: Option<Vec<f64>>,
    #[serde(rename = "T")]
    pub horizons: Option<Vec<f64>>,
    pub dt: Option<Vec<f64>>,
    pub proposal: Option<Vec<ProposalKind>>,
    #[serde(rename = "N")]
    pub n_paths: Option<usize>,
    #[serde(rename = "M")]
    pub endpoints: Option<usize>,
    pub reps: Option<usize>,
    pub scheme: Option<ObservationScheme>,
    pub sigma_obs: Option<f64>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub obs: Option<Vec<String>>,
    pub paper_scale: Option<bool>,
    pub paths: Option<usize>,
}

macro_rules! overlay {
    ($self:ident, $other:ident, $($f:ident),*) => {
        $( if $other.$f.is_some() { $self.$f = $other.$f; } )*
    };
}

impl StudySettings {
    pub fn from_json(text: &str) -> Result<Self, StudyError> {
        serde_json::from_str(text).map_err(|e| StudyError::Config(format!("config file: {e}")))
    }

    /// Fields set in `other` replace those in `self`.
    pub fn overlay(mut self, other: StudySettings) -> Self {
        overlay!(
            self, other, model, theta, x0, horizons, dt, proposal, n_paths, endpoints, reps,
            scheme, sigma_obs, seed, out, obs, paper_scale, paths
        );
        self
    }

    /// Fills unset fields from the model catalog and validates the result.
    /// `dt_study` selects the step-size robustness defaults.
    pub fn resolve(self, dt_study: bool) -> Result<StudyConfig, StudyError> {
        let name = self
            .model
            .ok_or_else(|| StudyError::Config("no model given (use --model)".into()))?;
        let entry = lookup(&name).map_err(|e| StudyError::Config(e.to_string()))?;
        let full = self.paper_scale.unwrap_or(false);
        let (horizons, dts) = if dt_study {
            (entry.dt_study_horizons.clone(), entry.dt_study_steps.clone())
        } else {
            (entry.horizons.clone(), vec![entry.dt])
        };
        let proposals = self.proposal.unwrap_or_else(|| {
            if dt_study {
                vec![ProposalKind::RbBarOde, ProposalKind::RbBarLna]
            } else {
                ProposalKind::ALL[1..].to_vec()
            }
        });
        let config = StudyConfig {
            theta: self.theta.unwrap_or_else(|| entry.theta.clone()),
            x0: self.x0.unwrap_or_else(|| entry.x0.clone()),
            horizons: self.horizons.unwrap_or(horizons),
            dts: self.dt.unwrap_or(dts),
            proposals,
            n_paths: self
                .n_paths
                .unwrap_or(if full { FULL_PATHS } else { DESK_PATHS }),
            endpoints: self.endpoints.unwrap_or(DESK_ENDPOINTS),
            reps: self.reps.unwrap_or(if full { FULL_REPS } else { DESK_REPS }),
            scheme: self
                .scheme
                .unwrap_or_else(|| ObservationScheme::default_for(entry.dim)),
            sigma_obs: self.sigma_obs.unwrap_or(DEFAULT_SIGMA_OBS),
            seed: self.seed.unwrap_or(1),
            out: self.out.unwrap_or_else(|| PathBuf::from("out")),
            obs_filter: self.obs,
            figure_paths: self.paths.unwrap_or(50),
            model: name,
        };
        config.validate_against(&entry)?;
        Ok(config)
    }
}

/// A fully specified study.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub model: String,
    pub theta: Vec<f64>,
    pub x0: Vec<f64>,
    #[serde(rename = "T")]
    pub horizons: Vec<f64>,
    #[serde(rename = "dt")]
    pub dts: Vec<f64>,
    #[serde(rename = "proposal")]
    pub proposals: Vec<ProposalKind>,
    #[serde(rename = "N")]
    pub n_paths: usize,
    #[serde(rename = "M")]
    pub endpoints: usize,
    pub reps: usize,
    pub scheme: ObservationScheme,
    pub sigma_obs: f64,
    pub seed: u64,
    pub out: PathBuf,
    /// Restricts the study to these observation labels.
    #[serde(rename = "obs")]
    pub obs_filter: Option<Vec<String>>,
    /// Number of paths written by the figure-data verb.
    #[serde(rename = "paths")]
    pub figure_paths: usize,
}

impl StudyConfig {
    pub fn validate(&self) -> Result<(), StudyError> {
        let entry = lookup(&self.model).map_err(|e| StudyError::Config(e.to_string()))?;
        self.validate_against(&entry)
    }

    fn validate_against(&self, entry: &ModelCatalogEntry) -> Result<(), StudyError> {
        let bad = |m: String| Err(StudyError::Config(m));
        if self.horizons.is_empty() {
            return bad("the list of T values is empty".into());
        }
        if self.dts.is_empty() {
            return bad("the list of dt values is empty".into());
        }
        if self.proposals.is_empty() {
            return bad("no proposals selected".into());
        }
        if self.n_paths == 0 {
            return bad("N must be at least 1".into());
        }
        if self.endpoints < 2 {
            return bad("M must be at least 2".into());
        }
        if self.reps == 0 {
            return bad("reps must be at least 1".into());
        }
        if self.figure_paths == 0 {
            return bad("paths must be at least 1".into());
        }
        if !(self.sigma_obs >= 0.0) || !self.sigma_obs.is_finite() {
            return bad(format!("sigma-obs must be finite and non-negative, got {}", self.sigma_obs));
        }
        if self.x0.len() != entry.dim {
            return bad(format!(
                "x0 has {} components, model '{}' has dimension {}",
                self.x0.len(),
                entry.name,
                entry.dim
            ));
        }
        crate::models::build(&self.model, &self.theta).map_err(|e| StudyError::Config(e.to_string()))?;
        for &t in &self.horizons {
            for &dt in &self.dts {
                TimeGrid::new(t, dt).map_err(|e| {
                    StudyError::Config(format!("T = {t}, dt = {dt}: {e}"))
                })?;
            }
        }
        Ok(())
    }

    pub fn grid(&self, t: f64, dt: f64) -> Result<TimeGrid<f64>, StudyError> {
        TimeGrid::new(t, dt).map_err(|e| StudyError::Config(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base(model: &str) -> StudySettings {
        StudySettings {
            model: Some(model.into()),
            ..Default::default()
        }
    }

    #[test]
    fn defaults_come_from_the_catalog() {
        let c = base("lv").resolve(false).unwrap();
        assert_eq!(c.theta, vec![0.5, 0.0025, 0.3]);
        assert_eq!(c.dts, vec![0.1]);
        assert_eq!(c.horizons.len(), 10);
        assert_eq!(c.n_paths, DESK_PATHS);
        assert_eq!(c.reps, DESK_REPS);
        assert_eq!(c.scheme, ObservationScheme::Pca90);
        assert!(!c.proposals.contains(&ProposalKind::Fs));
    }

    #[test]
    fn full_scale_raises_n_and_reps() {
        let mut s = base("bd");
        s.paper_scale = Some(true);
        let c = s.resolve(false).unwrap();
        assert_eq!((c.n_paths, c.reps), (FULL_PATHS, FULL_REPS));
        assert_eq!(c.scheme, ObservationScheme::Quantiles);
    }

    #[test]
    fn later_layer_wins() {
        let file = StudySettings::from_json(r#"{"model": "bd", "N": 10, "seed": 4}"#).unwrap();
        let flags = StudySettings {
            n_paths: Some(20),
            ..Default::default()
        };
        let c = file.overlay(flags).resolve(false).unwrap();
        assert_eq!((c.n_paths, c.seed), (20, 4));
    }

    #[test]
    fn non_dividing_step_is_rejected_at_load() {
        let mut s = base("bd");
        s.horizons = Some(vec![0.25]);
        s.dt = Some(vec![0.1]);
        assert!(matches!(s.resolve(false), Err(StudyError::Config(_))));
    }

    #[test]
    fn empty_lists_and_unknown_fields_are_rejected() {
        let mut s = base("bd");
        s.proposal = Some(vec![]);
        assert!(s.resolve(false).is_err());
        assert!(StudySettings::from_json(r#"{"model": "bd", "bogus": 1}"#).is_err());
        assert!(base("sir").resolve(false).is_err());
    }

    #[test]
    fn proposals_parse_from_json_names() {
        let s = StudySettings::from_json(r#"{"model": "bd", "proposal": ["rbbar-lna", "fs"]}"#).unwrap();
        assert_eq!(s.proposal.unwrap(), vec![ProposalKind::RbBarLna, ProposalKind::Fs]);
    }
}
