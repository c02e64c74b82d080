//! The simulation-study driver: endpoint clouds, observation selection,
//! the `(T, y¹, Δt, proposal)` grid, and CSV/JSON output. Runs in `f64`.

mod config;
mod observations;
mod run;

pub use config::{
    ObservationScheme, StudyConfig, StudySettings, DEFAULT_SIGMA_OBS, DESK_ENDPOINTS, DESK_PATHS,
    DESK_REPS, FULL_PATHS, FULL_REPS,
};
pub use observations::{
    quantile, select_observations, simulate_endpoints, EndpointCloud, LabeledObservation,
    Selection, ENDPOINT_STREAM_BASE,
};
pub use run::{
    dt_robustness_study, emit_paths, observations_for, run_cell, run_study, CellSpec, PathRecord,
    ResultRow, StudyReport, TIMING_COLUMNS,
};

#[derive(Debug, thiserror::Error)]
pub enum StudyError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] crate::error::Error),
    #[error("endpoint resampling budget of {budget} draws exhausted with {accepted} valid endpoints")]
    ResampleBudget { budget: usize, accepted: usize },
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl StudyError {
    /// Short machine-readable category.
    pub fn kind(&self) -> &'static str {
        match self {
            StudyError::Config(_) => "config",
            StudyError::Core(e) if e.is_domain_violation() => "domain-violation",
            StudyError::Core(e) if e.is_numeric_failure() => "numeric-failure",
            StudyError::Core(crate::error::Error::Integrator { .. }) => "integrator-failure",
            StudyError::Core(_) => "invalid-input",
            StudyError::ResampleBudget { .. } => "resample-budget",
            StudyError::Io(_) => "io",
            StudyError::Csv(_) => "csv",
            StudyError::Json(_) => "json",
        }
    }
}
