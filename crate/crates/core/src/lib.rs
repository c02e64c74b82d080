//! Conditioned diffusion bridges by importance sampling.
//!
//! Numerical kernels are generic over [`Real`] (`f32` or `f64`); the study
//! driver runs in `f64`. The aliases below fix the scalar for common use.

pub mod bridge;
pub mod em;
pub mod engine;
pub mod error;
pub mod gaussian;
pub mod grid;
pub mod linalg;
pub mod model;
pub mod models;
pub mod observation;
pub mod ode;
pub mod paths;
pub mod rng;
pub mod scalar;
pub mod study;

pub use bridge::{PreparedProposal, ProposalKind, SigmaSuffixStats, StepConditional};
pub use engine::{run_ensemble, simulate_bridge, EnsembleOptions, WeightedEnsemble};
pub use error::{Error, Result};
pub use grid::{SkeletonPath, TimeGrid};
pub use linalg::{Matrix, Vector};
pub use model::DiffusionModel;
pub use observation::ObservationModel;
pub use paths::{DeterministicPath, PathKind};
pub use rng::RandomSource;
pub use scalar::Real;

pub type Vec64 = Vector<f64>;
pub type Mat64 = Matrix<f64>;
pub type Grid64 = TimeGrid<f64>;
pub type Observation64 = ObservationModel<f64>;
pub type Path64 = DeterministicPath<f64>;
pub type Proposal64 = PreparedProposal<f64>;
pub type Ensemble64 = WeightedEnsemble<f64>;
