use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use crate::bridge::{PreparedProposal, ProposalKind};
use crate::engine::{run_ensemble, EnsembleOptions, WeightedEnsemble};
use crate::grid::TimeGrid;
use crate::linalg::{Matrix, Vector};
use crate::model::DiffusionModel;
use crate::models::build;
use crate::observation::ObservationModel;
use crate::ode::OdeOptions;

use super::config::StudyConfig;
use super::observations::{select_observations, simulate_endpoints, LabeledObservation};
use super::StudyError;

/// Columns that depend on the machine's speed.
pub const TIMING_COLUMNS: [&str; 4] = ["ess_per_s", "wall_time", "setup_time", "sampling_time"];

/// One `(T, Δt, y¹, proposal)` cell of a study.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResultRow {
    pub model: String,
    pub proposal: String,
    #[serde(rename = "T")]
    pub horizon: f64,
    pub dt: f64,
    pub obs_label: String,
    /// Coordinates joined by `;`.
    pub obs_value: String,
    pub rel_ess: f64,
    pub ess_per_s: f64,
    /// Mean over the timing repetitions of setup plus sampling, seconds.
    pub wall_time: f64,
    /// ξ, LNA and suffix-sum construction, seconds.
    pub setup_time: f64,
    pub sampling_time: f64,
    pub domain_rejections: usize,
    pub numeric_rejections: usize,
    pub seed: u64,
    /// `ok`, or the reason the cell failed.
    pub status: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CellSpec<'a> {
    pub horizon: f64,
    pub dt: f64,
    pub observation: &'a LabeledObservation,
    pub proposal: ProposalKind,
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";")
}

fn observation_model(value: &[f64], sigma_obs: f64) -> Result<ObservationModel<f64>, StudyError> {
    Ok(ObservationModel::direct(Vector::from_slice(value), sigma_obs)?)
}

struct CellOutcome {
    ensemble: WeightedEnsemble<f64>,
    setup: f64,
    sampling: f64,
}

fn time_cell(
    config: &StudyConfig,
    model: &dyn DiffusionModel<f64>,
    grid: &TimeGrid<f64>,
    obs: &ObservationModel<f64>,
    proposal: ProposalKind,
    keep_paths: bool,
) -> Result<CellOutcome, StudyError> {
    let opts = OdeOptions::default();
    let (mut setup, mut sampling) = (0.0, 0.0);
    let mut first = None;
    for _ in 0..config.reps {
        let start = Instant::now();
        let prepared = PreparedProposal::new(proposal, model, &config.x0, grid, obs, &opts)?;
        setup += start.elapsed().as_secs_f64();
        let ens = run_ensemble(
            config.n_paths,
            &prepared,
            model,
            &config.x0,
            grid,
            obs,
            config.seed,
            EnsembleOptions { keep_paths },
        )?;
        sampling += ens.wall_time;
        // repetitions are identical runs; only the first ensemble is kept
        if first.is_none() {
            first = Some(ens);
        }
    }
    let reps = config.reps as f64;
    Ok(CellOutcome {
        ensemble: first.expect("reps ≥ 1"),
        setup: setup / reps,
        sampling: sampling / reps,
    })
}

/// Runs one cell. Failures are reported in the row's `status` rather than returned.
pub fn run_cell(
    config: &StudyConfig,
    model: &dyn DiffusionModel<f64>,
    cell: &CellSpec<'_>,
) -> ResultRow {
    let mut row = ResultRow {
        model: config.model.clone(),
        proposal: cell.proposal.name().into(),
        horizon: cell.horizon,
        dt: cell.dt,
        obs_label: cell.observation.label.clone(),
        obs_value: join(&cell.observation.value),
        rel_ess: 0.0,
        ess_per_s: 0.0,
        wall_time: 0.0,
        setup_time: 0.0,
        sampling_time: 0.0,
        domain_rejections: 0,
        numeric_rejections: 0,
        seed: config.seed,
        status: "ok".into(),
    };
    let outcome = config
        .grid(cell.horizon, cell.dt)
        .and_then(|grid| {
            let obs = observation_model(&cell.observation.value, config.sigma_obs)?;
            time_cell(config, model, &grid, &obs, cell.proposal, false)
        });
    match outcome {
        Ok(o) => {
            let ens = &o.ensemble;
            row.rel_ess = ens.relative_ess();
            row.setup_time = o.setup;
            row.sampling_time = o.sampling;
            row.wall_time = o.setup + o.sampling;
            row.ess_per_s = if row.wall_time > 0.0 { ens.ess() / row.wall_time } else { 0.0 };
            row.domain_rejections = ens.domain_rejections;
            row.numeric_rejections = ens.numeric_rejections;
            if ens.all_rejected() {
                row.status = "all paths rejected".into();
            }
        }
        Err(e) => row.status = format!("error: {e}"),
    }
    row
}

/// Observations selected from the endpoint cloud at horizon `t`, simulated at step `dt`.
pub fn observations_for(
    config: &StudyConfig,
    model: &dyn DiffusionModel<f64>,
    t: f64,
    dt: f64,
) -> Result<(Vec<LabeledObservation>, Vec<String>, usize), StudyError> {
    let grid = config.grid(t, dt)?;
    let d = model.dim();
    let cloud = simulate_endpoints(
        model,
        &config.x0,
        &grid,
        config.endpoints,
        &Matrix::identity(d),
        &Matrix::identity(d).scale(config.sigma_obs),
        config.seed,
    )?;
    let sel = select_observations(&cloud.points, config.scheme)?;
    let mut obs = sel.observations;
    if let Some(filter) = &config.obs_filter {
        obs.retain(|o| filter.contains(&o.label));
        if obs.is_empty() {
            return Err(StudyError::Config(format!(
                "no observation labelled {filter:?} at T = {t}"
            )));
        }
    }
    Ok((obs, sel.warnings, cloud.resampled))
}

#[derive(Clone, Debug, Default, Serialize)]
struct HorizonMeta {
    #[serde(rename = "T")]
    horizon: f64,
    endpoint_dt: f64,
    resampled_endpoints: usize,
    observations: Vec<LabeledObservation>,
    warnings: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
struct Metadata<'a> {
    verb: &'a str,
    config: &'a StudyConfig,
    observation_scheme: &'static str,
    observation_scheme_note: &'static str,
    quantile_rule: &'static str,
    observation_model: &'static str,
    timing: &'static str,
    timing_columns: [&'static str; 4],
    rel_ess: &'static str,
    horizons: Vec<HorizonMeta>,
}

/// Result of a study run: the rows in output order and the files written.
#[derive(Clone, Debug, PartialEq)]
pub struct StudyReport {
    pub rows: Vec<ResultRow>,
    pub csv: PathBuf,
    pub metadata: PathBuf,
}

fn csv_writer(path: &Path) -> Result<csv::Writer<File>, StudyError> {
    Ok(csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)?)
}

#[derive(Clone, Copy, PartialEq)]
enum Layout {
    /// T, observation, Δt, proposal
    Study,
    /// T, observation, proposal, then Δt decreasing
    StepGroups,
}

fn execute(
    config: &StudyConfig,
    verb: &str,
    layout: Layout,
    progress: &mut dyn FnMut(&ResultRow),
) -> Result<StudyReport, StudyError> {
    config.validate()?;
    let model = build(&config.model, &config.theta)?;
    fs::create_dir_all(&config.out)?;
    let csv_path = config.out.join(format!("{verb}.csv"));
    let meta_path = config.out.join(format!("{verb}.metadata.json"));
    let mut writer = csv_writer(&csv_path)?;
    let mut rows = Vec::new();
    let mut horizons = Vec::new();
    for &t in &config.horizons {
        let endpoint_dt = config.dts[0];
        let (observations, warnings, resampled) = observations_for(config, model.as_ref(), t, endpoint_dt)?;
        for obs in &observations {
            let mut cells = Vec::new();
            match layout {
                Layout::Study => {
                    for &dt in &config.dts {
                        for &p in &config.proposals {
                            cells.push((dt, p));
                        }
                    }
                }
                Layout::StepGroups => {
                    for &p in &config.proposals {
                        for &dt in &config.dts {
                            cells.push((dt, p));
                        }
                    }
                }
            }
            for (dt, proposal) in cells {
                let row = run_cell(
                    config,
                    model.as_ref(),
                    &CellSpec {
                        horizon: t,
                        dt,
                        observation: obs,
                        proposal,
                    },
                );
                writer.serialize(&row)?;
                writer.flush()?;
                progress(&row);
                rows.push(row);
            }
        }
        horizons.push(HorizonMeta {
            horizon: t,
            endpoint_dt,
            resampled_endpoints: resampled,
            observations,
            warnings,
        });
    }
    writer.flush()?;
    let meta = Metadata {
        verb,
        config,
        observation_scheme: config.scheme.name(),
        observation_scheme_note: match config.scheme {
            crate::study::ObservationScheme::Pca90 => {
                "centre is the cloud mean; pcI-q90/pcI-q10 are the mean shifted along principal axis I by the 90% and 10% empirical quantiles of the signed projections onto that axis"
            }
            crate::study::ObservationScheme::Quantiles => {
                "coordinatewise 5%, 50% and 95% empirical quantiles; q50 is the centre"
            }
        },
        quantile_rule: "linear interpolation between order statistics (type 7)",
        observation_model: "y = x_K + e, e ~ N(0, sigma_obs I); endpoints simulated by forward EM at the first dt",
        timing: "wall_time = setup_time + sampling_time, each averaged over reps identical runs; setup covers the deterministic path, LNA and suffix sums; ess_per_s uses wall_time",
        timing_columns: TIMING_COLUMNS,
        rel_ess: "rejected paths keep weight 0 and count in N",
        horizons,
    };
    let mut f = BufWriter::new(File::create(&meta_path)?);
    serde_json::to_writer_pretty(&mut f, &meta)?;
    f.write_all(b"\n")?;
    f.flush()?;
    Ok(StudyReport {
        rows,
        csv: csv_path,
        metadata: meta_path,
    })
}

/// Every `(T, y¹, Δt, proposal)` combination; rows are written to `<out>/study.csv` as they finish.
pub fn run_study(
    config: &StudyConfig,
    progress: &mut dyn FnMut(&ResultRow),
) -> Result<StudyReport, StudyError> {
    execute(config, "study", Layout::Study, progress)
}

/// The study restricted to the volatility-tracking bridges over at least two
/// step sizes, grouped by decreasing Δt. Writes `<out>/dt-study.csv`.
pub fn dt_robustness_study(
    config: &StudyConfig,
    progress: &mut dyn FnMut(&ResultRow),
) -> Result<StudyReport, StudyError> {
    if config.dts.len() < 2 {
        return Err(StudyError::Config(
            "the step-size study needs at least two dt values".into(),
        ));
    }
    let mut c = config.clone();
    c.proposals.retain(|p| p.tracks_volatility());
    if c.proposals.is_empty() {
        return Err(StudyError::Config(
            "the step-size study runs rbbar-ode and rbbar-lna only".into(),
        ));
    }
    c.dts.sort_by(|a, b| b.total_cmp(a));
    c.dts.dedup();
    execute(&c, "dt-study", Layout::StepGroups, progress)
}

/// One line of figure data.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PathRecord {
    pub path_id: usize,
    pub t: f64,
    pub x: Vec<f64>,
    pub weight: f64,
    /// `w̃ / max w̃`, the plotting transparency.
    pub alpha: f64,
}

/// Simulates `config.figure_paths` bridges for the first T, Δt and proposal of
/// the config, conditioned on the first selected observation, and writes
/// `<out>/paths.csv` (columns `path_id,t,x1..xd,weight,alpha`).
pub fn emit_paths(config: &StudyConfig) -> Result<(PathBuf, Vec<PathRecord>), StudyError> {
    config.validate()?;
    let model = build(&config.model, &config.theta)?;
    let t = config.horizons[0];
    let dt = config.dts[0];
    let proposal = config.proposals[0];
    let (observations, _, _) = observations_for(config, model.as_ref(), t, dt)?;
    let obs_value = &observations[0].value;
    let grid = config.grid(t, dt)?;
    let obs = observation_model(obs_value, config.sigma_obs)?;
    let mut c = config.clone();
    c.n_paths = config.figure_paths;
    c.reps = 1;
    let outcome = time_cell(&c, model.as_ref(), &grid, &obs, proposal, true)?;
    let ens = outcome.ensemble;
    let max_w = ens.weights.iter().copied().fold(0.0, f64::max);
    let mut records = Vec::new();
    for (id, path) in ens.paths.as_deref().unwrap_or_default().iter().enumerate() {
        let w = ens.weights[id];
        let alpha = if max_w > 0.0 { w / max_w } else { 0.0 };
        for (k, x) in path.states.iter().enumerate() {
            records.push(PathRecord {
                path_id: id,
                t: grid.time(k),
                x: x.to_vec(),
                weight: w,
                alpha,
            });
        }
    }
    fs::create_dir_all(&config.out)?;
    let path = config.out.join("paths.csv");
    let mut writer = csv_writer(&path)?;
    let d = model.dim();
    let mut header = vec!["path_id".to_string(), "t".to_string()];
    header.extend((1..=d).map(|i| format!("x{i}")));
    header.extend(["weight".to_string(), "alpha".to_string()]);
    writer.write_record(&header)?;
    for r in &records {
        let mut line = vec![r.path_id.to_string(), r.t.to_string()];
        line.extend(r.x.iter().map(|v| v.to_string()));
        line.extend([r.weight.to_string(), r.alpha.to_string()]);
        writer.write_record(&line)?;
    }
    writer.flush()?;
    Ok((path, records))
}
