use std::fs::{self, File};
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use resbridge::models::{build, catalog};
use resbridge::study::{
    dt_robustness_study, emit_paths, observations_for, run_study, simulate_endpoints,
    ObservationScheme, ResultRow, StudyConfig, StudyError, StudySettings,
};
use resbridge::{Matrix, ProposalKind};
use serde_json::json;

#[derive(Parser, Debug)]
#[command(name = "resbridge", version, about = "Bridge proposals for diffusions conditioned on a noisy terminal observation")]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Subcommand, Debug)]
enum Verb {
    /// Simulate the endpoint cloud for each T and print the selected observations.
    Endpoints(Common),
    /// Run every (T, observation, dt, proposal) cell and write study.csv.
    Study(Common),
    /// Step-size robustness study for rbbar-ode and rbbar-lna; writes dt-study.csv.
    DtStudy(Common),
    /// Write figure data (paths.csv) for the first T, dt and proposal.
    Paths(Common),
    /// Print the model catalog as JSON.
    ListModels,
}

#[derive(Args, Debug, Default)]
struct Common {
    /// JSON config file; command-line flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    model: Option<String>,
    #[arg(long, value_parser = parse_proposal)]
    proposal: Vec<ProposalKind>,
    #[arg(long = "T")]
    horizon: Vec<f64>,
    #[arg(long)]
    dt: Vec<f64>,
    /// Paths per ensemble.
    #[arg(long = "N")]
    n_paths: Option<usize>,
    /// Endpoint-cloud size.
    #[arg(long = "M")]
    endpoints: Option<usize>,
    /// Timing repetitions per cell.
    #[arg(long)]
    reps: Option<usize>,
    /// Observation noise variance; Σ₁ = sigma-obs · I.
    #[arg(long)]
    sigma_obs: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// N = 1e6 and 10 timing repetitions.
    #[arg(long)]
    paper_scale: bool,
    /// pca-90 or quantiles-5-50-95.
    #[arg(long, value_parser = parse_scheme)]
    scheme: Option<ObservationScheme>,
    /// Restrict to these observation labels (e.g. centre, q50).
    #[arg(long)]
    obs: Vec<String>,
    #[arg(long, value_delimiter = ',')]
    theta: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    x0: Option<Vec<f64>>,
    /// Number of paths written by `paths`.
    #[arg(long)]
    paths: Option<usize>,
}

fn parse_proposal(s: &str) -> Result<ProposalKind, String> {
    s.parse().map_err(|e: resbridge::Error| e.to_string())
}

fn parse_scheme(s: &str) -> Result<ObservationScheme, String> {
    ObservationScheme::parse(s).map_err(|e| e.to_string())
}

fn non_empty<T>(v: Vec<T>) -> Option<Vec<T>> {
    (!v.is_empty()).then_some(v)
}

impl Common {
    fn settings(self) -> Result<StudySettings, StudyError> {
        let file = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .map_err(|e| StudyError::Config(format!("{}: {e}", path.display())))?;
                StudySettings::from_json(&text)?
            }
            None => StudySettings::default(),
        };
        let flags = StudySettings {
            model: self.model,
            theta: self.theta,
            x0: self.x0,
            horizons: non_empty(self.horizon),
            dt: non_empty(self.dt),
            proposal: non_empty(self.proposal),
            n_paths: self.n_paths,
            endpoints: self.endpoints,
            reps: self.reps,
            scheme: self.scheme,
            sigma_obs: self.sigma_obs,
            seed: self.seed,
            out: self.out,
            obs: non_empty(self.obs),
            paper_scale: self.paper_scale.then_some(true),
            paths: self.paths,
        };
        Ok(file.overlay(flags))
    }
}

fn print_row(row: &ResultRow) {
    eprintln!(
        "{} {} T={} dt={} {}: rel_ess={:.4} ess/s={:.1} [{}]",
        row.model, row.proposal, row.horizon, row.dt, row.obs_label, row.rel_ess, row.ess_per_s, row.status
    );
}

fn endpoints(config: &StudyConfig) -> Result<serde_json::Value, StudyError> {
    let model = build(&config.model, &config.theta)?;
    let d = model.dim();
    fs::create_dir_all(&config.out)?;
    let mut summary = Vec::new();
    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(config.out.join("endpoints.csv"))?;
    let mut header = vec!["T".to_string(), "index".to_string()];
    header.extend((1..=d).map(|i| format!("y{i}")));
    writer.write_record(&header)?;
    for &t in &config.horizons {
        let dt = config.dts[0];
        let grid = config.grid(t, dt)?;
        let cloud = simulate_endpoints(
            model.as_ref(),
            &config.x0,
            &grid,
            config.endpoints,
            &Matrix::identity(d),
            &Matrix::identity(d).scale(config.sigma_obs),
            config.seed,
        )?;
        for (i, y) in cloud.points.iter().enumerate() {
            let mut rec = vec![t.to_string(), i.to_string()];
            rec.extend(y.iter().map(|v| v.to_string()));
            writer.write_record(&rec)?;
        }
        let (observations, warnings, resampled) = observations_for(config, model.as_ref(), t, dt)?;
        summary.push(json!({
            "T": t,
            "dt": dt,
            "resampled": resampled,
            "observations": observations,
            "warnings": warnings,
        }));
    }
    writer.flush()?;
    let value = json!({ "model": config.model, "scheme": config.scheme.name(), "horizons": summary });
    let mut f = File::create(config.out.join("observations.json"))?;
    serde_json::to_writer_pretty(&mut f, &value)?;
    f.write_all(b"\n")?;
    Ok(value)
}

fn run(verb: Verb) -> Result<serde_json::Value, StudyError> {
    match verb {
        Verb::ListModels => Ok(serde_json::to_value(catalog())?),
        Verb::Endpoints(c) => endpoints(&c.settings()?.resolve(false)?),
        Verb::Study(c) => {
            let config = c.settings()?.resolve(false)?;
            let report = run_study(&config, &mut print_row)?;
            Ok(json!({ "csv": report.csv, "metadata": report.metadata, "rows": report.rows.len() }))
        }
        Verb::DtStudy(c) => {
            let config = c.settings()?.resolve(true)?;
            let report = dt_robustness_study(&config, &mut print_row)?;
            Ok(json!({ "csv": report.csv, "metadata": report.metadata, "rows": report.rows.len() }))
        }
        Verb::Paths(c) => {
            let mut settings = c.settings()?;
            if settings.proposal.is_none() {
                settings.proposal = Some(vec![ProposalKind::Fs]);
            }
            let config = settings.resolve(false)?;
            let (path, records) = emit_paths(&config)?;
            Ok(json!({ "csv": path, "records": records.len() }))
        }
    }
}

fn fail(kind: &str, message: String, code: u8) -> ExitCode {
    eprintln!("{}", json!({ "error": { "kind": kind, "message": message } }));
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail("usage", e.to_string().trim().to_string(), 2),
    };
    match run(cli.verb) {
        Ok(value) => {
            println!("{}", serde_json::to_string_pretty(&value).expect("serializable"));
            ExitCode::SUCCESS
        }
        Err(e) => {
            let code = if matches!(e, StudyError::Config(_)) { 2 } else { 1 };
            fail(e.kind(), e.to_string(), code)
        }
    }
}
