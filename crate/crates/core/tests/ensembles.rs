mod common;

use common::*;
use resbridge::models::{LotkaVolterra, SineDiffusion};
use resbridge::ode::OdeOptions;
use resbridge::{
    run_ensemble, EnsembleOptions, ObservationModel, PreparedProposal, ProposalKind, TimeGrid,
    Vector,
};

#[test]
fn rbbar_ode_is_nearly_exact_for_time_varying_volatility() {
    let rbbar = sine_rel_ess(ProposalKind::RbBarOde, 1.0, 2000, 1);
    let rb = sine_rel_ess(ProposalKind::RbOde, 1.0, 2000, 1);
    assert!(rbbar >= 0.99, "{rbbar}");
    assert!(rb < rbbar, "rb {rb} rbbar {rbbar}");
}

#[test]
fn lamperti_transform_makes_rb_and_rbbar_identical() {
    let (identical, diff) = lamperti_rb_vs_rbbar(200, 3);
    assert!(identical);
    assert!(diff <= 1e-12);
}

#[test]
fn ensemble_does_not_depend_on_the_worker_count() {
    let m = LotkaVolterra::new([0.5, 0.0025, 0.3]);
    let grid = TimeGrid::new(2.0, 0.1).unwrap();
    let obs = ObservationModel::direct(Vector::from(vec![60.0, 110.0]), 1.0).unwrap();
    let p = PreparedProposal::new(ProposalKind::RbBarLna, &m, &[71.0, 79.0], &grid, &obs, &OdeOptions::default())
        .unwrap();
    let run = |threads| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            run_ensemble(300, &p, &m, &[71.0, 79.0], &grid, &obs, 8, EnsembleOptions { keep_paths: true })
                .unwrap()
        })
    };
    let (a, b) = (run(1), run(3));
    assert_eq!(a.log_weights, b.log_weights);
    assert_eq!(a.paths, b.paths);
}

#[test]
fn forward_simulation_degenerates_on_long_lotka_volterra_bridges() {
    let m = LotkaVolterra::new([0.5, 0.0025, 0.3]);
    let grid = TimeGrid::new(10.0, 0.1).unwrap();
    let y = study_observation("lv", 10.0, 0.1, "centre", 1);
    let obs = ObservationModel::direct(Vector::from(y), 1e-12).unwrap();
    let fs = PreparedProposal::forward();
    let ens = run_ensemble(1000, &fs, &m, &[71.0, 79.0], &grid, &obs, 2, EnsembleOptions::default()).unwrap();
    assert!(ens.relative_ess() < 0.01, "{}", ens.relative_ess());
    let rbbar = PreparedProposal::new(ProposalKind::RbBarOde, &m, &[71.0, 79.0], &grid, &obs, &OdeOptions::default())
        .unwrap();
    let good = run_ensemble(1000, &rbbar, &m, &[71.0, 79.0], &grid, &obs, 2, EnsembleOptions::default()).unwrap();
    assert!(good.relative_ess() > 10.0 * ens.relative_ess(), "{} vs {}", good.relative_ess(), ens.relative_ess());
}

#[test]
fn forward_simulation_with_wide_noise_is_a_self_normalized_estimator() {
    // E[X_T] under the posterior with Σ₁ large is close to the prior mean
    let m = SineDiffusion::new(0.5);
    let grid = TimeGrid::new(1.0, 0.01).unwrap();
    let obs = ObservationModel::direct(Vector::from(vec![0.0]), 1e4).unwrap();
    let ens = run_ensemble(
        20_000,
        &PreparedProposal::forward(),
        &m,
        &[0.0],
        &grid,
        &obs,
        5,
        EnsembleOptions::default(),
    )
    .unwrap();
    let mean: f64 = ens.weights.iter().zip(&ens.terminals).map(|(w, x)| w * x[0]).sum();
    let prior_mean = 1.0 - 1f64.cos();
    assert!((mean - prior_mean).abs() < 0.05, "{mean}");
    assert!(ens.relative_ess() > 0.99);
}
