//! Oracles shared by the integration tests and the acceptance harness.
//! Dense linear algebra here uses plain nested `Vec`s, independent of the
//! crate's own matrix type.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use resbridge::bridge::{
    fs_step_conditional, mdb_conditional, rb_conditional, rbbar_conditional, StepConditional,
};
use resbridge::models::build;
use resbridge::ode::OdeOptions;
use resbridge::study::{observations_for, StudySettings};
use resbridge::{
    run_ensemble, DeterministicPath, DiffusionModel, EnsembleOptions, Matrix, ObservationModel,
    PathKind, PreparedProposal, ProposalKind, SigmaSuffixStats, TimeGrid, Vector,
};

pub type Dense = Vec<Vec<f64>>;

pub fn dense(m: &Matrix<f64>) -> Dense {
    (0..m.nrows()).map(|i| m.row(i).to_vec()).collect()
}

pub fn mat_mul(a: &Dense, b: &Dense) -> Dense {
    let (n, m, p) = (a.len(), b.len(), b[0].len());
    let mut c = vec![vec![0.0; p]; n];
    for i in 0..n {
        for k in 0..m {
            for j in 0..p {
                c[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    c
}

pub fn transpose(a: &Dense) -> Dense {
    (0..a[0].len()).map(|j| a.iter().map(|r| r[j]).collect()).collect()
}

pub fn add(a: &Dense, b: &Dense, c: f64) -> Dense {
    a.iter()
        .zip(b)
        .map(|(r, s)| r.iter().zip(s).map(|(x, y)| x + c * y).collect())
        .collect()
}

pub fn scale(a: &Dense, c: f64) -> Dense {
    a.iter().map(|r| r.iter().map(|x| c * x).collect()).collect()
}

pub fn mat_vec(a: &Dense, v: &[f64]) -> Vec<f64> {
    a.iter().map(|r| r.iter().zip(v).map(|(x, y)| x * y).sum()).collect()
}

/// Gauss–Jordan inverse with partial pivoting.
pub fn inverse(a: &Dense) -> Dense {
    let n = a.len();
    let mut m: Dense = a
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut row = r.clone();
            row.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            row
        })
        .collect();
    for c in 0..n {
        let p = (c..n).max_by(|&x, &y| m[x][c].abs().total_cmp(&m[y][c].abs())).unwrap();
        m.swap(c, p);
        let d = m[c][c];
        for v in m[c].iter_mut() {
            *v /= d;
        }
        for r in 0..n {
            if r != c {
                let f = m[r][c];
                let pivot = m[c].clone();
                for (v, q) in m[r].iter_mut().zip(pivot) {
                    *v -= f * q;
                }
            }
        }
    }
    m.into_iter().map(|r| r[n..].to_vec()).collect()
}

/// Conditions `N((m1, m2), [[C11, C12], [C21, C22]])` on the second block equal to `y`,
/// assembling and partitioning the full joint covariance.
pub fn condition_joint(m1: &[f64], m2: &[f64], joint: &Dense, y: &[f64]) -> (Vec<f64>, Dense) {
    let d = m1.len();
    let block = |r0: usize, r1: usize, c0: usize, c1: usize| -> Dense {
        joint[r0..r1].iter().map(|r| r[c0..c1].to_vec()).collect()
    };
    let n = joint.len();
    let c11 = block(0, d, 0, d);
    let c12 = block(0, d, d, n);
    let c21 = block(d, n, 0, d);
    let c22 = block(d, n, d, n);
    let gain = mat_mul(&c12, &inverse(&c22));
    let resid: Vec<f64> = y.iter().zip(m2).map(|(a, b)| a - b).collect();
    let shift = mat_vec(&gain, &resid);
    let mean = m1.iter().zip(&shift).map(|(a, b)| a + b).collect();
    let cov = add(&c11, &mat_mul(&gain, &c21), -1.0);
    (mean, cov)
}

fn joint(step: &Dense, cross: &Dense, terminal: &Dense) -> Dense {
    let d = step.len();
    let q = terminal.len();
    let mut j = vec![vec![0.0; d + q]; d + q];
    let cross_t = transpose(cross);
    for i in 0..d + q {
        for k in 0..d + q {
            j[i][k] = match (i < d, k < d) {
                (true, true) => step[i][k],
                (true, false) => cross[i][k - d],
                (false, true) => cross_t[i - d][k],
                (false, false) => terminal[i - d][k - d],
            };
        }
    }
    j
}

/// `μ(x,t) = A x + b cos t`, `σ(x,t) = S₀ + x₁ S₁ + sin(t) S₂`, valid everywhere.
#[derive(Clone, Debug)]
pub struct AffineModel {
    pub a: Dense,
    pub b: Vec<f64>,
    pub s0: Dense,
    pub s1: Dense,
    pub s2: Dense,
}

impl DiffusionModel<f64> for AffineModel {
    fn dim(&self) -> usize {
        self.b.len()
    }

    fn noise_dim(&self) -> usize {
        self.s0[0].len()
    }

    fn drift(&self, x: &[f64], t: f64) -> Vector<f64> {
        let ax = mat_vec(&self.a, x);
        Vector::from_fn(self.b.len(), |i| ax[i] + self.b[i] * t.cos())
    }

    fn diffusion(&self, x: &[f64], t: f64) -> Matrix<f64> {
        let s = add(&add(&self.s0, &self.s1, x[0]), &self.s2, t.sin());
        Matrix::from_fn(s.len(), s[0].len(), |i, j| s[i][j])
    }
}

pub struct Instance {
    pub model: AffineModel,
    pub grid: TimeGrid<f64>,
    pub k: usize,
    pub x: Vec<f64>,
    pub xi: Vec<Vec<f64>>,
    pub projection: Dense,
    pub noise: Dense,
    pub y: Vec<f64>,
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(rand_distr::StandardNormal)
}

fn random_dense(rng: &mut ChaCha8Rng, r: usize, c: usize, s: f64) -> Dense {
    (0..r).map(|_| (0..c).map(|_| s * normal(rng)).collect()).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Variant {
    General,
    /// ξ constant in k.
    ConstantXi,
    /// σ(ξ_j, t_j) constant in j: σ has no time term and ξ has constant first coordinate.
    ConstantSigmaAlongXi,
}

pub fn random_instance(seed: u64, variant: Variant) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = rng.random_range(1..=2usize);
    let steps = rng.random_range(2..=30usize);
    let dt = rng.random_range(0.01..0.1);
    let grid = TimeGrid::with_steps(dt * steps as f64, steps).unwrap();
    let k = rng.random_range(0..steps);
    let mut s0 = random_dense(&mut rng, d, d, 0.3);
    for (i, row) in s0.iter_mut().enumerate() {
        row[i] = rng.random_range(0.5..1.5);
    }
    let s2 = if variant == Variant::ConstantSigmaAlongXi {
        vec![vec![0.0; d]; d]
    } else {
        random_dense(&mut rng, d, d, 0.2)
    };
    let model = AffineModel {
        a: random_dense(&mut rng, d, d, 0.5),
        b: (0..d).map(|_| normal(&mut rng)).collect(),
        s0,
        s1: random_dense(&mut rng, d, d, 0.2),
        s2,
    };
    let x: Vec<f64> = (0..d).map(|_| normal(&mut rng)).collect();
    let first: Vec<f64> = (0..d).map(|_| normal(&mut rng)).collect();
    let xi = (0..=steps)
        .map(|_| match variant {
            Variant::ConstantXi => first.clone(),
            Variant::General => (0..d).map(|_| normal(&mut rng)).collect(),
            Variant::ConstantSigmaAlongXi => {
                let mut v: Vec<f64> = (0..d).map(|_| normal(&mut rng)).collect();
                v[0] = first[0];
                v
            }
        })
        .collect();
    let q = rng.random_range(1..=d);
    let projection = random_dense(&mut rng, q, d, 1.0);
    let l = random_dense(&mut rng, q, q, 0.5);
    let noise = add(&mat_mul(&l, &transpose(&l)), &identity(q), 0.1);
    let y = (0..q).map(|_| 2.0 * normal(&mut rng)).collect();
    Instance {
        model,
        grid,
        k,
        x,
        xi,
        projection,
        noise,
        y,
    }
}

pub fn identity(n: usize) -> Dense {
    (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect()
}

impl Instance {
    pub fn observation(&self) -> ObservationModel<f64> {
        self.observation_with_noise(self.noise.clone())
    }

    pub fn observation_with_noise(&self, noise: Dense) -> ObservationModel<f64> {
        let to = |m: &Dense| Matrix::from_fn(m.len(), m[0].len(), |i, j| m[i][j]);
        ObservationModel::new(to(&self.projection), to(&noise), Vector::from_slice(&self.y)).unwrap()
    }

    pub fn path(&self) -> DeterministicPath<f64> {
        let values = self.xi.iter().map(|v| Vector::from_slice(v)).collect();
        DeterministicPath::from_values(PathKind::Ode, values, &self.model, &self.grid).unwrap()
    }

    fn t(&self, j: usize) -> f64 {
        self.grid.dt() * j as f64
    }

    fn sigma(&self, x: &[f64], j: usize) -> Dense {
        dense(&self.model.diffusion(x, self.t(j)))
    }

    /// The displayed joint of `(X_{k+1}, Y¹)` given `X_k = x_k`, conditioned on `Y¹ = y`.
    /// `terminal_mean` and `terminal_cov` are the state-scale `m_K`, `Ψ_K`.
    fn oracle(&self, terminal_mean: Vec<f64>, terminal_cov: Dense) -> (Vec<f64>, Dense) {
        let dt = self.grid.dt();
        let zeta = self.zeta();
        let drift = self.model.drift(&self.x, self.t(self.k)).to_vec();
        let m1: Vec<f64> = self.x.iter().zip(&drift).map(|(x, m)| x + dt * m).collect();
        let p = &self.projection;
        let m2 = mat_vec(p, &terminal_mean);
        let step = scale(&zeta, dt);
        let cross = mat_mul(&step, &transpose(p));
        let term = add(&mat_mul(&mat_mul(p, &terminal_cov), &transpose(p)), &self.noise, 1.0);
        condition_joint(&m1, &m2, &joint(&step, &cross, &term), &self.y)
    }

    fn remaining(&self) -> f64 {
        self.grid.dt() * (self.grid.steps() - self.k) as f64
    }

    fn zeta(&self) -> Dense {
        let s = self.sigma(&self.x, self.k);
        mat_mul(&s, &transpose(&s))
    }

    pub fn mdb_oracle(&self) -> (Vec<f64>, Dense) {
        let tau = self.remaining();
        let drift = self.model.drift(&self.x, self.t(self.k)).to_vec();
        let mean = self.x.iter().zip(&drift).map(|(x, m)| x + tau * m).collect();
        self.oracle(mean, scale(&self.zeta(), tau))
    }

    fn residual_terminal_mean(&self) -> Vec<f64> {
        let (tau, dt, k) = (self.remaining(), self.grid.dt(), self.k);
        let drift = self.model.drift(&self.x, self.t(k)).to_vec();
        let last = self.xi.len() - 1;
        (0..self.x.len())
            .map(|i| {
                let chord = (self.xi[k + 1][i] - self.xi[k][i]) / dt;
                self.x[i] + (self.xi[last][i] - self.xi[k][i]) + tau * (drift[i] - chord)
            })
            .collect()
    }

    pub fn rb_oracle(&self) -> (Vec<f64>, Dense) {
        self.oracle(self.residual_terminal_mean(), scale(&self.zeta(), self.remaining()))
    }

    /// `Ψ_K = Δtζ + Δt Σ_{j=k+1}^{K−1} (σ(ξ_j) + σ(x_k) − σ(ξ_k))(·)*`, summed directly.
    pub fn rbbar_terminal_cov_oracle(&self) -> Dense {
        let dt = self.grid.dt();
        let shift = add(&self.sigma(&self.x, self.k), &self.sigma(&self.xi[self.k], self.k), -1.0);
        let mut psi = scale(&self.zeta(), dt);
        for j in self.k + 1..self.grid.steps() {
            let a = add(&self.sigma(&self.xi[j], j), &shift, 1.0);
            psi = add(&psi, &mat_mul(&a, &transpose(&a)), dt);
        }
        psi
    }

    pub fn rbbar_oracle(&self) -> (Vec<f64>, Dense) {
        self.oracle(self.residual_terminal_mean(), self.rbbar_terminal_cov_oracle())
    }

    pub fn fs(&self) -> StepConditional<f64> {
        fs_step_conditional(&self.model, &self.x, self.k, &self.grid).unwrap()
    }

    pub fn mdb(&self, obs: &ObservationModel<f64>) -> StepConditional<f64> {
        mdb_conditional(&self.model, &self.x, self.k, &self.grid, obs).unwrap()
    }

    pub fn rb(&self, obs: &ObservationModel<f64>) -> StepConditional<f64> {
        rb_conditional(&self.model, &self.x, self.k, &self.grid, obs, &self.path()).unwrap()
    }

    pub fn rbbar(&self, obs: &ObservationModel<f64>) -> StepConditional<f64> {
        let xi = self.path();
        let stats = SigmaSuffixStats::new(&xi, &self.model).unwrap();
        rbbar_conditional(&self.model, &self.x, self.k, &self.grid, obs, &xi, &stats).unwrap()
    }
}

/// Max absolute difference between a conditional and an oracle `(mean, cov)`.
pub fn gap(c: &StepConditional<f64>, oracle: &(Vec<f64>, Dense)) -> f64 {
    let m = c.mean.iter().zip(&oracle.0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let v = dense(&c.cov)
        .iter()
        .flatten()
        .zip(oracle.1.iter().flatten())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    m.max(v)
}

pub fn gap_between(a: &StepConditional<f64>, b: &StepConditional<f64>) -> f64 {
    gap(a, &(b.mean.to_vec(), dense(&b.cov)))
}

/// Worst oracle gap for MDB, RB and RB̄ over `n` random instances.
pub fn conditioning_gaps(n: u64) -> [f64; 3] {
    let mut worst = [0.0f64; 3];
    for seed in 0..n {
        let inst = random_instance(seed, Variant::General);
        let obs = inst.observation();
        worst[0] = worst[0].max(gap(&inst.mdb(&obs), &inst.mdb_oracle()));
        worst[1] = worst[1].max(gap(&inst.rb(&obs), &inst.rb_oracle()));
        worst[2] = worst[2].max(gap(&inst.rbbar(&obs), &inst.rbbar_oracle()));
    }
    worst
}

/// Worst gaps for RB(ξ const) vs MDB, RB̄(σ∘ξ const) vs RB, and every proposal vs FS at Σ₁ = 1e12.
pub fn collapse_gaps(n: u64) -> [f64; 3] {
    let mut worst = [0.0f64; 3];
    for seed in 0..n {
        let inst = random_instance(1000 + seed, Variant::ConstantXi);
        let obs = inst.observation();
        worst[0] = worst[0].max(gap_between(&inst.rb(&obs), &inst.mdb(&obs)));

        let inst = random_instance(2000 + seed, Variant::ConstantSigmaAlongXi);
        let obs = inst.observation();
        worst[1] = worst[1].max(gap_between(&inst.rbbar(&obs), &inst.rb(&obs)));

        let inst = random_instance(3000 + seed, Variant::General);
        let q = inst.y.len();
        let obs = inst.observation_with_noise(scale(&identity(q), 1e12));
        let fs = inst.fs();
        for c in [inst.mdb(&obs), inst.rb(&obs), inst.rbbar(&obs)] {
            worst[2] = worst[2].max(gap_between(&c, &fs));
        }
    }
    worst
}

/// The observation labelled `label` from the study pipeline's endpoint cloud.
pub fn study_observation(model: &str, t: f64, dt: f64, label: &str, seed: u64) -> Vec<f64> {
    let config = StudySettings {
        model: Some(model.into()),
        horizons: Some(vec![t]),
        dt: Some(vec![dt]),
        seed: Some(seed),
        ..Default::default()
    }
    .resolve(false)
    .unwrap();
    let m = build(&config.model, &config.theta).unwrap();
    let (obs, _, _) = observations_for(&config, m.as_ref(), t, dt).unwrap();
    obs.into_iter().find(|o| o.label == label).unwrap().value
}

/// Relative ESS of one ensemble on a catalog model at its default θ and x₀.
pub fn catalog_rel_ess(
    model: &str,
    kind: ProposalKind,
    t: f64,
    dt: f64,
    y: &[f64],
    sigma_obs: f64,
    n: usize,
    seed: u64,
) -> f64 {
    let entry = resbridge::models::lookup(model).unwrap();
    let m = build(model, &entry.theta).unwrap();
    let grid = TimeGrid::new(t, dt).unwrap();
    let obs = ObservationModel::direct(Vector::from_slice(y), sigma_obs).unwrap();
    let p = PreparedProposal::new(kind, m.as_ref(), &entry.x0, &grid, &obs, &OdeOptions::default()).unwrap();
    run_ensemble(n, &p, m.as_ref(), &entry.x0, &grid, &obs, seed, EnsembleOptions::default())
        .unwrap()
        .relative_ess()
}

/// Max row-sum norm of a matrix difference.
pub fn inf_norm(m: &Matrix<f64>) -> f64 {
    (0..m.nrows())
        .map(|i| m.row(i).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Max absolute error of the bd LNA solution (η, G, φ) against the closed forms on `[0, horizon]`.
pub fn bd_analytic_error(horizon: f64, opts: &OdeOptions<f64>) -> f64 {
    let m = resbridge::models::BirthDeath::new([0.1, 0.8]);
    let grid = TimeGrid::new(horizon, 0.01).unwrap();
    let lna = resbridge::paths::solve_lna(&m, &[50.0], &grid, opts).unwrap();
    let mut worst = 0.0f64;
    for k in 0..=grid.steps() {
        let t = grid.time(k);
        worst = worst
            .max((lna.eta[k][0] - m.analytic_eta(50.0, t)).abs())
            .max((lna.generator[k][(0, 0)] - m.analytic_generator(t)).abs())
            .max((lna.phi[k][(0, 0)] - m.analytic_phi(50.0, t)).abs());
    }
    worst
}

/// `max_k ‖G_k ψ_k G_k* − φ_k‖∞` for a catalog model over `[0, horizon]`.
pub fn phi_identity_error(model: &str, horizon: f64, opts: &OdeOptions<f64>) -> f64 {
    let entry = resbridge::models::lookup(model).unwrap();
    let m = build(model, &entry.theta).unwrap();
    let grid = TimeGrid::new(horizon, entry.dt).unwrap();
    let lna = resbridge::paths::solve_lna(m.as_ref(), &entry.x0, &grid, opts).unwrap();
    let psi = resbridge::paths::solve_psi(m.as_ref(), &entry.x0, &grid, opts).unwrap();
    (0..=grid.steps())
        .map(|k| {
            let g = &lna.generator[k];
            let rebuilt = g.matmul(psi.at(k)).mul_transpose(g);
            inf_norm(&(&rebuilt - &lna.phi[k]))
        })
        .fold(0.0, f64::max)
}

/// Relative ESS on `dX = sin t dt + (1 + 0.5 sin t) dB`, `x₀ = 0`, `T = 1`, `Δt = 1e−3`, `Σ₁ = 1e−12`.
pub fn sine_rel_ess(kind: ProposalKind, y: f64, n: usize, seed: u64) -> f64 {
    let m = resbridge::models::SineDiffusion::new(0.5);
    let grid = TimeGrid::new(1.0, 1e-3).unwrap();
    let obs = ObservationModel::direct(Vector::from(vec![y]), 1e-12).unwrap();
    let p = PreparedProposal::new(kind, &m, &[0.0], &grid, &obs, &OdeOptions::default()).unwrap();
    run_ensemble(n, &p, &m, &[0.0], &grid, &obs, seed, EnsembleOptions::default())
        .unwrap()
        .relative_ess()
}

/// RB-ODE and RB̄-ODE ensembles on bd-lamperti with a shared seed:
/// whether the paths are bit-identical, and the largest weight difference.
pub fn lamperti_rb_vs_rbbar(n: usize, seed: u64) -> (bool, f64) {
    let entry = resbridge::models::lookup("bd-lamperti").unwrap();
    let m = build("bd-lamperti", &entry.theta).unwrap();
    let t = entry.dt_study_horizons[1];
    let grid = TimeGrid::new(t, entry.dt).unwrap();
    let bd = resbridge::models::TransformedBirthDeath::new([0.1, 0.8]);
    let y = bd.transform(study_observation("bd", t, entry.dt, "q50", seed)[0]);
    let obs = ObservationModel::direct(Vector::from(vec![y]), 1e-12).unwrap();
    let opts = EnsembleOptions { keep_paths: true };
    let run = |kind| {
        let p = PreparedProposal::new(kind, m.as_ref(), &entry.x0, &grid, &obs, &OdeOptions::default()).unwrap();
        run_ensemble(n, &p, m.as_ref(), &entry.x0, &grid, &obs, seed, opts).unwrap()
    };
    let a = run(ProposalKind::RbOde);
    let b = run(ProposalKind::RbBarOde);
    let diff = a.weights.iter().zip(&b.weights).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    (a.paths == b.paths && a.log_weights == b.log_weights, diff)
}
