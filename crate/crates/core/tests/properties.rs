mod common;

use common::*;
use proptest::prelude::*;
use resbridge::engine::{normalize_log_weights, relative_ess};
use resbridge::models::{BirthDeath, GeneExpression, LotkaVolterra};
use resbridge::{DiffusionModel, Matrix};

fn factored_zeta(m: &dyn DiffusionModel<f64>, x: &[f64], t: f64) -> Matrix<f64> {
    let f = m.factorization().unwrap();
    let s = f.stoichiometry();
    let l = f.rate_roots(x, t);
    let sl = Matrix::from_fn(s.nrows(), s.ncols(), |i, j| s[(i, j)] * l[j]);
    sl.gram()
}

proptest! {
    #[test]
    fn volatility_is_sigma_sigma_transpose(x1 in 0.0f64..500.0, x2 in 0.0f64..500.0, t in 0.0f64..4.0) {
        let lv = LotkaVolterra::new([0.5, 0.0025, 0.3]);
        let ge = GeneExpression::new([0.7, 0.72, 3.0, 80.0, 0.05, 2.0, 50.0]);
        for m in [&lv as &dyn DiffusionModel<f64>, &ge] {
            let x = [x1, x2];
            let zeta = m.volatility(&x, t);
            let tol = 1e-12 * (1.0 + zeta.max_abs());
            prop_assert!((&zeta - &m.diffusion(&x, t).gram()).max_abs() <= tol);
            prop_assert!((&zeta - &factored_zeta(m, &x, t)).max_abs() <= tol);
            prop_assert!(zeta[(0, 1)] == zeta[(1, 0)]);
        }
        let bd = BirthDeath::new([0.1, 0.8]);
        prop_assert!((bd.volatility(&[x1], t)[(0, 0)] - 0.9 * x1).abs() <= 1e-12 * (1.0 + x1));
    }

    #[test]
    fn bridge_covariances_are_symmetric_psd(seed in 0u64..100_000) {
        let inst = random_instance(seed, Variant::General);
        let obs = inst.observation();
        for c in [inst.mdb(&obs), inst.rb(&obs), inst.rbbar(&obs)] {
            let v = &c.cov;
            prop_assert_eq!(v, &v.transpose());
            let (values, _) = v.symmetric_eigen();
            prop_assert!(values.iter().all(|&l| l >= -1e-12 * (1.0 + v.max_abs())));
            // conditioning never adds variance
            let fs = inst.fs();
            for i in 0..v.nrows() {
                prop_assert!(v[(i, i)] <= fs.cov[(i, i)] + 1e-12);
            }
        }
    }

    #[test]
    fn weight_normalization_is_shift_invariant(
        logs in prop::collection::vec(-50.0f64..50.0, 1..40),
        shift in -600.0f64..600.0,
    ) {
        let w = normalize_log_weights(&logs);
        let shifted: Vec<f64> = logs.iter().map(|l| l + shift).collect();
        let ws = normalize_log_weights(&shifted);
        prop_assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for (a, b) in w.iter().zip(&ws) {
            prop_assert!((a - b).abs() < 1e-12);
        }
        let n = logs.len() as f64;
        let rel = relative_ess(&w);
        prop_assert!(rel <= 1.0 + 1e-12 && rel >= 1.0 / n - 1e-12);
    }
}
