use funcrate_core::estimate::{coupled_errors, moment_diagnostic, mse_curve, reference_integral};
use funcrate_core::model::{certificate_for, q_moment};
use funcrate_core::simulate::{simulate_path, GridSpec, PathBatch};
use funcrate_core::theory::{bm_linear_coupled_oracle, bm_linear_mse_oracle};
use funcrate_core::{Coefficient, Error, HolderFunction, ProcessModel};
use proptest::prelude::*;

fn bm() -> ProcessModel<f64> {
    ProcessModel::brownian(1.0, vec![0.0]).unwrap()
}

#[test]
fn linear_brownian_curve_matches_oracle() {
    let grid = GridSpec::new(1.0, 1 << 13, vec![8, 16, 32, 64, 128]).unwrap();
    let h = HolderFunction::linear(1.0, 0.0).unwrap();
    let summary = mse_curve(&bm(), &grid, &h, 100_000, 42).unwrap();
    assert!(summary.certified);
    for row in &summary.rows {
        let oracle = bm_linear_mse_oracle(1.0, row.n);
        let tol = (3.0 * row.std_error).max(0.05 * oracle);
        assert!((row.mse - oracle).abs() <= tol, "n = {}: {} vs {oracle}", row.n, row.mse);
        let coupled = bm_linear_coupled_oracle(1.0, row.n, 1 << 13).unwrap();
        assert!((row.mse - coupled).abs() <= 4.0 * row.std_error, "n = {}: {} vs {coupled}", row.n, row.mse);
    }
}

#[test]
fn reference_integral_variance() {
    let grid = GridSpec::new(1.0, 1 << 7, vec![2]).unwrap();
    let h = HolderFunction::linear(1.0, 0.0).unwrap();
    let m = 100_000u64;
    let (s, s2, s4) = PathBatch::new(&bm(), &grid, 77, m)
        .fold(
            || (0.0f64, 0.0f64, 0.0f64),
            |acc, _, p| {
                let i = reference_integral(p, &grid, &h)?;
                acc.0 += i;
                acc.1 += i * i;
                acc.2 += i.powi(4);
                Ok(())
            },
            |a, b| (a.0 + b.0, a.1 + b.1, a.2 + b.2),
        )
        .unwrap();
    let mf = m as f64;
    let var = s2 / mf - (s / mf).powi(2);
    let se = ((s4 / mf - (s2 / mf).powi(2)) / mf).sqrt();
    // the fine sum itself has variance (1/3)(1 - 3/(2·128) + 1/(2·128²)), within 1% of 1/3
    let exact = bm_linear_coupled_oracle(1.0, 1, 128).unwrap();
    assert!((var - exact).abs() < 3.0 * se, "{var} vs {exact} ± {se}");
    assert!((var - 1.0 / 3.0).abs() < 3.0 * se + 0.01 / 3.0);
}

#[test]
fn constant_h_gives_exact_zeros() {
    let grid = GridSpec::new(1.0, 1 << 12, vec![2, 8, 64]).unwrap();
    let h = HolderFunction::constant(3.7).unwrap();
    for model in [bm(), ProcessModel::stable(1.5, 1.0, 0.0).unwrap()] {
        let s = mse_curve(&model, &grid, &h, 200, 1).unwrap();
        assert!(s.rows.iter().all(|r| r.mse == 0.0 && r.std_error == 0.0));
        let path = simulate_path(&model, &grid, 2, 2).unwrap();
        assert!(coupled_errors(&path, &grid, &h).unwrap().iter().all(|e| *e == 0.0));
        assert_eq!(reference_integral(&path, &grid, &h).unwrap(), 3.7);
    }
}

#[test]
fn finest_grid_error_is_zero() {
    let grid = GridSpec::with_min_ratio(1.0, 1 << 8, vec![1 << 8], 1).unwrap();
    let h = HolderFunction::power_abs(0.5, 0.0).unwrap();
    let s = mse_curve(&bm(), &grid, &h, 100, 3).unwrap();
    assert_eq!(s.rows[0].mse, 0.0);
    let grid = GridSpec::with_min_ratio(1.0, 1 << 8, vec![4, 1 << 8], 1).unwrap();
    let path = simulate_path(&ProcessModel::stable(1.5, 1.0, 0.0).unwrap(), &grid, 9, 9).unwrap();
    assert_eq!(coupled_errors(&path, &grid, &h).unwrap()[1], 0.0);
}

#[test]
fn curve_is_independent_of_worker_count() {
    let model = ProcessModel::stable(1.5, 1.0, 0.0).unwrap();
    let grid = GridSpec::new(1.0, 1 << 10, vec![4, 8, 16]).unwrap();
    let h = HolderFunction::power_abs(0.5, 0.0).unwrap();
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| mse_curve(&model, &grid, &h, 3000, 8).unwrap())
    };
    let one = run(1);
    assert_eq!(one, run(8));
    assert_eq!(one.to_csv_string().unwrap(), run(5).to_csv_string().unwrap());
}

#[test]
fn exponent_and_size_checks() {
    let grid = GridSpec::new(1.0, 1 << 9, vec![8]).unwrap();
    let stable = ProcessModel::stable(1.5, 1.0, 0.0).unwrap();
    let h = HolderFunction::power_abs(0.9, 0.0).unwrap();
    assert!(matches!(mse_curve(&stable, &grid, &h, 100, 0), Err(Error::GammaTooLarge { .. })));
    let boundary = HolderFunction::power_abs(0.75, 0.0).unwrap();
    assert!(matches!(mse_curve(&stable, &grid, &boundary, 100, 0), Err(Error::GammaTooLarge { .. })));
}

#[test]
fn euler_curves_are_uncertified() {
    let model = ProcessModel::euler(Coefficient::Affine { slope: -1.0, offset: 0.0 }, Coefficient::Constant(1.0), 0.0)
        .unwrap();
    let grid = GridSpec::new(1.0, 1 << 9, vec![4, 8]).unwrap();
    let h = HolderFunction::power_abs(0.5, 0.0).unwrap();
    let s = mse_curve(&model, &grid, &h, 200, 0).unwrap();
    assert!(!s.certified);
    assert!(s.rows.iter().all(|r| !r.certified && r.mse > 0.0));
}

#[test]
fn moment_diagnostic_brownian() {
    let cert = certificate_for(&bm(), 1.0).unwrap();
    let cert = cert.certificate().unwrap();
    let deltas: Vec<f64> = (2..=8).map(|k| 2f64.powi(-k)).collect();
    let half = moment_diagnostic(&bm(), cert, 0.5, &deltas, 200_000, 5).unwrap();
    let e_abs_z = (2.0 / std::f64::consts::PI).sqrt();
    for r in &half.rows {
        assert!((r.ratio - e_abs_z).abs() < 4.0 * r.std_error, "{r:?}");
        assert_eq!(r.bound, cert.c_t() * q_moment(cert, 0.5).unwrap());
    }
    assert!(half.is_constant(3.0) && half.all_within_bound());
    let one = moment_diagnostic(&bm(), cert, 1.0, &deltas, 200_000, 6).unwrap();
    assert!(one.rows.iter().all(|r| (r.ratio - 1.0).abs() < 4.0 * r.std_error));
}

#[test]
fn moment_diagnostic_stable_is_self_similar() {
    let model = ProcessModel::stable(1.5, 1.0, 0.0).unwrap();
    let cert = certificate_for(&model, 1.0).unwrap();
    let cert = cert.certificate().unwrap();
    let deltas: Vec<f64> = (2..=8).map(|k| 2f64.powi(-k)).collect();
    let diag = moment_diagnostic(&model, cert, 0.5, &deltas, 200_000, 9).unwrap();
    assert!(diag.is_constant(3.0), "{:?}", diag.rows);
    assert!(diag.all_within_bound());
    assert!(matches!(moment_diagnostic(&model, cert, 0.75, &deltas, 100, 0), Err(Error::InfiniteMoment { .. })));
    assert!(moment_diagnostic(&model, cert, 0.5, &[2.0], 100, 0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn scaling_h_scales_errors(seed in 0u64..1000, index in 0u64..1000, lambda in -8.0f64..8.0, pow2 in -3i32..4) {
        let grid = GridSpec::new(1.0, 1 << 9, vec![2, 4, 8]).unwrap();
        let model = ProcessModel::stable(1.5, 1.0, 0.0).unwrap();
        let h = HolderFunction::power_abs(0.5, 0.3).unwrap();
        let path = simulate_path(&model, &grid, seed, index).unwrap();
        let base = coupled_errors(&path, &grid, &h).unwrap();
        // powers of two scale every float operation exactly
        let exact = 2f64.powi(pow2);
        let scaled = coupled_errors(&path, &grid, &h.scaled(exact)).unwrap();
        for (b, s) in base.iter().zip(&scaled) {
            prop_assert_eq!(*s * *s, exact * exact * b * b);
        }
        let scaled = coupled_errors(&path, &grid, &h.scaled(lambda)).unwrap();
        for (b, s) in base.iter().zip(&scaled) {
            prop_assert!((s * s - lambda * lambda * b * b).abs() <= 1e-12 * (1.0 + lambda * lambda * b * b));
        }
    }

    #[test]
    fn shifting_start_and_center_together(seed in 0u64..1000, shift in -4.0f64..4.0) {
        let grid = GridSpec::new(1.0, 1 << 9, vec![2, 8]).unwrap();
        let h = HolderFunction::power_abs(0.5, 0.25).unwrap();
        let a = simulate_path(&bm(), &grid, seed, 0).unwrap();
        let shifted = ProcessModel::brownian(1.0, vec![shift]).unwrap();
        let b = simulate_path(&shifted, &grid, seed, 0).unwrap();
        let ea = coupled_errors(&a, &grid, &h).unwrap();
        let eb = coupled_errors(&b, &grid, &h.translated(shift)).unwrap();
        for (x, y) in ea.iter().zip(&eb) {
            prop_assert!((x - y).abs() < 1e-9, "{} vs {}", x, y);
        }
    }
}

#[test]
fn scaling_multiplies_mse_by_lambda_squared() {
    let grid = GridSpec::new(1.0, 1 << 9, vec![2, 4, 8]).unwrap();
    let h = HolderFunction::sine(2.0, 0.5).unwrap();
    let base = mse_curve(&bm(), &grid, &h, 500, 4).unwrap();
    let scaled = mse_curve(&bm(), &grid, &h.scaled(4.0), 500, 4).unwrap();
    for (a, b) in base.rows.iter().zip(&scaled.rows) {
        assert_eq!(b.mse, 16.0 * a.mse);
        assert_eq!(b.std_error, 16.0 * a.std_error);
    }
}
