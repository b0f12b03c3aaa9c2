use funcrate_core::simulate::{path_rng, sample_increment, simulate_path, subsample, GridSpec, Path, PathBatch};
use funcrate_core::{ProcessModel, ProcessModelF64};
use proptest::prelude::*;

fn draws(model: &ProcessModelF64, dt: f64, count: usize, seed: u64) -> Vec<f64> {
    let mut rng = path_rng(seed, 0);
    (0..count).map(|_| sample_increment(model, dt, &mut rng).unwrap()[0]).collect()
}

fn quantile(mut v: Vec<f64>, p: f64) -> f64 {
    v.sort_by(f64::total_cmp);
    let idx = ((v.len() - 1) as f64 * p).round() as usize;
    v[idx]
}

#[test]
fn brownian_increment_mean_variance_kurtosis() {
    let model = ProcessModel::brownian(1.0, vec![0.0]).unwrap();
    let x = draws(&model, 1.0, 1_000_000, 11);
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let m2 = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let m4 = x.iter().map(|v| (v - mean).powi(4)).sum::<f64>() / n;
    assert!(mean.abs() < 4e-3, "mean {mean}");
    assert!((m2 - 1.0).abs() < 1e-2, "variance {m2}");
    assert!((m4 / (m2 * m2) - 3.0).abs() < 0.05, "kurtosis {}", m4 / (m2 * m2));
}

#[test]
fn brownian_increment_variance_scales_with_dt_and_sigma() {
    let model = ProcessModel::brownian(2.0, vec![0.0]).unwrap();
    let x = draws(&model, 0.25, 200_000, 12);
    let var = x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64;
    // σ² dt = 1, standard error sqrt(2 / 2e5)
    assert!((var - 1.0).abs() < 4.0 * (2.0f64 / 2e5).sqrt(), "variance {var}");
}

#[test]
fn cauchy_increment_median() {
    let model = ProcessModel::stable(1.0, 1.0, 0.0).unwrap();
    let median = quantile(draws(&model, 1.0, 1_000_000, 13), 0.5);
    assert!(median.abs() < 5e-3, "median {median}");
    // the quartiles of the standard Cauchy law are ±1
    let q75 = quantile(draws(&model, 1.0, 1_000_000, 14), 0.75);
    assert!((q75 - 1.0).abs() < 1e-2, "upper quartile {q75}");
}

#[test]
fn stable_quantiles_scale_with_dt() {
    let model = ProcessModel::stable(1.5, 1.0, 0.0).unwrap();
    let base = quantile(draws(&model, 1.0, 1_000_000, 100), 0.75);
    for k in 1..=5 {
        let dt = 2f64.powi(-k);
        let q = quantile(draws(&model, dt, 1_000_000, 100 + k as u64), 0.75);
        let ratio = q / (base * dt.powf(1.0 / 1.5));
        assert!((ratio - 1.0).abs() < 0.02, "k = {k}: ratio {ratio}");
    }
}

#[test]
fn brownian_terminal_variance() {
    let model = ProcessModel::brownian(1.0, vec![0.0]).unwrap();
    let grid = GridSpec::new(1.0, 64, vec![1]).unwrap();
    let m = 100_000u64;
    let (s, s2) = PathBatch::new(&model, &grid, 2024, m)
        .fold(
            || (0.0f64, 0.0f64),
            |acc, _, p| {
                let x = p.point(64)[0];
                acc.0 += x * x;
                acc.1 += x.powi(4);
                Ok(())
            },
            |a, b| (a.0 + b.0, a.1 + b.1),
        )
        .unwrap();
    let var = s / m as f64;
    let se = ((s2 / m as f64 - var * var) / m as f64).sqrt();
    assert!((var - 1.0).abs() < 3.0 * se, "Var(X_T) = {var} ± {se}");
}

#[test]
fn paths_do_not_depend_on_worker_count() {
    let model = ProcessModel::stable(1.5, 1.0, 0.0).unwrap();
    let grid = GridSpec::new(1.0, 1 << 8, vec![4]).unwrap();
    let batch = PathBatch::new(&model, &grid, 5, 1500);
    let collect = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            batch.fold(
                Vec::new,
                |acc, i, p| {
                    acc.push((i, p.values().to_vec()));
                    Ok(())
                },
                |mut a, b| {
                    a.extend(b);
                    a
                },
            )
        })
        .unwrap()
    };
    let one = collect(1);
    assert_eq!(one, collect(8));
    assert_eq!(one, collect(3));
    for (i, values) in one.iter().take(20) {
        assert_eq!(values, simulate_path(&model, &grid, 5, *i).unwrap().values());
    }
}

#[test]
fn every_path_starts_at_x0() {
    let model = ProcessModel::brownian(0.5, vec![3.0, -1.0]).unwrap();
    let grid = GridSpec::new(2.0, 1 << 7, vec![2]).unwrap();
    PathBatch::new(&model, &grid, 1, 300)
        .for_each(|_, p| {
            assert_eq!(p.point(0), &[3.0, -1.0]);
            assert_eq!(p.len(), 129);
            Ok(())
        })
        .unwrap();
}

proptest! {
    #[test]
    fn subsampling_nests(e_ref in 0u32..9, a in 0u32..9, b in 0u32..9, values in prop::collection::vec(-1e6f64..1e6, 257)) {
        let (e1, e2) = (a.min(b).min(e_ref), a.max(b).min(e_ref));
        let (n_ref, n1, n2) = (1usize << e_ref, 1usize << e1, 1usize << e2);
        let grid = GridSpec::with_min_ratio(1.0, n_ref, vec![n1, n2], 1).unwrap();
        let path = Path::from_scalars(values[..=n_ref].to_vec());
        let direct = subsample(&path, &grid, n1).unwrap();
        let mid = subsample(&path, &grid, n2).unwrap();
        let grid2 = GridSpec::with_min_ratio(1.0, n2, vec![n1], 1).unwrap();
        prop_assert_eq!(subsample(&mid, &grid2, n1).unwrap(), direct);
    }

    #[test]
    fn subsample_picks_strided_points(e_ref in 0u32..8, e in 0u32..8) {
        let n_ref = 1usize << e_ref;
        let n = 1usize << e.min(e_ref);
        let grid = GridSpec::with_min_ratio(1.0, n_ref, vec![n], 1).unwrap();
        let path = Path::from_scalars((0..=n_ref).map(|k| k as f64).collect());
        let s = subsample(&path, &grid, n).unwrap();
        let stride = (n_ref / n) as f64;
        prop_assert!(s.values().iter().enumerate().all(|(k, v)| *v == k as f64 * stride));
    }
}
