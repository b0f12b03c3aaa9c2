//! Riemann sums, coupled Monte Carlo error curves and the increment-moment diagnostic.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::funcs::HolderFunction;
use crate::model::{certificate_for, q_moment, DensityBoundCertificate, ProcessModel};
use crate::simulate::{derive_seed, path_rng, sample_increment, GridSpec, Path, PathBatch};
use crate::sum::NeumaierSum;
use crate::Scalar;

/// Smallest path count accepted by [`mse_curve`].
pub const MIN_PATHS: u64 = 100;

/// `I_{T,n}(h) = (T/n) Σ_{k<n} h(X_{kT/n})` for a path holding `n + 1` points.
pub fn riemann_sum<S: Scalar>(path: &Path<S>, horizon: S, n: usize, h: &HolderFunction<S>) -> Result<S> {
    if n == 0 || path.len() != n + 1 {
        return Err(invalid(format!("a sum with n = {n} needs {} path points, got {}", n + 1, path.len())));
    }
    if h.is_constant() {
        return Ok(horizon * h.evaluate(path.point(0)));
    }
    let mut sum = NeumaierSum::new();
    for k in 0..n {
        sum.push(h.evaluate(path.point(k)));
    }
    Ok(horizon / S::of_usize(n) * sum.value())
}

/// Fine-grid proxy for `∫_0^T h(X_t) dt`: the Riemann sum at `n_ref`.
pub fn reference_integral<S: Scalar>(path: &Path<S>, grid: &GridSpec<S>, h: &HolderFunction<S>) -> Result<S> {
    riemann_sum(path, grid.horizon(), grid.n_ref(), h)
}

/// Scratch space for one-pass evaluation of all coarse sums on a fine path.
struct CoupledSums<S> {
    h_values: Vec<S>,
    strides: Vec<usize>,
}

impl<S: Scalar> CoupledSums<S> {
    fn new(grid: &GridSpec<S>) -> Self {
        let strides = grid.eval_ns().iter().map(|&n| grid.n_ref() / n).collect();
        Self { h_values: Vec::with_capacity(grid.n_ref()), strides }
    }

    /// Writes `I_T^{ref} - I_{T,n}` for each `n` of the grid into `out`.
    fn errors(&mut self, path: &Path<S>, grid: &GridSpec<S>, h: &HolderFunction<S>, out: &mut [S]) -> Result<()> {
        if path.len() != grid.n_ref() + 1 {
            return Err(invalid(format!("path has {} points, grid needs {}", path.len(), grid.n_ref() + 1)));
        }
        if h.is_constant() {
            out.fill(S::zero());
            return Ok(());
        }
        self.h_values.clear();
        self.h_values.extend((0..grid.n_ref()).map(|k| h.evaluate(path.point(k))));
        let t = grid.horizon();
        let strided = |stride: usize| {
            let mut s = NeumaierSum::new();
            for v in self.h_values.iter().step_by(stride) {
                s.push(*v);
            }
            t / S::of_usize(self.h_values.len() / stride) * s.value()
        };
        let reference = strided(1);
        for (e, &stride) in out.iter_mut().zip(&self.strides) {
            *e = reference - strided(stride);
        }
        Ok(())
    }
}

/// Signed coupled errors `I_T^{ref} - I_{T,n}` on one fine path, one per `n` in `grid.eval_ns()`.
pub fn coupled_errors<S: Scalar>(path: &Path<S>, grid: &GridSpec<S>, h: &HolderFunction<S>) -> Result<Vec<S>> {
    let mut out = vec![S::zero(); grid.eval_ns().len()];
    CoupledSums::new(grid).errors(path, grid, h, &mut out)?;
    Ok(out)
}

/// One row of an [`ErrorSummary`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorRow<S> {
    pub n: usize,
    pub mse: S,
    pub std_error: S,
    #[serde(rename = "M")]
    pub paths: u64,
    pub bound: Option<S>,
    pub certified: bool,
}

/// Experiment description carried alongside the error rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryMetadata<S> {
    pub model: String,
    pub h: String,
    pub gamma: S,
    pub alpha: S,
    pub holder_norm: S,
    #[serde(rename = "T")]
    pub horizon: S,
    pub n_ref: usize,
    pub master_seed: u64,
}

/// Monte Carlo estimate of `E|I_T(h) - I_{T,n}(h)|²` for every `n`, rows sorted by `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorSummary<S> {
    pub metadata: SummaryMetadata<S>,
    pub certified: bool,
    pub rows: Vec<ErrorRow<S>>,
}

pub const CSV_HEADER: [&str; 6] = ["n", "mse", "std_error", "M", "bound", "certified"];

impl<S: Scalar> ErrorSummary<S> {
    pub fn row(&self, n: usize) -> Option<&ErrorRow<S>> {
        self.rows.iter().find(|r| r.n == n)
    }

    /// CSV with columns `n,mse,std_error,M,bound,certified`; an absent bound is an empty field.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(CSV_HEADER)?;
        for r in &self.rows {
            w.write_record([
                r.n.to_string(),
                r.mse.to_string(),
                r.std_error.to_string(),
                r.paths.to_string(),
                r.bound.map(|b| b.to_string()).unwrap_or_default(),
                r.certified.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }

    /// True when every row has `mse ≤ bound + k · std_error`; rows without a bound fail.
    pub fn bound_holds(&self, k: S) -> bool {
        self.rows.iter().all(|r| r.bound.is_some_and(|b| r.mse <= b + k * r.std_error))
    }
}

/// Rejects pairings outside `γ ≤ α/2`; equality is allowed only for `α = 2`.
///
/// Constant functions have zero norm for every exponent and are always accepted.
pub fn check_exponent<S: Scalar>(h: &HolderFunction<S>, alpha: S) -> Result<()> {
    let (gamma, two) = (h.gamma(), S::of(2.0));
    let too_large = two * gamma > alpha || (two * gamma == alpha && alpha < two);
    if too_large && !h.is_constant() {
        return Err(Error::GammaTooLarge { gamma: gamma.as_f64(), alpha: alpha.as_f64() });
    }
    Ok(())
}

#[derive(Clone)]
struct SquaredErrorAcc<S> {
    sum: Vec<NeumaierSum<S>>,
    sum_sq: Vec<NeumaierSum<S>>,
}

impl<S: Scalar> SquaredErrorAcc<S> {
    fn new(len: usize) -> Self {
        Self { sum: vec![NeumaierSum::new(); len], sum_sq: vec![NeumaierSum::new(); len] }
    }

    fn merge(mut self, other: Self) -> Self {
        for (a, b) in self.sum.iter_mut().zip(other.sum) {
            *a += b;
        }
        for (a, b) in self.sum_sq.iter_mut().zip(other.sum_sq) {
            *a += b;
        }
        self
    }
}

/// Sample mean and standard error of the mean from compensated first and second sums.
fn mean_and_se<S: Scalar>(sum: S, sum_sq: S, count: u64) -> (S, S) {
    let m = S::of(count as f64);
    let mean = sum / m;
    let var = ((sum_sq - m * mean * mean) / (m - S::one())).max(S::zero());
    (mean, (var / m).sqrt())
}

/// Coupled Monte Carlo error curve.
///
/// Each path is simulated once on the fine grid; the reference sum and every
/// coarse sum come from that same path, so `e_n = (I^{ref} - I_{T,n})²` is
/// exactly zero at `n = n_ref`. The result does not depend on the size of the
/// rayon pool it runs in.
pub fn mse_curve<S: Scalar>(
    model: &ProcessModel<S>,
    grid: &GridSpec<S>,
    h: &HolderFunction<S>,
    paths: u64,
    master_seed: u64,
) -> Result<ErrorSummary<S>> {
    check_exponent(h, model.alpha())?;
    if paths < MIN_PATHS {
        return Err(invalid(format!("at least {MIN_PATHS} paths are required, got {paths}")));
    }
    let certified = model.exact_law() && certificate_for(model, grid.horizon())?.certificate().is_some();
    let k = grid.eval_ns().len();
    let batch = PathBatch::new(model, grid, master_seed, paths);
    let acc = batch.fold(
        || (SquaredErrorAcc::new(k), CoupledSums::new(grid), vec![S::zero(); k]),
        |(acc, sums, errs), _, path| {
            sums.errors(path, grid, h, errs)?;
            for (j, e) in errs.iter().enumerate() {
                let sq = *e * *e;
                acc.sum[j].push(sq);
                acc.sum_sq[j].push(sq * sq);
            }
            Ok(())
        },
        |(a, sums, errs), (b, _, _)| (a.merge(b), sums, errs),
    )?;
    let acc = acc.0;
    let rows = grid
        .eval_ns()
        .iter()
        .enumerate()
        .map(|(j, &n)| {
            let (mse, std_error) = mean_and_se(acc.sum[j].value(), acc.sum_sq[j].value(), paths);
            ErrorRow { n, mse, std_error, paths, bound: None, certified }
        })
        .collect();
    Ok(ErrorSummary {
        metadata: SummaryMetadata {
            model: model.to_string(),
            h: h.to_string(),
            gamma: h.gamma(),
            alpha: model.alpha(),
            holder_norm: h.holder_norm(),
            horizon: grid.horizon(),
            n_ref: grid.n_ref(),
            master_seed,
        },
        certified,
        rows,
    })
}

/// One time step of the moment diagnostic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentRow<S> {
    pub delta: S,
    /// Monte Carlo mean of `|X_Δ - x0|^{2γ} / Δ^{2γ/α}`.
    pub ratio: S,
    pub std_error: S,
    /// `C_T · ∫|z|^{2γ} Q(z) dz`.
    pub bound: S,
    pub within_bound: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentDiagnostic<S> {
    pub gamma: S,
    pub alpha: S,
    pub c_t: S,
    pub q_moment: S,
    pub samples: u64,
    pub master_seed: u64,
    pub rows: Vec<MomentRow<S>>,
}

impl<S: Scalar> MomentDiagnostic<S> {
    /// Inverse-variance weighted mean of the ratios; the plain mean if any standard error is zero.
    pub fn common_ratio(&self) -> S {
        if self.rows.iter().any(|r| r.std_error <= S::zero()) {
            let n = S::of(self.rows.len() as f64);
            return self.rows.iter().map(|r| r.ratio).sum::<S>() / n;
        }
        let (num, den) = self.rows.iter().fold((S::zero(), S::zero()), |(num, den), r| {
            let w = (r.std_error * r.std_error).recip();
            (num + w * r.ratio, den + w)
        });
        num / den
    }

    /// Every ratio lies within `k` of its own standard errors of the common ratio.
    pub fn is_constant(&self, k: S) -> bool {
        let m = self.common_ratio();
        self.rows.iter().all(|r| (r.ratio - m).abs() <= k * r.std_error)
    }

    pub fn all_within_bound(&self) -> bool {
        self.rows.iter().all(|r| r.within_bound)
    }
}

/// Increments per random stream in the moment diagnostic.
const INCREMENTS_PER_STREAM: u64 = 4096;

/// Checks `E_x|X_Δ - x|^{2γ} ≤ C_T Δ^{2γ/α} ∫|z|^{2γ} Q(z) dz` by direct sampling
/// of `samples` exact-law increments per `Δ`, each `Δ` on its own derived seed.
///
/// A row is within bound when its ratio does not exceed the bound by more than
/// three standard errors.
pub fn moment_diagnostic<S: Scalar>(
    model: &ProcessModel<S>,
    cert: &DensityBoundCertificate<S>,
    gamma: S,
    deltas: &[S],
    samples: u64,
    master_seed: u64,
) -> Result<MomentDiagnostic<S>> {
    if !(gamma > S::zero()) {
        return Err(invalid(format!("gamma must be positive, got {gamma}")));
    }
    if samples < 2 {
        return Err(invalid("at least two samples are required"));
    }
    let q = q_moment(cert, gamma)?;
    let bound = cert.c_t() * q;
    let p = S::of(2.0) * gamma;
    let alpha = model.alpha();
    let streams = samples.div_ceil(INCREMENTS_PER_STREAM);
    let mut rows = Vec::with_capacity(deltas.len());
    for (j, &delta) in deltas.iter().enumerate() {
        if !(delta > S::zero()) || delta > cert.horizon() {
            return Err(invalid(format!("delta must lie in (0, T = {}], got {delta}", cert.horizon())));
        }
        let seed = derive_seed(master_seed, j as u64);
        let partials: Vec<(NeumaierSum<S>, NeumaierSum<S>)> = (0..streams)
            .into_par_iter()
            .map(|s| {
                let mut rng = path_rng(seed, s);
                let (mut sum, mut sum_sq) = (NeumaierSum::new(), NeumaierSum::new());
                let end = ((s + 1) * INCREMENTS_PER_STREAM).min(samples);
                for _ in s * INCREMENTS_PER_STREAM..end {
                    let inc = sample_increment(model, delta, &mut rng)?;
                    let norm = inc.iter().map(|v| *v * *v).sum::<S>().sqrt();
                    let v = norm.powf(p);
                    sum.push(v);
                    sum_sq.push(v * v);
                }
                Ok((sum, sum_sq))
            })
            .collect::<Result<_>>()?;
        let (sum, sum_sq) = partials
            .into_iter()
            .fold((NeumaierSum::new(), NeumaierSum::new()), |(a, b), (c, d)| (a + c, b + d));
        let (mean, se) = mean_and_se(sum.value(), sum_sq.value(), samples);
        let scale = delta.powf(p / alpha);
        let (ratio, std_error) = (mean / scale, se / scale);
        rows.push(MomentRow { delta, ratio, std_error, bound, within_bound: ratio <= bound + S::of(3.0) * std_error });
    }
    Ok(MomentDiagnostic { gamma, alpha, c_t: cert.c_t(), q_moment: q, samples, master_seed, rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constancy_uses_weighted_common_ratio() {
        let row = |ratio: f64, std_error: f64| MomentRow { delta: 0.1, ratio, std_error, bound: 2.0, within_bound: true };
        let mut diag = MomentDiagnostic {
            gamma: 0.5,
            alpha: 2.0,
            c_t: 1.0,
            q_moment: 1.0,
            samples: 100,
            master_seed: 0,
            rows: vec![row(1.0, 0.1), row(1.2, 0.1), row(1.1, 0.2)],
        };
        assert!((diag.common_ratio() - 1.1).abs() < 1e-12);
        assert!(diag.is_constant(1.01));
        assert!(!diag.is_constant(0.99));
        diag.rows.push(row(0.5, 0.0));
        assert!((diag.common_ratio() - 0.95).abs() < 1e-12);
    }

    #[test]
    fn riemann_sum_examples() {
        let c = HolderFunction::constant(0.1).unwrap();
        let p = Path::from_scalars(vec![5.0, -2.0, 8.0, 1.0]);
        assert_eq!(riemann_sum(&p, 3.0, 3, &c).unwrap(), 3.0 * 0.1);
        let lin = HolderFunction::linear(1.0, 0.0).unwrap();
        assert_eq!(riemann_sum(&Path::from_scalars(vec![1.0, 3.0, 5.0]), 1.0, 2, &lin).unwrap(), 2.0);
        let root = HolderFunction::power_abs(0.5, 0.0).unwrap();
        assert_eq!(riemann_sum(&Path::from_scalars(vec![0.0, 4.0, 9.0]), 2.0, 2, &root).unwrap(), 2.0);
        assert!(riemann_sum(&p, 1.0, 2, &lin).is_err());
    }

    #[test]
    fn reference_is_the_finest_sum() {
        let model = ProcessModel::brownian(1.0, vec![0.0]).unwrap();
        let grid = GridSpec::new(1.0, 1 << 9, vec![8]).unwrap();
        let h = HolderFunction::power_abs(0.5, 0.2).unwrap();
        let path = crate::simulate::simulate_path(&model, &grid, 4, 0).unwrap();
        assert_eq!(reference_integral(&path, &grid, &h).unwrap(), riemann_sum(&path, 1.0, 1 << 9, &h).unwrap());
        let constant_path = Path::from_scalars(vec![2.0; (1 << 9) + 1]);
        assert_eq!(reference_integral(&constant_path, &grid, &h).unwrap(), 1.8f64.sqrt());
    }

    #[test]
    fn coupled_errors_match_direct_sums() {
        let model = ProcessModel::stable(1.5, 1.0, 0.0).unwrap();
        let grid = GridSpec::new(2.0, 1 << 10, vec![4, 16]).unwrap();
        let h = HolderFunction::sine(3.0, 1.0).unwrap();
        let path = crate::simulate::simulate_path(&model, &grid, 8, 2).unwrap();
        let errs = coupled_errors(&path, &grid, &h).unwrap();
        let reference = reference_integral(&path, &grid, &h).unwrap();
        for (e, &n) in errs.iter().zip(grid.eval_ns()) {
            let coarse = crate::simulate::subsample(&path, &grid, n).unwrap();
            assert_eq!(*e, reference - riemann_sum(&coarse, 2.0, n, &h).unwrap());
        }
    }

    #[test]
    fn exponent_rules() {
        let root = HolderFunction::power_abs(0.5, 0.0).unwrap();
        assert!(check_exponent(&root, 2.0).is_ok());
        assert!(check_exponent(&root, 1.5).is_ok());
        assert!(check_exponent(&root, 1.0).is_err());
        let lin = HolderFunction::linear(1.0, 0.0).unwrap();
        assert!(check_exponent(&lin, 2.0).is_ok());
        let boundary = HolderFunction::power_abs(0.75, 0.0).unwrap();
        assert!(matches!(check_exponent(&boundary, 1.5), Err(Error::GammaTooLarge { .. })));
        assert!(check_exponent(&HolderFunction::constant(1.0).unwrap(), 1.5).is_ok());
    }

    #[test]
    fn rejects_small_batches() {
        let model = ProcessModel::brownian(1.0, vec![0.0]).unwrap();
        let grid = GridSpec::new(1.0, 1 << 9, vec![8]).unwrap();
        let h = HolderFunction::linear(1.0, 0.0).unwrap();
        assert!(mse_curve(&model, &grid, &h, 99, 0).is_err());
    }

    #[test]
    fn csv_layout() {
        let summary = ErrorSummary {
            metadata: SummaryMetadata {
                model: "m".into(),
                h: "h".into(),
                gamma: 1.0,
                alpha: 2.0,
                holder_norm: 1.0,
                horizon: 1.0,
                n_ref: 64,
                master_seed: 0,
            },
            certified: true,
            rows: vec![
                ErrorRow { n: 1, mse: 0.25, std_error: 0.5, paths: 100, bound: Some(2.0), certified: true },
                ErrorRow { n: 2, mse: 0.0625, std_error: 0.125, paths: 100, bound: None, certified: true },
            ],
        };
        assert_eq!(
            summary.to_csv_string().unwrap(),
            "n,mse,std_error,M,bound,certified\n1,0.25,0.5,100,2,true\n2,0.0625,0.125,100,,true\n"
        );
        assert!(!summary.bound_holds(3.0));
    }

    #[test]
    fn mean_and_standard_error() {
        let (m, se) = mean_and_se(6.0f64, 14.0, 3);
        assert_eq!(m, 2.0);
        assert!((se - (1.0f64 / 3.0).sqrt()).abs() < 1e-15);
    }
}
