//! Monte Carlo path generation on a fine equidistant grid.

mod dump;
mod rng;

use rayon::prelude::*;

pub use dump::{read_path_dump, write_path_dump, DumpHeader, DUMP_MAGIC, DUMP_VERSION};
pub use rng::{derive_seed, path_rng, PathRng};

use crate::error::{invalid, Error, Result};
use crate::model::{Coefficient, ModelKind, ProcessModel};
use crate::Scalar;
use rand::Rng;

/// Required ratio `n_ref / max(eval_ns)` for a well-separated reference grid.
pub const MIN_REFERENCE_RATIO: usize = 64;

/// Paths per unit of parallel work; fixed so reductions do not depend on the worker count.
pub const CHUNK_PATHS: u64 = 256;

/// Nested time grids on `[0, T]`: the fine grid `kT/n_ref` and coarse grids `kT/n`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec<S> {
    horizon: S,
    n_ref: usize,
    eval_ns: Vec<usize>,
}

impl<S: Scalar> GridSpec<S> {
    /// Validated grid with `n_ref >= 64 · max(eval_ns)`.
    pub fn new(horizon: S, n_ref: usize, eval_ns: Vec<usize>) -> Result<Self> {
        Self::with_min_ratio(horizon, n_ref, eval_ns, MIN_REFERENCE_RATIO)
    }

    /// Same as [`GridSpec::new`] with a caller-chosen reference ratio (1 disables the check).
    pub fn with_min_ratio(horizon: S, n_ref: usize, mut eval_ns: Vec<usize>, min_ratio: usize) -> Result<Self> {
        if !(horizon > S::zero()) || !horizon.is_finite() {
            return Err(invalid(format!("horizon T must be positive, got {horizon}")));
        }
        if n_ref == 0 || !n_ref.is_power_of_two() {
            return Err(invalid(format!("n_ref must be a power of two, got {n_ref}")));
        }
        eval_ns.sort_unstable();
        eval_ns.dedup();
        if eval_ns.is_empty() || eval_ns[0] == 0 {
            return Err(invalid("eval_ns must be a non-empty list of positive integers"));
        }
        if let Some(&n) = eval_ns.iter().find(|&&n| n_ref % n != 0) {
            return Err(Error::NotNested { n, n_ref });
        }
        let largest = *eval_ns.last().unwrap();
        if largest.saturating_mul(min_ratio) > n_ref {
            return Err(invalid(format!(
                "n_ref = {n_ref} must be at least {min_ratio} x max(eval_ns) = {}",
                largest.saturating_mul(min_ratio)
            )));
        }
        Ok(Self { horizon, n_ref, eval_ns })
    }

    pub fn horizon(&self) -> S {
        self.horizon
    }

    pub fn n_ref(&self) -> usize {
        self.n_ref
    }

    pub fn eval_ns(&self) -> &[usize] {
        &self.eval_ns
    }

    pub fn dt(&self) -> S {
        self.horizon / S::of_usize(self.n_ref)
    }

    /// `t_k = kT / n_ref`.
    pub fn time(&self, k: usize) -> S {
        self.horizon * S::of_usize(k) / S::of_usize(self.n_ref)
    }

    /// Fine-grid index stride of the coarse grid with `n` steps.
    pub fn stride(&self, n: usize) -> Result<usize> {
        if n == 0 || self.n_ref % n != 0 {
            return Err(Error::NotNested { n, n_ref: self.n_ref });
        }
        Ok(self.n_ref / n)
    }
}

/// A sampled path: `len()` points in `R^dim`, stored contiguously.
#[derive(Debug, Clone, PartialEq)]
pub struct Path<S> {
    dim: usize,
    values: Vec<S>,
    exact_law: bool,
}

impl<S: Scalar> Path<S> {
    pub fn new(dim: usize, values: Vec<S>, exact_law: bool) -> Result<Self> {
        if dim == 0 || values.len() % dim != 0 {
            return Err(invalid("path storage is not a whole number of points"));
        }
        Ok(Self { dim, values, exact_law })
    }

    /// One-dimensional path from its values.
    pub fn from_scalars(values: Vec<S>) -> Self {
        Self { dim: 1, values, exact_law: true }
    }

    fn zeros(dim: usize, points: usize) -> Self {
        Self { dim, values: vec![S::zero(); dim * points], exact_law: true }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of points.
    pub fn len(&self) -> usize {
        self.values.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[inline]
    pub fn point(&self, k: usize) -> &[S] {
        &self.values[k * self.dim..(k + 1) * self.dim]
    }

    pub fn values(&self) -> &[S] {
        &self.values
    }

    /// False for Euler-scheme paths, whose law only approximates the diffusion.
    pub fn exact_law(&self) -> bool {
        self.exact_law
    }
}

/// Standard symmetric α-stable variate (characteristic function `exp(-|ξ|^α)`)
/// by the Chambers–Mallows–Stuck transform.
#[inline]
pub fn standard_stable_variate<S: Scalar, R: Rng + ?Sized>(alpha: S, rng: &mut R) -> S {
    let u = (S::sample_open_unit(rng) - S::of(0.5)) * S::PI();
    let e = S::sample_unit_exponential(rng);
    cms_transform(alpha, u, e)
}

#[inline]
fn cms_transform<S: Scalar>(alpha: S, u: S, e: S) -> S {
    let one = S::one();
    if alpha == one {
        return u.tan();
    }
    (alpha * u).sin() / u.cos().powf(one / alpha) * (((one - alpha) * u).cos() / e).powf((one - alpha) / alpha)
}

/// Per-step update rule with the step size folded in.
enum Stepper<'a, S> {
    Gaussian { sd: S },
    Stable { alpha: S, step_scale: S },
    Euler { drift: &'a Coefficient<S>, diffusion: &'a Coefficient<S>, dt: S, sqrt_dt: S },
}

impl<'a, S: Scalar> Stepper<'a, S> {
    fn new(model: &'a ProcessModel<S>, dt: S) -> Self {
        match model.kind() {
            ModelKind::BrownianScaled { sigma } => Stepper::Gaussian { sd: *sigma * dt.sqrt() },
            ModelKind::SymmetricStable { alpha, scale } => {
                Stepper::Stable { alpha: *alpha, step_scale: *scale * dt.powf(S::one() / *alpha) }
            }
            ModelKind::EulerDiffusion { drift, diffusion } => {
                Stepper::Euler { drift, diffusion, dt, sqrt_dt: dt.sqrt() }
            }
        }
    }

    #[inline]
    fn advance<R: Rng + ?Sized>(&self, rng: &mut R, current: &[S], next: &mut [S]) {
        match *self {
            Stepper::Gaussian { sd } => {
                for (n, c) in next.iter_mut().zip(current) {
                    *n = *c + sd * S::sample_standard_normal(rng);
                }
            }
            Stepper::Stable { alpha, step_scale } => {
                next[0] = current[0] + step_scale * standard_stable_variate(alpha, rng);
            }
            Stepper::Euler { drift, diffusion, dt, sqrt_dt } => {
                let x = current[0];
                let z = S::sample_standard_normal(rng);
                next[0] = x + drift.eval(x) * dt + diffusion.eval(x) * sqrt_dt * z;
            }
        }
    }
}

/// Exact-law increment `X_{t+dt} - X_t`: Gaussian with covariance `σ² dt I`, or
/// `scale · dt^{1/α} · S` with `S` standard symmetric stable.
///
/// Euler diffusions have state-dependent steps and are rejected here.
pub fn sample_increment<S: Scalar, R: Rng + ?Sized>(model: &ProcessModel<S>, dt: S, rng: &mut R) -> Result<Vec<S>> {
    if !(dt > S::zero()) {
        return Err(invalid(format!("dt must be positive, got {dt}")));
    }
    if !model.exact_law() {
        return Err(Error::Unsupported("Euler diffusions advance through simulate_path".into()));
    }
    let zero = vec![S::zero(); model.dimension()];
    let mut out = zero.clone();
    Stepper::new(model, dt).advance(rng, &zero, &mut out);
    Ok(out)
}

/// Fill `out` with a path on the fine grid; returns the failing step on overflow.
fn fill_path<S: Scalar, R: Rng + ?Sized>(
    model: &ProcessModel<S>,
    grid: &GridSpec<S>,
    rng: &mut R,
    out: &mut Path<S>,
) -> std::result::Result<(), usize> {
    let d = model.dimension();
    let stepper = Stepper::new(model, grid.dt());
    out.dim = d;
    out.exact_law = model.exact_law();
    out.values.resize(d * (grid.n_ref() + 1), S::zero());
    out.values[..d].copy_from_slice(model.x0());
    for k in 0..grid.n_ref() {
        let (head, tail) = out.values.split_at_mut((k + 1) * d);
        let next = &mut tail[..d];
        stepper.advance(rng, &head[k * d..], next);
        if next.iter().any(|v| !v.is_finite()) {
            return Err(k + 1);
        }
    }
    Ok(())
}

/// Path `path_index` of the batch seeded by `master_seed`: `n_ref + 1` points starting at `x0`.
pub fn simulate_path<S: Scalar>(
    model: &ProcessModel<S>,
    grid: &GridSpec<S>,
    master_seed: u64,
    path_index: u64,
) -> Result<Path<S>> {
    let mut out = Path::zeros(model.dimension(), grid.n_ref() + 1);
    let mut rng = path_rng(master_seed, path_index);
    fill_path(model, grid, &mut rng, &mut out).map_err(|step| Error::NonFinite { master_seed, path_index, step })?;
    Ok(out)
}

/// Path driven by a caller-supplied stream.
pub fn simulate_path_with<S: Scalar, R: Rng + ?Sized>(
    model: &ProcessModel<S>,
    grid: &GridSpec<S>,
    rng: &mut R,
) -> Result<Path<S>> {
    let mut out = Path::zeros(model.dimension(), grid.n_ref() + 1);
    fill_path(model, grid, rng, &mut out)
        .map_err(|step| Error::NonFinite { master_seed: 0, path_index: 0, step })?;
    Ok(out)
}

/// Values at fine indices `k · n_ref / n`, `k = 0..=n`.
pub fn subsample<S: Scalar>(path: &Path<S>, grid: &GridSpec<S>, n: usize) -> Result<Path<S>> {
    let stride = grid.stride(n)?;
    if path.len() != grid.n_ref() + 1 {
        return Err(invalid(format!("path has {} points, grid needs {}", path.len(), grid.n_ref() + 1)));
    }
    let values = (0..=n).flat_map(|k| path.point(k * stride).iter().copied()).collect();
    Ok(Path { dim: path.dim, values, exact_law: path.exact_law })
}

/// `paths` Monte Carlo realizations of `model` on `grid`, generated on demand.
///
/// Paths are never materialized together; each consumer sees one path at a time
/// in a reused buffer.
#[derive(Debug, Clone, Copy)]
pub struct PathBatch<'a, S> {
    model: &'a ProcessModel<S>,
    grid: &'a GridSpec<S>,
    master_seed: u64,
    paths: u64,
}

impl<'a, S: Scalar> PathBatch<'a, S> {
    pub fn new(model: &'a ProcessModel<S>, grid: &'a GridSpec<S>, master_seed: u64, paths: u64) -> Self {
        Self { model, grid, master_seed, paths }
    }

    pub fn model(&self) -> &ProcessModel<S> {
        self.model
    }

    pub fn grid(&self) -> &GridSpec<S> {
        self.grid
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn len(&self) -> u64 {
        self.paths
    }

    pub fn is_empty(&self) -> bool {
        self.paths == 0
    }

    pub fn path(&self, index: u64) -> Result<Path<S>> {
        simulate_path(self.model, self.grid, self.master_seed, index)
    }

    fn fill(&self, index: u64, buf: &mut Path<S>) -> Result<()> {
        let mut rng = path_rng(self.master_seed, index);
        fill_path(self.model, self.grid, &mut rng, buf).map_err(|step| Error::NonFinite {
            master_seed: self.master_seed,
            path_index: index,
            step,
        })
    }

    /// Visit paths `0..len()` in order on the current thread.
    pub fn for_each<F>(&self, mut f: F) -> Result<()>
    where
        F: FnMut(u64, &Path<S>) -> Result<()>,
    {
        let mut buf = Path::zeros(self.model.dimension(), self.grid.n_ref() + 1);
        for i in 0..self.paths {
            self.fill(i, &mut buf)?;
            f(i, &buf)?;
        }
        Ok(())
    }

    /// Parallel fold over all paths.
    ///
    /// Paths are grouped into fixed chunks of [`CHUNK_PATHS`]; chunk results are
    /// merged in chunk order, so the outcome is bit-identical for any thread count.
    pub fn fold<A, I, F, M>(&self, init: I, fold: F, merge: M) -> Result<A>
    where
        A: Send,
        I: Fn() -> A + Sync,
        F: Fn(&mut A, u64, &Path<S>) -> Result<()> + Sync,
        M: Fn(A, A) -> A,
    {
        let chunks = self.paths.div_ceil(CHUNK_PATHS);
        let partials: Vec<A> = (0..chunks)
            .into_par_iter()
            .map(|c| {
                let mut acc = init();
                let mut buf = Path::zeros(self.model.dimension(), self.grid.n_ref() + 1);
                let end = ((c + 1) * CHUNK_PATHS).min(self.paths);
                for i in c * CHUNK_PATHS..end {
                    self.fill(i, &mut buf)?;
                    fold(&mut acc, i, &buf)?;
                }
                Ok(acc)
            })
            .collect::<Result<_>>()?;
        Ok(partials.into_iter().fold(init(), merge))
    }
}
