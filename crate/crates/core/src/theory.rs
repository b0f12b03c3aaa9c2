//! Constants and bound curve of the strong L2 error estimate, a closed-form
//! Brownian oracle, and log-log rate fitting.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::estimate::ErrorSummary;
use crate::model::{q_moment, DensityBoundCertificate};
use crate::Scalar;

/// Which form of the bound applies: `γ < α/2` or `γ = α/2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    /// `D · C · ‖h‖² · n^{-(1+2γ/α)}`
    Generic,
    /// `D · ‖h‖² · n^{-2} · ln n`
    Boundary,
}

/// Integer scans are used while the continuous maximizer stays below this.
const SCAN_LIMIT: f64 = 1e6;

/// Parts of `C_{γ,α} = max{ (1-r)^{-1} r^{-1}, max_{n≥1} (ln n)² / n^{1-r} }`, `r = 2γ/α`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CGammaAlpha {
    pub value: f64,
    pub first_term: f64,
    pub scan_max: f64,
    pub argmax: u64,
}

fn log_ratio_term(n: u64, r: f64) -> f64 {
    let l = (n as f64).ln();
    l * l / (n as f64).powf(1.0 - r)
}

/// Both terms of `C_{γ,α}` and the integer where the second one peaks.
///
/// `f(x) = (ln x)² x^{r-1}` has `f'(x) = ln x · (2 - (1 - r) ln x) · x^{r-2}`,
/// positive on `(1, x*)` and negative beyond `x* = e^{2/(1-r)}`. Scanning the
/// integers up to `10⌈x*⌉` therefore covers the maximum. When `x*` is huge the
/// same argument shows the integer maximum sits at `⌊x*⌋` or `⌈x*⌉`.
pub fn c_gamma_alpha_detail<S: Scalar>(gamma: S, alpha: S) -> Result<CGammaAlpha> {
    if !(gamma > S::zero()) || !(alpha > S::zero()) || alpha > S::of(2.0) {
        return Err(invalid(format!("need gamma > 0 and alpha in (0, 2], got {gamma}, {alpha}")));
    }
    let two_gamma = S::of(2.0) * gamma;
    if two_gamma == alpha {
        return Err(Error::UndefinedAtBoundary { gamma: gamma.as_f64(), alpha: alpha.as_f64() });
    }
    if two_gamma > alpha {
        return Err(Error::GammaTooLarge { gamma: gamma.as_f64(), alpha: alpha.as_f64() });
    }
    let r = (two_gamma / alpha).as_f64();
    let first_term = 1.0 / ((1.0 - r) * r);
    let peak = (2.0 / (1.0 - r)).exp();
    let (argmax, scan_max) = if peak <= SCAN_LIMIT {
        let cutoff = 10 * peak.ceil() as u64;
        (2..=cutoff).map(|n| (n, log_ratio_term(n, r))).fold((1, 0.0), |best, cur| if cur.1 > best.1 { cur } else { best })
    } else {
        let (lo, hi) = (peak.floor() as u64, peak.ceil() as u64);
        let (flo, fhi) = (log_ratio_term(lo, r), log_ratio_term(hi, r));
        if fhi > flo { (hi, fhi) } else { (lo, flo) }
    };
    Ok(CGammaAlpha { value: first_term.max(scan_max), first_term, scan_max, argmax })
}

/// `C_{γ,α}`; defined only for `0 < γ < α/2`.
pub fn c_gamma_alpha<S: Scalar>(gamma: S, alpha: S) -> Result<S> {
    Ok(S::of(c_gamma_alpha_detail(gamma, alpha)?.value))
}

/// `D = 8 C_T² T^{2+2γ/α} ∫|z|^{2γ} Q(z) dz` from its ingredients.
pub fn d_constant_from<S: Scalar>(c_t: S, horizon: S, gamma: S, alpha: S, q_moment: S) -> S {
    S::of(8.0) * c_t * c_t * horizon.powf(S::of(2.0) + S::of(2.0) * gamma / alpha) * q_moment
}

/// `D_{T,γ,α,Q}` for a certificate.
pub fn d_constant<S: Scalar>(cert: &DensityBoundCertificate<S>, horizon: S, gamma: S) -> Result<S> {
    if !(horizon > S::zero()) {
        return Err(invalid(format!("horizon must be positive, got {horizon}")));
    }
    let q = q_moment(cert, gamma)?;
    Ok(d_constant_from(cert.c_t(), horizon, gamma, cert.alpha(), q))
}

/// Evaluated constants of the bound for one `(model, h)` pairing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoryBound<S> {
    pub gamma: S,
    pub alpha: S,
    #[serde(rename = "T")]
    pub horizon: S,
    pub holder_norm: S,
    pub d_constant: S,
    pub c_constant: Option<S>,
    pub branch: Branch,
}

impl<S: Scalar> TheoryBound<S> {
    /// Constants for `h` with exponent `gamma` and norm `holder_norm` under `cert`.
    pub fn new(cert: &DensityBoundCertificate<S>, gamma: S, holder_norm: S) -> Result<Self> {
        let alpha = cert.alpha();
        let d = d_constant(cert, cert.horizon(), gamma)?;
        Self::from_constants(gamma, alpha, cert.horizon(), holder_norm, d, None)
    }

    /// Constants supplied directly; `c_constant` is computed when `None` in the generic branch.
    pub fn from_constants(
        gamma: S,
        alpha: S,
        horizon: S,
        holder_norm: S,
        d_constant: S,
        c_constant: Option<S>,
    ) -> Result<Self> {
        if !(d_constant > S::zero()) {
            return Err(invalid(format!("D must be positive, got {d_constant}")));
        }
        if !(holder_norm >= S::zero()) {
            return Err(invalid(format!("Hölder norm must be nonnegative, got {holder_norm}")));
        }
        let (branch, c_constant) = if S::of(2.0) * gamma == alpha {
            (Branch::Boundary, None)
        } else {
            let c = match c_constant {
                Some(c) => c,
                None => c_gamma_alpha(gamma, alpha)?,
            };
            if !(c >= S::one()) {
                return Err(invalid(format!("C must be at least 1, got {c}")));
            }
            (Branch::Generic, Some(c))
        };
        Ok(Self { gamma, alpha, horizon, holder_norm, d_constant, c_constant, branch })
    }

    /// `-(1 + 2γ/α)`, the exponent of `n` in the generic branch.
    pub fn exponent(&self) -> S {
        -(S::one() + S::of(2.0) * self.gamma / self.alpha)
    }

    pub fn at(&self, n: usize) -> S {
        theoretical_bound(self, n)
    }
}

/// The bound on `E_x|I_T(h) - I_{T,n}(h)|²`; the boundary branch gives 0 at `n = 1`.
pub fn theoretical_bound<S: Scalar>(tb: &TheoryBound<S>, n: usize) -> S {
    let nn = S::of_usize(n.max(1));
    let scale = tb.d_constant * tb.holder_norm * tb.holder_norm;
    match tb.branch {
        Branch::Generic => scale * tb.c_constant.unwrap_or_else(S::one) * nn.powf(tb.exponent()),
        Branch::Boundary => scale * nn.ln() / (nn * nn),
    }
}

/// Fill the `bound` column of `summary` from `tb`.
pub fn attach_bounds<S: Scalar>(summary: &mut ErrorSummary<S>, tb: &TheoryBound<S>) {
    for row in &mut summary.rows {
        row.bound = Some(tb.at(row.n));
    }
}

/// `E|∫_0^T W_t dt - (T/n) Σ_{k<n} W_{kT/n}|² = T³ / (3n²)` for standard Brownian motion.
///
/// On each cell of length `Δ = T/n` the error `∫(W_t - W_{t_k}) dt` depends only
/// on increments inside that cell, so the cells are independent, and each has
/// variance `∫_0^Δ ∫_0^Δ min(s, t) ds dt = Δ³/3`. Summing `n` of them gives `nΔ³/3`.
pub fn bm_linear_mse_oracle<S: Scalar>(horizon: S, n: usize) -> S {
    let nn = S::of_usize(n);
    horizon * horizon * horizon / (S::of(3.0) * nn * nn)
}

/// The same quantity when the integral is replaced by the Riemann sum on `n_ref`
/// points, as in coupled estimation: with `m = n_ref / n`, each cell contributes
/// `δ³ Σ_{i,j<m} min(i, j) = Δ³ (m - 1)(2m - 1) / (6m²)`.
pub fn bm_linear_coupled_oracle<S: Scalar>(horizon: S, n: usize, n_ref: usize) -> Result<S> {
    if n == 0 || n_ref % n != 0 {
        return Err(Error::NotNested { n, n_ref });
    }
    let m = S::of_usize(n_ref / n);
    let one = S::one();
    Ok(bm_linear_mse_oracle(horizon, n) * (m - one) * (S::of(2.0) * m - one) / (S::of(2.0) * m * m))
}

/// Weighted least-squares fit of `ln mse = intercept + slope · ln n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub slope_stderr: f64,
    pub points: usize,
}

/// Fit the convergence rate on rows with `n ≥ n_min` and `mse > 0`.
///
/// Weights are `(mse / std_error)²`, the inverse delta-method variance of `ln mse`.
/// If any used row has a zero standard error the fit is unweighted. The slope
/// error is the weighted one inflated by the reduced chi-square when that
/// exceeds 1; for an unweighted fit it is the residual-based error.
pub fn fit_rate<S: Scalar>(summary: &ErrorSummary<S>, n_min: usize) -> Result<RateFit> {
    if summary.rows.iter().all(|r| r.mse == S::zero()) {
        return Err(Error::DegenerateFit("zero error curve".into()));
    }
    let rows: Vec<_> = summary
        .rows
        .iter()
        .filter(|r| r.n >= n_min && r.mse > S::zero() && r.mse.is_finite())
        .map(|r| ((r.n as f64).ln(), r.mse.as_f64().ln(), r.mse.as_f64(), r.std_error.as_f64()))
        .collect();
    if rows.len() < 3 {
        return Err(Error::DegenerateFit(format!("{} usable rows, need at least 3", rows.len())));
    }
    let weighted = rows.iter().all(|r| r.3 > 0.0 && r.3.is_finite());
    let pts: Vec<(f64, f64, f64)> = rows
        .iter()
        .map(|&(x, y, mse, se)| (x, y, if weighted { (mse / se).powi(2) } else { 1.0 }))
        .collect();
    let w_sum: f64 = pts.iter().map(|p| p.2).sum();
    let x_bar = pts.iter().map(|p| p.2 * p.0).sum::<f64>() / w_sum;
    let y_bar = pts.iter().map(|p| p.2 * p.1).sum::<f64>() / w_sum;
    let sxx: f64 = pts.iter().map(|p| p.2 * (p.0 - x_bar).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| p.2 * (p.0 - x_bar) * (p.1 - y_bar)).sum();
    if !(sxx > 0.0) {
        return Err(Error::DegenerateFit("all usable rows share one n".into()));
    }
    let slope = sxy / sxx;
    let intercept = y_bar - slope * x_bar;
    let rss: f64 = pts.iter().map(|p| p.2 * (p.1 - intercept - slope * p.0).powi(2)).sum();
    let tss: f64 = pts.iter().map(|p| p.2 * (p.1 - y_bar).powi(2)).sum();
    let r2 = if tss > 0.0 { 1.0 - rss / tss } else { 1.0 };
    let reduced = rss / (pts.len() - 2) as f64;
    let variance_scale = if weighted { reduced.max(1.0) } else { reduced };
    Ok(RateFit { slope, intercept, r2, slope_stderr: (variance_scale / sxx).sqrt(), points: pts.len() })
}
