use std::f64::consts::PI;
use std::fmt;

use statrs::function::gamma::gamma;

use super::stable::{self, MIN_DENSITY_ALPHA};
use super::{ModelKind, ProcessModel};
use crate::error::{invalid, Error, Result};
use crate::quad::{integrate_real_line, integrate_to_infinity};
use crate::Scalar;

/// Fraction of the Gaussian exponent kept by the dominating kernel; the rest
/// absorbs the polynomial factors of the time derivatives.
const GAUSSIAN_EXPONENT_FRACTION: f64 = 0.5;
/// Relative inflation of the maximized ratio, covering scan/refinement error.
const SUP_INFLATION: f64 = 1e-6;
const MASS_TOLERANCE: f64 = 1e-8;

/// Dominating density `Q` in the bounds
/// `|∂^m_t p_t(x,y)| ≤ C_T t^{-m-d/α} Q(t^{-1/α}(x-y))`, `m = 0, 1, 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum QKernel<S> {
    /// `Q(z) = c1 exp(-c2 |z|²)` on `R^dimension`.
    Gaussian { c1: S, c2: S, dimension: usize },
    /// Symmetric α-stable density with characteristic function `exp(-scale^α |ξ|^α)`.
    Stable { alpha: S, scale: S },
}

impl<S: Scalar> QKernel<S> {
    /// Standard normal density on `R^d`.
    pub fn standard_normal(dimension: usize) -> Self {
        let c2 = 0.5;
        QKernel::Gaussian { c1: S::of((c2 / PI).powf(dimension as f64 / 2.0)), c2: S::of(c2), dimension }
    }

    pub fn dimension(&self) -> usize {
        match self {
            QKernel::Gaussian { dimension, .. } => *dimension,
            QKernel::Stable { .. } => 1,
        }
    }

    pub fn density(&self, z: &[S]) -> Result<S> {
        if z.len() != self.dimension() {
            return Err(invalid("kernel argument has wrong dimension"));
        }
        match *self {
            QKernel::Gaussian { c1, c2, .. } => {
                let r2: S = z.iter().map(|v| *v * *v).sum();
                Ok(c1 * (-c2 * r2).exp())
            }
            QKernel::Stable { alpha, scale } => {
                let s = scale.as_f64();
                Ok(S::of(stable::standard_density(alpha.as_f64(), z[0].as_f64() / s)? / s))
            }
        }
    }

    /// `∫ Q`, evaluated by quadrature (radially in the Gaussian case).
    pub fn total_mass(&self) -> Result<f64> {
        match *self {
            QKernel::Gaussian { c1, c2, dimension } => {
                let (c1, c2, d) = (c1.as_f64(), c2.as_f64(), dimension as f64);
                let sphere = 2.0 * PI.powf(d / 2.0) / gamma(d / 2.0);
                let radial = integrate_to_infinity(|r: f64| r.powf(d - 1.0) * (-c2 * r * r).exp(), 0.0, 1e-13)?;
                Ok(c1 * sphere * radial.value)
            }
            QKernel::Stable { alpha, scale } => {
                let (alpha, s) = (alpha.as_f64(), scale.as_f64());
                let table = stable::table(alpha)?;
                Ok(integrate_real_line(|z: f64| table.eval(0, z / s) / s, 1e-11)?.value)
            }
        }
    }
}

impl<S: Scalar> fmt::Display for QKernel<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QKernel::Gaussian { c1, c2, dimension } => write!(f, "gaussian(c1={c1}, c2={c2}, d={dimension})"),
            QKernel::Stable { alpha, scale } => write!(f, "stable(alpha={alpha}, scale={scale})"),
        }
    }
}

/// Constants `(α, C_T, T, Q)` for which the three transition-density bounds hold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityBoundCertificate<S> {
    alpha: S,
    c_t: S,
    horizon: S,
    q_kernel: QKernel<S>,
}

impl<S: Scalar> DensityBoundCertificate<S> {
    /// Validates `α ∈ (0, 2]`, `C_T ≥ 1`, `T > 0` and `∫Q = 1` (to 1e-8).
    pub fn new(alpha: S, c_t: S, horizon: S, q_kernel: QKernel<S>) -> Result<Self> {
        if !(alpha > S::zero() && alpha <= S::of(2.0)) {
            return Err(invalid(format!("alpha must lie in (0, 2], got {alpha}")));
        }
        if !(c_t >= S::one()) || !c_t.is_finite() {
            return Err(invalid(format!("C_T must be finite and >= 1, got {c_t}")));
        }
        if !(horizon > S::zero()) {
            return Err(invalid(format!("horizon must be positive, got {horizon}")));
        }
        let mass = q_kernel.total_mass()?;
        if (mass - 1.0).abs() > MASS_TOLERANCE {
            return Err(invalid(format!("kernel {q_kernel} integrates to {mass}, not 1")));
        }
        Ok(Self { alpha, c_t, horizon, q_kernel })
    }

    pub fn alpha(&self) -> S {
        self.alpha
    }

    pub fn c_t(&self) -> S {
        self.c_t
    }

    pub fn horizon(&self) -> S {
        self.horizon
    }

    pub fn q_kernel(&self) -> &QKernel<S> {
        &self.q_kernel
    }

    /// Right-hand side `C_T t^{-m-d/α} Q(t^{-1/α} z)` of the order-`m` bound.
    pub fn bound(&self, order: usize, t: S, z: &[S]) -> Result<S> {
        let d = S::of_usize(self.q_kernel.dimension());
        let shrink = t.powf(-S::one() / self.alpha);
        let scaled: Vec<S> = z.iter().map(|v| *v * shrink).collect();
        Ok(self.c_t * t.powf(-S::of_usize(order) - d / self.alpha) * self.q_kernel.density(&scaled)?)
    }
}

/// Outcome of [`certificate_for`]; an uncertified model is a value, not an error.
#[derive(Debug, Clone)]
pub enum Certification<S> {
    Certified(DensityBoundCertificate<S>),
    NotCertified { reason: String },
}

impl<S> Certification<S> {
    pub fn certificate(&self) -> Option<&DensityBoundCertificate<S>> {
        match self {
            Certification::Certified(c) => Some(c),
            Certification::NotCertified { .. } => None,
        }
    }
}

/// Builds `(C_T, Q)` for the model's exact transition density on `(0, T]`.
///
/// Both certified families are exactly self-similar, so after the substitution
/// `u = t^{-1/α}(y - x)` each ratio `|∂^m_t p| / (t^{-m-d/α} Q(u))` depends on
/// `u` alone; `C_T` is the largest of these suprema (and at least 1).
pub fn certificate_for<S: Scalar>(model: &ProcessModel<S>, horizon: S) -> Result<Certification<S>> {
    if !(horizon > S::zero()) {
        return Err(invalid(format!("horizon must be positive, got {horizon}")));
    }
    match model.kind() {
        ModelKind::BrownianScaled { sigma } => {
            let d = model.dimension();
            let sigma = sigma.as_f64();
            let own_exponent = 1.0 / (2.0 * sigma * sigma);
            let c2 = GAUSSIAN_EXPONENT_FRACTION * own_exponent;
            let c1 = (c2 / PI).powf(d as f64 / 2.0);
            let c_t = gaussian_sup_ratio(sigma, d, c1, GAUSSIAN_EXPONENT_FRACTION).max(1.0);
            let kernel = QKernel::Gaussian { c1: S::of(c1), c2: S::of(c2), dimension: d };
            Ok(Certification::Certified(DensityBoundCertificate::new(S::of(2.0), S::of(c_t), horizon, kernel)?))
        }
        ModelKind::SymmetricStable { alpha, scale } => {
            let a = alpha.as_f64();
            if a < MIN_DENSITY_ALPHA {
                return Ok(Certification::NotCertified {
                    reason: format!("stable densities are only evaluated for alpha >= {MIN_DENSITY_ALPHA}"),
                });
            }
            let c_t = stable_sup_ratio(a)?.max(1.0);
            let kernel = QKernel::Stable { alpha: *alpha, scale: *scale };
            Ok(Certification::Certified(DensityBoundCertificate::new(*alpha, S::of(c_t), horizon, kernel)?))
        }
        ModelKind::EulerDiffusion { .. } => Ok(Certification::NotCertified {
            reason: "Euler-discretized diffusions have no certified density constants".into(),
        }),
    }
}

/// Gaussian ratios in the variable `w = |u|²/(2σ²)`:
/// `K e^{-(1-f)w}·{1, |w - d/2|, |(w - d/2)² + d/2 - 2w|}`, `K = (2πσ²)^{-d/2} / c1`.
fn gaussian_sup_ratio(sigma: f64, d: usize, c1: f64, fraction: f64) -> f64 {
    let half_d = d as f64 / 2.0;
    let k = (2.0 * PI * sigma * sigma).powf(-half_d) / c1;
    let ratio = |w: f64| {
        let g = w - half_d;
        let poly = 1f64.max(g.abs()).max((g * g + half_d - 2.0 * w).abs());
        k * (-(1.0 - fraction) * w).exp() * poly
    };
    let upper = 40.0 * (1.0 + half_d) / (1.0 - fraction);
    maximize_on_grid(ratio, &linspace(0.0, upper, 200_001))
}

/// Stable ratios `|g_1(u)| / g_0(u)` and `|g_2(u)| / g_0(u)` (the order-0 ratio is 1).
fn stable_sup_ratio(alpha: f64) -> Result<f64> {
    let table = stable::table(alpha)?;
    let ratio = |u: f64| {
        let g0 = table.eval(0, u);
        (table.eval(1, u).abs() / g0).max(table.eval(2, u).abs() / g0)
    };
    let mut grid = linspace(0.0, 60.0, 6_001);
    // Tail: ratios settle to their leading-term limits, so a sparse log grid suffices.
    grid.extend((1..=400).map(|i| 60.0 * (1e4f64 / 60.0).powf(i as f64 / 400.0)));
    Ok(maximize_on_grid(ratio, &grid).max(1.0))
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

/// Grid scan followed by golden-section refinement around the best node.
fn maximize_on_grid<F: Fn(f64) -> f64>(f: F, grid: &[f64]) -> f64 {
    let (best, best_val) = grid
        .iter()
        .enumerate()
        .map(|(i, &x)| (i, f(x)))
        .fold((0, f64::NEG_INFINITY), |acc, (i, v)| if v > acc.1 { (i, v) } else { acc });
    let lo = grid[best.saturating_sub(1)];
    let hi = grid[(best + 1).min(grid.len() - 1)];
    let (mut a, mut b) = (lo, hi);
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..80 {
        let c = b - phi * (b - a);
        let e = a + phi * (b - a);
        if f(c) >= f(e) {
            b = e;
        } else {
            a = c;
        }
    }
    best_val.max(f(0.5 * (a + b))) * (1.0 + SUP_INFLATION)
}

/// `∫ |z|^{2γ} Q(z) dz`.
pub fn q_moment<S: Scalar>(cert: &DensityBoundCertificate<S>, gamma_exp: S) -> Result<S> {
    if !(gamma_exp > S::zero()) {
        return Err(invalid(format!("gamma must be positive, got {gamma_exp}")));
    }
    let g = gamma_exp.as_f64();
    match *cert.q_kernel() {
        QKernel::Gaussian { c1, c2, dimension } => {
            let (c1, c2, half_d) = (c1.as_f64(), c2.as_f64(), dimension as f64 / 2.0);
            Ok(S::of(c1 * PI.powf(half_d) * c2.powf(-(half_d + g)) * gamma(half_d + g) / gamma(half_d)))
        }
        QKernel::Stable { alpha, scale } => {
            let a = alpha.as_f64();
            if 2.0 * g >= a {
                return Err(Error::InfiniteMoment { gamma: g, alpha: a });
            }
            Ok(S::of(scale.as_f64().powf(2.0 * g) * stable::absolute_moment(a, 2.0 * g)))
        }
    }
}
