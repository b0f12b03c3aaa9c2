//! Process models, their transition densities, and density-bound certificates.

mod certificate;
pub mod stable;

use std::fmt;
use std::sync::Arc;

pub use certificate::{certificate_for, q_moment, Certification, DensityBoundCertificate, QKernel};

use crate::error::{invalid, Error, Result};
use crate::Scalar;

/// Drift or diffusion coefficient of an Euler-discretized diffusion.
#[derive(Clone)]
pub enum Coefficient<S> {
    Constant(S),
    Affine { slope: S, offset: S },
    Custom(Arc<dyn Fn(S) -> S + Send + Sync>),
}

impl<S: Scalar> Coefficient<S> {
    #[inline]
    pub fn eval(&self, x: S) -> S {
        match self {
            Coefficient::Constant(c) => *c,
            Coefficient::Affine { slope, offset } => *slope * x + *offset,
            Coefficient::Custom(f) => f(x),
        }
    }
}

impl<S: fmt::Debug> fmt::Debug for Coefficient<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coefficient::Constant(c) => f.debug_tuple("Constant").field(c).finish(),
            Coefficient::Affine { slope, offset } => {
                f.debug_struct("Affine").field("slope", slope).field("offset", offset).finish()
            }
            Coefficient::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

impl<S: Scalar> fmt::Display for Coefficient<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coefficient::Constant(c) => write!(f, "{c}"),
            Coefficient::Affine { slope, offset } => write!(f, "{slope}*x+{offset}"),
            Coefficient::Custom(_) => f.write_str("custom"),
        }
    }
}

#[derive(Debug, Clone)]
pub enum ModelKind<S> {
    /// `σ W_t` started at `x0`.
    BrownianScaled { sigma: S },
    /// Symmetric α-stable Lévy process with `E exp(iξX_t) = exp(-t scale^α |ξ|^α)`.
    SymmetricStable { alpha: S, scale: S },
    /// `dX = b(X) dt + σ(X) dW`, simulated by the Euler scheme; never certified.
    EulerDiffusion { drift: Coefficient<S>, diffusion: Coefficient<S> },
}

/// A simulatable Markov process started at a fixed point.
#[derive(Debug, Clone)]
pub struct ProcessModel<S> {
    kind: ModelKind<S>,
    x0: Vec<S>,
}

impl<S: Scalar> ProcessModel<S> {
    pub fn brownian(sigma: S, x0: Vec<S>) -> Result<Self> {
        if !(sigma > S::zero()) || !sigma.is_finite() {
            return Err(invalid(format!("sigma must be positive and finite, got {sigma}")));
        }
        Self::checked(ModelKind::BrownianScaled { sigma }, x0)
    }

    pub fn stable(alpha: S, scale: S, x0: S) -> Result<Self> {
        if !(alpha > S::zero() && alpha < S::of(2.0)) {
            return Err(invalid(format!("stable index must lie in (0, 2), got {alpha}")));
        }
        if !(scale > S::zero()) || !scale.is_finite() {
            return Err(invalid(format!("scale must be positive and finite, got {scale}")));
        }
        Self::checked(ModelKind::SymmetricStable { alpha, scale }, vec![x0])
    }

    pub fn euler(drift: Coefficient<S>, diffusion: Coefficient<S>, x0: S) -> Result<Self> {
        Self::checked(ModelKind::EulerDiffusion { drift, diffusion }, vec![x0])
    }

    fn checked(kind: ModelKind<S>, x0: Vec<S>) -> Result<Self> {
        if x0.is_empty() {
            return Err(invalid("start point must have dimension >= 1"));
        }
        if x0.iter().any(|v| !v.is_finite()) {
            return Err(invalid("start point must be finite"));
        }
        Ok(Self { kind, x0 })
    }

    pub fn kind(&self) -> &ModelKind<S> {
        &self.kind
    }

    pub fn x0(&self) -> &[S] {
        &self.x0
    }

    pub fn dimension(&self) -> usize {
        self.x0.len()
    }

    /// Self-similarity index: 2 for Gaussian-type models, the stable index otherwise.
    pub fn alpha(&self) -> S {
        match &self.kind {
            ModelKind::SymmetricStable { alpha, .. } => *alpha,
            _ => S::of(2.0),
        }
    }

    /// Whether simulated increments follow the exact transition law.
    pub fn exact_law(&self) -> bool {
        !matches!(self.kind, ModelKind::EulerDiffusion { .. })
    }

    /// Same model restarted at `x0`.
    pub fn with_start(&self, x0: Vec<S>) -> Result<Self> {
        if x0.len() != self.x0.len() {
            return Err(invalid("start point dimension mismatch"));
        }
        Self::checked(self.kind.clone(), x0)
    }
}

impl<S: Scalar> fmt::Display for ProcessModel<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ModelKind::BrownianScaled { sigma } => write!(f, "brownian(sigma={sigma}")?,
            ModelKind::SymmetricStable { alpha, scale } => write!(f, "stable(alpha={alpha}, scale={scale}")?,
            ModelKind::EulerDiffusion { drift, diffusion } => {
                write!(f, "euler(drift={drift}, diffusion={diffusion}")?
            }
        }
        if self.x0.len() == 1 {
            write!(f, ", x0={})", self.x0[0])
        } else {
            let parts: Vec<String> = self.x0.iter().map(|v| v.to_string()).collect();
            write!(f, ", x0=[{}])", parts.join(", "))
        }
    }
}

fn check_points<S: Scalar>(model: &ProcessModel<S>, x: &[S], y: &[S]) -> Result<()> {
    if x.len() != model.dimension() || y.len() != model.dimension() {
        return Err(invalid(format!(
            "points must have dimension {}, got {} and {}",
            model.dimension(),
            x.len(),
            y.len()
        )));
    }
    Ok(())
}

/// Transition density `p_t(x, y)`.
///
/// Gaussian in closed form; the stable case goes through the Fourier-inversion
/// tables in [`stable`], accurate to about 1e-12 in absolute terms.
pub fn transition_density<S: Scalar>(model: &ProcessModel<S>, t: S, x: &[S], y: &[S]) -> Result<S> {
    transition_density_time_derivative(model, 0, t, x, y)
}

/// `∂^order_t p_t(x, y)` for `order ∈ {0, 1, 2}`.
pub fn transition_density_time_derivative<S: Scalar>(
    model: &ProcessModel<S>,
    order: usize,
    t: S,
    x: &[S],
    y: &[S],
) -> Result<S> {
    if !(t > S::zero()) {
        return Err(invalid(format!("t must be positive, got {t}")));
    }
    if order > 2 {
        return Err(invalid(format!("derivative order {order} > 2")));
    }
    check_points(model, x, y)?;
    match &model.kind {
        ModelKind::BrownianScaled { sigma } => {
            let d = S::of_usize(model.dimension());
            let var = *sigma * *sigma * t;
            let r2: S = x.iter().zip(y).map(|(a, b)| (*a - *b) * (*a - *b)).sum();
            let p = (S::of(2.0) * S::PI() * var).powf(-d / S::of(2.0)) * (-r2 / (S::of(2.0) * var)).exp();
            // ∂_t log p = g / t with g = w - d/2, w = |x-y|²/(2σ²t); ∂_t g = -w / t.
            let w = r2 / (S::of(2.0) * var);
            let g = w - d / S::of(2.0);
            Ok(match order {
                0 => p,
                1 => p * g / t,
                _ => p * (g * g + d / S::of(2.0) - S::of(2.0) * w) / (t * t),
            })
        }
        ModelKind::SymmetricStable { alpha, scale } => {
            let alpha = alpha.as_f64();
            let rate = scale.as_f64().powf(alpha);
            let tau = t.as_f64() * rate;
            let z = (y[0] - x[0]).as_f64();
            let v = stable::density_tau_derivative(alpha, order, tau, z)? * rate.powi(order as i32);
            Ok(S::of(v))
        }
        ModelKind::EulerDiffusion { .. } => {
            Err(Error::Unsupported("no transition density for Euler-discretized diffusions".into()))
        }
    }
}
