//! Closed catalog of Hölder-continuous test functions with trusted norms.
//!
//! `‖h‖_γ = sup_{x≠y} |h(x) - h(y)| / |x - y|^γ`. Each constructor records an
//! exponent and a norm that is a proven upper bound for that entry, so bound
//! computations never depend on a user-supplied constant.

use std::fmt;

use crate::error::{invalid, Error, Result};
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HolderKind<S> {
    Constant(S),
    /// `slope · x + offset` (first coordinate when `d > 1`).
    Linear { slope: S, offset: S },
    /// `|x - center|^γ`, Euclidean norm when `d > 1`.
    PowerAbs { gamma: S, center: S },
    /// `sin(frequency · x)` (first coordinate when `d > 1`).
    Sine { frequency: S },
    /// `min(|x - center|^γ, cap)`.
    ClippedPower { gamma: S, center: S, cap: S },
}

/// A test function `h` with declared exponent `γ ∈ (0, 1]` and norm `‖h‖_γ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HolderFunction<S> {
    kind: HolderKind<S>,
    amplitude: S,
    gamma: S,
    holder_norm: S,
}

fn check_gamma<S: Scalar>(gamma: S) -> Result<()> {
    if gamma > S::zero() && gamma <= S::one() {
        Ok(())
    } else {
        Err(invalid(format!("Hölder exponent must lie in (0, 1], got {gamma}")))
    }
}

fn check_finite<S: Scalar>(name: &str, v: S) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be finite")))
    }
}

impl<S: Scalar> HolderFunction<S> {
    fn new(kind: HolderKind<S>, gamma: S, holder_norm: S) -> Self {
        Self { kind, amplitude: S::one(), gamma, holder_norm }
    }

    /// Constant `c`, exponent 1, norm 0.
    pub fn constant(c: S) -> Result<Self> {
        Self::constant_with_exponent(c, S::one())
    }

    /// Constant `c` declared with exponent `gamma`; the norm is 0 for every exponent.
    pub fn constant_with_exponent(c: S, gamma: S) -> Result<Self> {
        check_finite("constant", c)?;
        check_gamma(gamma)?;
        Ok(Self::new(HolderKind::Constant(c), gamma, S::zero()))
    }

    pub fn linear(slope: S, offset: S) -> Result<Self> {
        check_finite("slope", slope)?;
        check_finite("offset", offset)?;
        Ok(Self::new(HolderKind::Linear { slope, offset }, S::one(), slope.abs()))
    }

    /// `|x - center|^γ`; norm 1 by subadditivity of `r ↦ r^γ`.
    pub fn power_abs(gamma: S, center: S) -> Result<Self> {
        check_gamma(gamma)?;
        check_finite("center", center)?;
        Ok(Self::new(HolderKind::PowerAbs { gamma, center }, gamma, S::one()))
    }

    /// `sin(ωx)` with norm `2^{1-γ} ω^γ`, from `|sin a - sin b| ≤ min(2, ω|a - b|)`.
    pub fn sine(frequency: S, gamma: S) -> Result<Self> {
        check_gamma(gamma)?;
        if !(frequency > S::zero()) || !frequency.is_finite() {
            return Err(invalid(format!("frequency must be positive, got {frequency}")));
        }
        let norm = S::of(2.0).powf(S::one() - gamma) * frequency.powf(gamma);
        Ok(Self::new(HolderKind::Sine { frequency }, gamma, norm))
    }

    /// `min(|x - center|^γ, cap)`; clipping is 1-Lipschitz so the norm stays 1.
    pub fn clipped_power(gamma: S, center: S, cap: S) -> Result<Self> {
        check_gamma(gamma)?;
        check_finite("center", center)?;
        if !(cap > S::zero()) || !cap.is_finite() {
            return Err(invalid(format!("cap must be positive, got {cap}")));
        }
        Ok(Self::new(HolderKind::ClippedPower { gamma, center, cap }, gamma, S::one()))
    }

    /// `λ · h`, with norm `|λ| ‖h‖_γ`.
    pub fn scaled(mut self, lambda: S) -> Self {
        self.amplitude *= lambda;
        self.holder_norm = self.holder_norm * lambda.abs();
        self
    }

    pub fn kind(&self) -> &HolderKind<S> {
        &self.kind
    }

    pub fn gamma(&self) -> S {
        self.gamma
    }

    pub fn holder_norm(&self) -> S {
        self.holder_norm
    }

    pub fn amplitude(&self) -> S {
        self.amplitude
    }

    pub fn is_constant(&self) -> bool {
        matches!(self.kind, HolderKind::Constant(_)) || self.amplitude == S::zero()
    }

    /// Same function translated by `shift` (the centers move; linear offsets compensate).
    pub fn translated(&self, shift: S) -> Self {
        let kind = match self.kind {
            HolderKind::PowerAbs { gamma, center } => HolderKind::PowerAbs { gamma, center: center + shift },
            HolderKind::ClippedPower { gamma, center, cap } => {
                HolderKind::ClippedPower { gamma, center: center + shift, cap }
            }
            HolderKind::Linear { slope, offset } => HolderKind::Linear { slope, offset: offset - slope * shift },
            other => other,
        };
        Self { kind, ..*self }
    }

    #[inline]
    pub fn evaluate(&self, x: &[S]) -> S {
        self.amplitude * self.evaluate_base(x)
    }

    #[inline]
    fn evaluate_base(&self, x: &[S]) -> S {
        match self.kind {
            HolderKind::Constant(c) => c,
            HolderKind::Linear { slope, offset } => slope * x[0] + offset,
            HolderKind::PowerAbs { gamma, center } => distance(x, center).powf(gamma),
            HolderKind::Sine { frequency } => (frequency * x[0]).sin(),
            HolderKind::ClippedPower { gamma, center, cap } => distance(x, center).powf(gamma).min(cap),
        }
    }

    /// One-dimensional evaluation.
    #[inline]
    pub fn eval1(&self, x: S) -> S {
        self.evaluate(std::slice::from_ref(&x))
    }
}

#[inline]
fn distance<S: Scalar>(x: &[S], center: S) -> S {
    if x.len() == 1 {
        (x[0] - center).abs()
    } else {
        x.iter().map(|v| (*v - center) * (*v - center)).sum::<S>().sqrt()
    }
}

impl<S: Scalar> fmt::Display for HolderFunction<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.amplitude != S::one() {
            write!(f, "{}*", self.amplitude)?;
        }
        match self.kind {
            HolderKind::Constant(c) => write!(f, "constant(value={c})"),
            HolderKind::Linear { slope, offset } => write!(f, "linear(slope={slope}, offset={offset})"),
            HolderKind::PowerAbs { gamma, center } => write!(f, "power(gamma={gamma}, center={center})"),
            HolderKind::Sine { frequency } => write!(f, "sine(frequency={frequency}, gamma={})", self.gamma),
            HolderKind::ClippedPower { gamma, center, cap } => {
                write!(f, "clipped_power(gamma={gamma}, center={center}, cap={cap})")
            }
        }
    }
}

/// Maximum of `|h(x) - h(y)| / |x - y|^γ` over all pairs of an equispaced grid on `domain`.
///
/// Fails with [`Error::HolderViolation`] when the scan exceeds the declared norm,
/// which means the catalog entry is misconfigured.
pub fn empirical_holder_check<S: Scalar>(h: &HolderFunction<S>, domain: (S, S), grid_points: usize) -> Result<S> {
    if grid_points < 2 {
        return Err(invalid("grid_points must be at least 2"));
    }
    let (lo, hi) = domain;
    if !(hi > lo) {
        return Err(invalid("domain must be a non-empty interval"));
    }
    let step = (hi - lo) / S::of_usize(grid_points - 1);
    let values: Vec<S> = (0..grid_points).map(|i| h.eval1(lo + step * S::of_usize(i))).collect();
    // |x_i - x_j|^γ depends only on j - i.
    let denom: Vec<S> = (0..grid_points).map(|k| (step * S::of_usize(k)).powf(h.gamma())).collect();

    let mut worst = S::zero();
    for i in 0..grid_points {
        let vi = values[i];
        for j in (i + 1)..grid_points {
            let r = (values[j] - vi).abs() / denom[j - i];
            if r > worst {
                worst = r;
            }
        }
    }
    let slack = S::of(1e-9).max(S::epsilon() * S::of(64.0)) * S::one().max(h.holder_norm());
    if worst > h.holder_norm() + slack {
        return Err(Error::HolderViolation { observed: worst.as_f64(), declared: h.holder_norm().as_f64() });
    }
    Ok(worst)
}
