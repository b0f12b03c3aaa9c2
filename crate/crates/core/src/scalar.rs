//! Floating-point abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};
use rand::Rng;
use rand_distr::{Exp1, Open01, StandardNormal};

/// Real scalar used for paths, test functions and bound arithmetic: `f32` or `f64`.
///
/// The sampling hooks exist because `rand_distr` implements its distributions
/// per concrete float type; routing them through the trait keeps the simulation
/// code generic without carrying `where StandardNormal: Distribution<S>` bounds
/// on every signature.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Draw from N(0, 1).
    fn sample_standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// Draw from Exp(1).
    fn sample_unit_exponential<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// Draw uniformly from the open interval (0, 1).
    fn sample_open_unit<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// Lossy conversion from an `f64` literal or constant.
    #[inline]
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("f64 is representable in every Scalar")
    }

    #[inline]
    fn of_usize(v: usize) -> Self {
        Self::from_usize(v).expect("usize is representable in every Scalar")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("Scalar converts to f64")
    }
}

macro_rules! impl_scalar {
    ($t:ty) => {
        impl Scalar for $t {
            #[inline]
            fn sample_standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
                rng.sample(StandardNormal)
            }

            #[inline]
            fn sample_unit_exponential<R: Rng + ?Sized>(rng: &mut R) -> Self {
                rng.sample(Exp1)
            }

            #[inline]
            fn sample_open_unit<R: Rng + ?Sized>(rng: &mut R) -> Self {
                rng.sample(Open01)
            }
        }
    };
}

impl_scalar!(f32);
impl_scalar!(f64);
