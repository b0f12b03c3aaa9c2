//! Compensated (Kahan–Babuška–Neumaier) accumulation.

use std::ops::{Add, AddAssign};

use crate::Scalar;

/// Running sum that carries the low-order bits lost by each addition.
///
/// Merging two accumulators with `+` is associative up to the final rounding of
/// `value()`, which is what the parallel path reductions rely on.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct NeumaierSum<S> {
    sum: S,
    compensation: S,
}

impl<S: Scalar> NeumaierSum<S> {
    pub fn new() -> Self {
        Self { sum: S::zero(), compensation: S::zero() }
    }

    #[inline]
    pub fn push(&mut self, v: S) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.compensation += (self.sum - t) + v;
        } else {
            self.compensation += (v - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> S {
        self.sum + self.compensation
    }
}

impl<S: Scalar> From<S> for NeumaierSum<S> {
    fn from(v: S) -> Self {
        Self { sum: v, compensation: S::zero() }
    }
}

impl<S: Scalar> AddAssign<S> for NeumaierSum<S> {
    #[inline]
    fn add_assign(&mut self, rhs: S) {
        self.push(rhs);
    }
}

impl<S: Scalar> AddAssign for NeumaierSum<S> {
    fn add_assign(&mut self, rhs: Self) {
        self.push(rhs.sum);
        self.push(rhs.compensation);
    }
}

impl<S: Scalar> Add for NeumaierSum<S> {
    type Output = Self;

    fn add(mut self, rhs: Self) -> Self {
        self += rhs;
        self
    }
}

impl<S: Scalar> std::iter::Sum<S> for NeumaierSum<S> {
    fn sum<I: Iterator<Item = S>>(iter: I) -> Self {
        let mut acc = Self::new();
        for v in iter {
            acc.push(v);
        }
        acc
    }
}

/// Compensated sum of a slice.
pub fn compensated_sum<S: Scalar>(values: &[S]) -> S {
    values.iter().copied().sum::<NeumaierSum<S>>().value()
}
