//! Adaptive Gauss–Kronrod (7/15) quadrature.

use crate::error::{Error, Result};
use crate::Scalar;

/// Kronrod abscissae on [-1, 1], non-negative half, descending; the last is 0.
pub(crate) const KRONROD_NODES: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

pub(crate) const KRONROD_WEIGHTS: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

/// Gauss weights for the embedded 7-point rule (odd Kronrod indices).
const GAUSS_WEIGHTS: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

const MAX_INTERVALS: usize = 4_000;

#[derive(Debug, Clone, Copy)]
pub struct Estimate<S> {
    pub value: S,
    pub error: S,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy)]
struct Panel<S> {
    a: S,
    b: S,
    value: S,
    error: S,
}

fn kronrod_panel<S: Scalar, F: FnMut(S) -> S>(f: &mut F, a: S, b: S) -> Panel<S> {
    let half = (b - a) * S::of(0.5);
    let mid = (a + b) * S::of(0.5);
    let fc = f(mid);
    let mut kronrod = fc * S::of(KRONROD_WEIGHTS[7]);
    let mut gauss = fc * S::of(GAUSS_WEIGHTS[3]);
    for i in 0..7 {
        let dx = half * S::of(KRONROD_NODES[i]);
        let pair = f(mid - dx) + f(mid + dx);
        kronrod += pair * S::of(KRONROD_WEIGHTS[i]);
        if i % 2 == 1 {
            gauss += pair * S::of(GAUSS_WEIGHTS[i / 2]);
        }
    }
    let value = kronrod * half;
    let error = ((kronrod - gauss) * half).abs();
    Panel { a, b, value, error }
}

/// Integrate `f` over the finite interval `[a, b]` to absolute tolerance `abs_tol`.
///
/// Bisects the panel with the largest error estimate until the summed estimate
/// drops below the tolerance.
pub fn integrate<S: Scalar, F: FnMut(S) -> S>(mut f: F, a: S, b: S, abs_tol: S) -> Result<Estimate<S>> {
    if a == b {
        return Ok(Estimate { value: S::zero(), error: S::zero(), evaluations: 0 });
    }
    let mut panels = vec![kronrod_panel(&mut f, a, b)];
    let mut evaluations = 15;
    loop {
        let total_err: S = panels.iter().map(|p| p.error).sum();
        if total_err <= abs_tol {
            break;
        }
        if panels.len() >= MAX_INTERVALS {
            let value: S = panels.iter().map(|p| p.value).sum();
            return Err(Error::Quadrature { estimate: value.as_f64(), error_estimate: total_err.as_f64() });
        }
        let (worst, _) = panels
            .iter()
            .enumerate()
            .fold((0, S::neg_infinity()), |acc, (i, p)| if p.error > acc.1 { (i, p.error) } else { acc });
        let p = panels.swap_remove(worst);
        let mid = (p.a + p.b) * S::of(0.5);
        if mid <= p.a || mid >= p.b {
            // Interval can no longer be split in this precision.
            let value: S = panels.iter().map(|p| p.value).sum::<S>() + p.value;
            return Err(Error::Quadrature { estimate: value.as_f64(), error_estimate: total_err.as_f64() });
        }
        panels.push(kronrod_panel(&mut f, p.a, mid));
        panels.push(kronrod_panel(&mut f, mid, p.b));
        evaluations += 30;
    }
    let mut value = crate::sum::NeumaierSum::new();
    let mut error = S::zero();
    for p in &panels {
        value += p.value;
        error += p.error;
    }
    Ok(Estimate { value: value.value(), error, evaluations })
}

/// Integrate over `[a, +inf)` through the map `x = a + t / (1 - t)`.
pub fn integrate_to_infinity<S: Scalar, F: FnMut(S) -> S>(mut f: F, a: S, abs_tol: S) -> Result<Estimate<S>> {
    integrate(
        |t: S| {
            let one_minus = S::one() - t;
            let x = a + t / one_minus;
            let v = f(x) / (one_minus * one_minus);
            if v.is_finite() {
                v
            } else {
                S::zero()
            }
        },
        S::zero(),
        S::one(),
        abs_tol,
    )
}

/// Integrate over the whole real line.
pub fn integrate_real_line<S: Scalar, F: FnMut(S) -> S>(mut f: F, abs_tol: S) -> Result<Estimate<S>> {
    let half_tol = abs_tol * S::of(0.5);
    let right = integrate_to_infinity(&mut f, S::zero(), half_tol)?;
    let left = integrate_to_infinity(|x: S| f(-x), S::zero(), half_tol)?;
    Ok(Estimate {
        value: right.value + left.value,
        error: right.error + left.error,
        evaluations: right.evaluations + left.evaluations,
    })
}
