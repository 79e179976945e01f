use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumCast};

/// Floating-point scalar the numerical core is generic over: `f32` or `f64`.
pub trait Scalar:
    Float + FloatConst + FromPrimitive + NumCast + Sum + Default + Debug + Display + Send + Sync + 'static
{
    /// Converts an `f64` constant, panicking only for non-representable values.
    #[inline]
    fn lit(x: f64) -> Self {
        <Self as NumCast>::from(x).expect("f64 literal representable in scalar type")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// `log(e^a + e^b)` without overflow; `-∞` inputs are handled exactly.
    #[inline]
    fn log_add_exp(a: Self, b: Self) -> Self {
        let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
        if hi == Self::neg_infinity() {
            return hi;
        }
        if hi == Self::infinity() {
            return hi;
        }
        hi + (lo - hi).exp().ln_1p()
    }

    /// Logistic function `1/(1+e^{-x})`, exact at `±∞`.
    #[inline]
    fn logistic(x: Self) -> Self {
        if x >= Self::zero() {
            Self::one() / (Self::one() + (-x).exp())
        } else {
            let e = x.exp();
            e / (Self::one() + e)
        }
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Numerically stable `log-sum-exp` over an iterator.
pub fn log_sum_exp<S: Scalar>(values: impl IntoIterator<Item = S> + Clone) -> S {
    let max = values
        .clone()
        .into_iter()
        .fold(S::neg_infinity(), |m, v| if v > m { v } else { m });
    if max == S::neg_infinity() || max == S::infinity() {
        return max;
    }
    let sum: S = values.into_iter().map(|v| (v - max).exp()).sum();
    max + sum.ln()
}
