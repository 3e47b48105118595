//! Scalar abstraction shared by every numeric kernel in the crate.
//!
//! All floating-point code is written against [`Real`], so the same tables,
//! quadrature and error-term machinery run in `f32` or `f64`. Integer counts
//! (Ψ, Φ, smooth numbers) are always exact `u64`.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Floating-point scalar used throughout the crate.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Default
    + Debug
    + Display
    + LowerExp
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal. Panics only if `T` cannot represent finite `f64`s.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("f64 literal not representable")
    }

    #[inline]
    fn from_count(n: u64) -> Self {
        Self::from_u64(n).expect("count not representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Euler's constant γ, 20 significant digits.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_860_61;
/// e^{−γ}, 20 significant digits.
pub const EXP_NEG_GAMMA: f64 = 0.561_459_483_566_885_169_82;
/// e^{γ}, 20 significant digits.
pub const EXP_GAMMA: f64 = 1.781_072_417_990_197_985_2;

/// Neumaier-compensated running sum.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum<T> {
    sum: T,
    comp: T,
}

impl<T: Real> CompensatedSum<T> {
    pub fn new() -> Self {
        Self { sum: T::zero(), comp: T::zero() }
    }

    #[inline]
    pub fn add(&mut self, v: T) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> T {
        self.sum + self.comp
    }
}

impl<T: Real> Extend<T> for CompensatedSum<T> {
    fn extend<I: IntoIterator<Item = T>>(&mut self, iter: I) {
        for v in iter {
            self.add(v);
        }
    }
}

/// Fractional part `{x} = x − ⌊x⌋`.
#[inline]
pub fn frac<T: Real>(x: T) -> T {
    x - x.floor()
}
