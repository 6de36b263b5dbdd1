//! Scalar abstraction shared by every numeric routine in the crate.
//!
//! Everything that touches real numbers is generic over [`Real`], which is
//! implemented for `f32` and `f64`. Model math defaults to `f64` through the
//! aliases exported at the crate root.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};
use std::str::FromStr;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating point scalar: `f32` or `f64`.
pub trait Real:
    Float
    + FromPrimitive
    + ToPrimitive
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum
    + Default
    + Debug
    + Display
    + LowerExp
    + FromStr
    + Send
    + Sync
    + 'static
{
    /// Raw IEEE bit pattern widened to 64 bits, used by lock-free storage.
    fn to_raw_bits(self) -> u64;
    fn from_raw_bits(bits: u64) -> Self;

    /// Lossy conversion from `f64`; every literal in the crate goes through here.
    #[inline]
    fn lit(value: f64) -> Self {
        Self::from_f64(value).expect("f64 literal representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("real converts to f64")
    }

    #[inline]
    fn from_usize_lossy(value: usize) -> Self {
        Self::from_usize(value).expect("count representable")
    }
}

impl Real for f32 {
    #[inline]
    fn to_raw_bits(self) -> u64 {
        u64::from(self.to_bits())
    }

    #[inline]
    fn from_raw_bits(bits: u64) -> Self {
        f32::from_bits(bits as u32)
    }
}

impl Real for f64 {
    #[inline]
    fn to_raw_bits(self) -> u64 {
        self.to_bits()
    }

    #[inline]
    fn from_raw_bits(bits: u64) -> Self {
        f64::from_bits(bits)
    }
}

#[inline]
pub fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = T::zero();
    for (&x, &y) in a.iter().zip(b) {
        acc += x * y;
    }
    acc
}

#[inline]
pub fn squared_norm<T: Real>(a: &[T]) -> T {
    dot(a, a)
}

#[inline]
pub fn squared_euclidean<T: Real>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = T::zero();
    for (&x, &y) in a.iter().zip(b) {
        let diff = x - y;
        acc += diff * diff;
    }
    acc
}

/// `y += alpha * x`
#[inline]
pub fn axpy<T: Real>(alpha: T, x: &[T], y: &mut [T]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Logistic function, evaluated without overflow for large |x|.
#[inline]
pub fn sigmoid<T: Real>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

/// `log(sigmoid(x))`, stable for both tails.
#[inline]
pub fn log_sigmoid<T: Real>(x: T) -> T {
    // log σ(x) = -(max(-x, 0) + ln(1 + e^{-|x|}))
    let neg = -x;
    let hinge = if neg > T::zero() { neg } else { T::zero() };
    -(hinge + (-x.abs()).exp().ln_1p())
}

/// `(σ(x), log σ(x), log σ(-x))` from a single exponential.
#[inline]
pub fn sigmoid_with_logs<T: Real>(x: T) -> (T, T, T) {
    let e = (-x.abs()).exp();
    let soft = e.ln_1p();
    if x >= T::zero() {
        (T::one() / (T::one() + e), -soft, -soft - x)
    } else {
        (e / (T::one() + e), x - soft, -soft)
    }
}
