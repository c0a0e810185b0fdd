//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::str::FromStr;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating point scalar: `f32` or `f64`.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + FromStr + Sum + Default + Debug + Display + Send + Sync + 'static
{
    /// Lossy conversion from `f64`; panics only for types that cannot hold a finite `f64`.
    #[inline]
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 representable in scalar type")
    }

    #[inline]
    fn of_usize(x: usize) -> Self {
        Self::from_usize(x).expect("usize representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar representable as f64")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Sign of a difference with `sign(0) = 0`.
#[inline]
pub(crate) fn sign<F: Real>(x: F) -> F {
    if x > F::zero() {
        F::one()
    } else if x < F::zero() {
        -F::one()
    } else {
        F::zero()
    }
}

/// Mean and sample standard deviation (n - 1 denominator).
pub(crate) fn mean_std<F: Real>(xs: &[F]) -> (F, F) {
    let n = xs.len();
    if n == 0 {
        return (F::nan(), F::nan());
    }
    let mean = xs.iter().copied().sum::<F>() / F::of_usize(n);
    if n < 2 {
        return (mean, F::zero());
    }
    let ss = xs.iter().map(|&x| (x - mean) * (x - mean)).sum::<F>();
    (mean, (ss / F::of_usize(n - 1)).sqrt())
}
