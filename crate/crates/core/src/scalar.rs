//! Scalar abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::str::FromStr;

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};

/// Real floating-point scalar the model can be evaluated in (`f32` or `f64`).
///
/// All tolerances quoted in the documentation refer to `f64`; the `f32`
/// instantiation exists for cheap exploratory runs and loses the cancellation
/// between the large unconditional QPC rate and the small conditional ones.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + std::fmt::LowerExp
    + NumAssign
    + Sum
    + FromStr
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + serde::Serialize
    + 'static
{
    /// Converts an `f64` literal; exact for `f64`, correctly rounded for `f32`.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal must be representable")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

pub type C<T> = Complex<T>;

#[inline]
pub(crate) fn cr<T: Real>(re: T) -> C<T> {
    Complex::new(re, T::zero())
}
