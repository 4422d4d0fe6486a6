use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::str::FromStr;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Real scalar used throughout the crate.
///
/// Implemented for `f32` and `f64`. `Display` / `FromStr` are required so that
/// artifacts round-trip through their shortest textual form.
pub trait Scalar:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + FromStr + Sum + Send + Sync + 'static
{
    /// Lossy conversion from an `f64` constant.
    #[inline]
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 constant representable")
    }

    #[inline]
    fn of_usize(x: usize) -> Self {
        Self::from_usize(x).expect("integer representable")
    }

    #[inline]
    fn f64(self) -> f64 {
        self.to_f64().expect("finite scalar")
    }

    /// Absolute tolerance used for "exact" invariants such as the mean-one
    /// density constraint: `1e-12` for `f64`, a few ulps for narrower types.
    #[inline]
    fn tolerance(terms: usize) -> Self {
        let ulps = Self::epsilon() * Self::of_usize(4 * terms.max(1));
        ulps.max(Self::of(1e-12))
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
