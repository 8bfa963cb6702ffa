//! Scalar abstraction for the numeric core.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Floating-point scalar the state algebra and the analysis are generic over.
///
/// `f64` is the precision behind the crate-root aliases and the one the
/// documented tolerances refer to; `f32` satisfies the bounds as well, with
/// correspondingly looser accuracy.
pub trait Real:
    Float
    + FloatConst
    + NumAssign
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
}

impl<T> Real for T where
    T: Float
        + FloatConst
        + NumAssign
        + FromPrimitive
        + ToPrimitive
        + Sum
        + Debug
        + Display
        + Send
        + Sync
        + 'static
{
}

/// Converts an `f64` constant into the working scalar type.
pub(crate) fn real<T: Real>(v: f64) -> T {
    T::from_f64(v).expect("constant not representable in scalar type")
}

/// Converts a scalar into `f64`, e.g. for random sampling thresholds.
pub(crate) fn as_f64<T: Real>(v: T) -> f64 {
    v.to_f64().expect("scalar not convertible to f64")
}

/// Widens an `f64`-tuned tolerance for lower-precision scalars; leaves it
/// unchanged for `f64`.
pub(crate) fn scaled_tol<T: Real>(base: f64) -> f64 {
    base.max(as_f64(T::epsilon()) * 128.0)
}
