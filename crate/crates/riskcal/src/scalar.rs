//! Scalar abstraction for the numeric kernels.

use std::fmt::{Debug, Display};

use num_traits::Float;
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Floating-point scalar the numeric code is generic over.
///
/// `f32` and `f64` both satisfy it; the crate-root aliases pin `f64` for the
/// file pipeline. `Float` brings `NumCast`, so `S::from(x)` converts from any
/// primitive.
pub trait Scalar:
    Float + Debug + Display + Serialize + DeserializeOwned + Send + Sync + 'static
{
}

impl<T> Scalar for T where
    T: Float + Debug + Display + Serialize + DeserializeOwned + Send + Sync + 'static
{
}

/// Converts a count or other primitive into `S`.
///
/// Infallible for the sizes this crate produces (counts, lengths, small
/// integers), which are exactly representable in every supported float.
pub fn cast<S: Scalar, P: num_traits::ToPrimitive>(value: P) -> S {
    S::from(value).expect("primitive representable in scalar type")
}
