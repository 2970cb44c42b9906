//! Scalar abstraction for score and metric arithmetic.
//!
//! All relevance scores, confidences and evaluation metrics are generic over
//! [`Real`] so the same code runs on `f32` or `f64`. The crate-level
//! [`Score`](crate::Score) alias pins the scalar used by the CLI and by every
//! persisted file format.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, ToPrimitive};
use serde::{de::DeserializeOwned, Serialize};

/// Floating-point scalar: `f32` or `f64`.
pub trait Real:
    Float
    + FromPrimitive
    + ToPrimitive
    + Debug
    + Display
    + Default
    + Serialize
    + DeserializeOwned
    + Send
    + Sync
    + 'static
{
}

impl Real for f32 {}
impl Real for f64 {}

/// `num / den` as a scalar; 0 when the denominator is 0.
pub fn ratio<S: Real>(num: u64, den: u64) -> S {
    if den == 0 {
        S::zero()
    } else {
        from_u64::<S>(num) / from_u64::<S>(den)
    }
}

pub(crate) fn from_u64<S: Real>(v: u64) -> S {
    S::from_u64(v).expect("u64 is representable by any float")
}

pub(crate) fn half<S: Real>() -> S {
    S::one() / (S::one() + S::one())
}
