//! Scalar abstraction: the whole core is generic over `f32`/`f64`.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Floating-point scalar the simulator computes in.
///
/// Random sampling always draws `f64` from the seeded generator and converts,
/// so layouts and rollouts are stream-identical across scalar choices.
pub trait Scalar:
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
    /// Lossy conversion from `f64` (rounds to nearest for `f32`).
    fn from_config(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 converts to any scalar")
    }

    /// Conversion to `f64` for reporting and file formats.
    fn to_config(self) -> f64 {
        self.to_f64().expect("scalar converts to f64")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Shorthand used throughout: `real::<S>(0.05)`.
pub fn real<S: Scalar>(x: f64) -> S {
    S::from_config(x)
}
