//! Scalar abstraction for the numeric core.
//!
//! Losses, configuration maps, and the network are generic over [`Real`] so
//! the same code runs in `f32` for training throughput and in `f64` where
//! precision matters (gradient checks against finite differences, exact loss
//! identities on large grids).

use ndarray::{LinalgScalar, ScalarOperand};
use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};
use std::fmt::{Debug, Display};

/// Floating-point scalar: f32 or f64.
pub trait Real:
    Float
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + ScalarOperand
    + LinalgScalar
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Tag stored in checkpoints so a model saved at one precision is not
    /// silently reloaded at another.
    const TYPE_TAG: &'static str;
}

impl Real for f32 {
    const TYPE_TAG: &'static str = "f32";
}

impl Real for f64 {
    const TYPE_TAG: &'static str = "f64";
}

/// Converts an `f64` constant into the working scalar.
#[inline]
pub fn real<F: Real>(x: f64) -> F {
    F::from_f64(x).expect("f64 constant representable in scalar type")
}
