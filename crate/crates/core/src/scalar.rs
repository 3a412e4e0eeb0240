//! Floating-point abstraction used by the model, trainer and evaluation code.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::str::FromStr;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Scalar type the numerical core is generic over: `f32` or `f64`.
///
/// `Display` is required to print shortest round-trip decimal text in the
/// checkpoint and score formats; `FromStr` to read it back.
pub trait Scalar:
    Float
    + NumAssign
    + FromPrimitive
    + ToPrimitive
    + Sum<Self>
    + FromStr
    + Display
    + Debug
    + Send
    + Sync
    + 'static
{
    /// Nearest representable value of a finite `f64` constant.
    fn from_f64_lossy(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 constant")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().expect("scalar converts to f64")
    }

    /// Parse decimal text, `None` on malformed input.
    fn parse_text(s: &str) -> Option<Self> {
        s.parse().ok()
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
