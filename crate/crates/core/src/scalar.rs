//! Floating-point abstraction shared by every numerical module.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};

/// Real scalar the spectral machinery is generic over: `f32` or `f64`.
///
/// All tolerances quoted in the tests are for `f64`; `f32` builds work but
/// only reach single-precision accuracy.
pub trait Scalar:
    Float + FloatConst + FromPrimitive + NumAssign + Sum + Debug + Display + Send + Sync + 'static
{
    /// Converts an `f64` literal. Infallible for both supported types.
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("f64 literal representable")
    }

    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable")
    }

    /// Lossless widening for reporting and error payloads.
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// `max(v, k * eps)`: a tolerance that never drops below what the type can resolve.
    fn tol(v: f64, k: f64) -> Self {
        Self::lit(v).max(Self::epsilon() * Self::lit(k))
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
