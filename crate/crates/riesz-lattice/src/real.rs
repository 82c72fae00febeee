use num_traits::{Float, FloatConst, FromPrimitive};
use std::fmt::Debug;
use std::iter::Sum;
use std::ops::AddAssign;

/// Scalar type the series/special-function layer is generic over.
///
/// `f64` is the working type everywhere downstream; `f32` is supported for the
/// closed-form layer (theta series, heat kernels, exact kernel formulas) where
/// single precision is meaningful.
pub trait Scalar:
    Float + FloatConst + FromPrimitive + AddAssign + Sum + Debug + Send + Sync + 'static
{
    fn from_f64c(v: f64) -> Self {
        Self::from_f64(v).expect("f64 constant not representable")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
