//! Scalar abstraction for the probability-level math.
//!
//! Table counts are always `u64`; everything computed from proportions is
//! generic over [`Real`], implemented for `f32` and `f64`.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

pub trait Real:
    Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal; panics only if the target cannot represent finite values.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("finite literal")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Tolerance used for simplex-sum checks at this precision.
    fn simplex_tolerance() -> Self;
}

impl Real for f64 {
    fn simplex_tolerance() -> Self {
        1e-12
    }
}

impl Real for f32 {
    fn simplex_tolerance() -> Self {
        1e-5
    }
}

/// Neumaier-compensated sum.
pub fn compensated_sum<T: Real>(values: impl IntoIterator<Item = T>) -> T {
    let mut sum = T::zero();
    let mut comp = T::zero();
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp = comp + ((sum - t) + v);
        } else {
            comp = comp + ((v - t) + sum);
        }
        sum = t;
    }
    sum + comp
}
