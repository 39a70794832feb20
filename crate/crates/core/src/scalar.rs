//! Numeric abstractions shared by the model layer.
//!
//! [`Scalar`] covers everything the base-fee update law needs (field
//! arithmetic and ordering), so it is satisfied by `f32`, `f64` and exact
//! rationals such as `num_rational::Ratio<i128>`. [`Real`] adds the
//! transcendental operations needed by solvers and statistics.

use std::fmt::Debug;

use num_traits::{Float, FromPrimitive, Num};

/// Ordered field element usable by the fee-update law.
pub trait Scalar: Num + FromPrimitive + PartialOrd + Copy + Debug + Send + Sync + 'static {
    /// Converts a gas amount or count into the scalar type.
    ///
    /// Panics only if the type cannot represent the integer at all, which
    /// does not happen for the float and `Ratio<i128>` instantiations.
    fn from_count(n: u64) -> Self {
        Self::from_u64(n).expect("integer not representable in scalar type")
    }

    fn max_of(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }

    fn min_of(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }
}

impl<T> Scalar for T where T: Num + FromPrimitive + PartialOrd + Copy + Debug + Send + Sync + 'static {}

/// Floating-point scalar.
pub trait Real: Scalar + Float {
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal not representable")
    }
}

impl<T> Real for T where T: Scalar + Float {}
