//! Scalar abstractions.
//!
//! Continuous solvers (quadrature, ODE, principal problems) are generic over
//! [`Real`], implemented for `f32` and `f64`. The N-player backward recursion
//! only needs field arithmetic and is generic over [`Field`], which also admits
//! exact rationals such as `num_rational::BigRational`.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, Num, ToPrimitive};

/// Floating point scalar: `f32` or `f64`.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Default
    + Debug
    + Display
    + Sum
    + Send
    + Sync
    + 'static
{
    /// Default relative tolerance for quadrature at this precision.
    fn default_quad_tol() -> Self {
        let floor = Self::epsilon() * lit(100.0);
        floor.max(lit(1e-10))
    }

    /// Default tolerance for the state ODE at this precision.
    fn default_ode_tol() -> Self {
        let floor = Self::epsilon() * lit(1000.0);
        floor.max(lit(1e-8))
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Ordered field: enough structure for the N-player value recursion.
pub trait Field: Num + Clone + PartialOrd + FromPrimitive + Debug {}

impl<T> Field for T where T: Num + Clone + PartialOrd + FromPrimitive + Debug {}

/// Converts an `f64` literal into the working precision.
#[inline]
pub fn lit<F: Real>(x: f64) -> F {
    F::from_f64(x).expect("f64 literal representable in target scalar")
}

/// Converts a count into the working precision.
#[inline]
pub fn count<F: FromPrimitive>(n: usize) -> F {
    F::from_usize(n).expect("count representable in target scalar")
}

/// Lossy conversion used for diagnostics and error payloads.
#[inline]
pub fn to_f64<F: ToPrimitive>(x: F) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}
