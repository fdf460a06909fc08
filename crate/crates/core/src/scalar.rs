use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, NumAssign};

/// Floating-point scalar accepted by the simplex kernel.
pub trait Scalar:
    Float + FromPrimitive + NumAssign + Debug + Display + Send + Sync + 'static
{
    /// Smallest pivot magnitude and reduced-cost threshold.
    fn pivot_tolerance() -> Self;
    /// Entries below this magnitude are dropped from eta vectors.
    fn drop_tolerance() -> Self;
    /// Primal feasibility slack on phase-one residuals.
    fn feasibility_tolerance() -> Self;

    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }
}

impl Scalar for f64 {
    fn pivot_tolerance() -> Self {
        crate::tolerance::LP
    }
    fn drop_tolerance() -> Self {
        1e-14
    }
    fn feasibility_tolerance() -> Self {
        crate::tolerance::LP
    }
}

impl Scalar for f32 {
    fn pivot_tolerance() -> Self {
        1e-5
    }
    fn drop_tolerance() -> Self {
        1e-7
    }
    fn feasibility_tolerance() -> Self {
        1e-4
    }
}
