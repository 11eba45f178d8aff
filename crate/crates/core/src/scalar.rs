use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating point scalar used by the numerical core: `f32` or `f64`.
pub trait Real: Float + FloatConst + FromPrimitive + ToPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static {
    /// Converts an `f64` literal into this type.
    #[inline]
    fn c(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn f64(self) -> f64 {
        self.to_f64().expect("finite conversion to f64")
    }

    /// Relative tolerance used for structural checks such as symmetry.
    fn structural_tol() -> Self;
}

impl Real for f64 {
    fn structural_tol() -> Self {
        1e-12
    }
}

impl Real for f32 {
    fn structural_tol() -> Self {
        1e-5
    }
}
