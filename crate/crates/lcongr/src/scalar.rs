//! Floating-point scalar abstraction for the analytic side (periods, series, embeddings).

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Send + Sync + 'static
{
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("representable constant")
    }

    fn of_i64(x: i64) -> Self {
        Self::from_i64(x).expect("representable integer")
    }

    /// Relative working precision used for convergence tests.
    fn working_eps() -> Self;
}

impl Real for f64 {
    fn working_eps() -> Self {
        1e-15
    }
}

impl Real for f32 {
    fn working_eps() -> Self {
        1e-6
    }
}
