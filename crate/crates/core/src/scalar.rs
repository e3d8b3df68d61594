//! Scalar abstraction for the geometric side of the toolkit.
//!
//! All curve, strip and horseshoe computations are generic over [`Real`],
//! so the same code runs in `f32` or `f64`. The symbolic side never touches
//! floats; its metric is the exact dyadic type in [`crate::symbolic`].

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, NumAssign};

/// Floating-point scalar: `f32` or `f64`.
pub trait Real:
    Float + FromPrimitive + NumAssign + Debug + Display + Send + Sync + 'static
{
}

impl<T> Real for T where
    T: Float + FromPrimitive + NumAssign + Debug + Display + Send + Sync + 'static
{
}

/// Converts an `f64` literal into the working scalar type.
#[inline]
pub(crate) fn real<F: Real>(v: f64) -> F {
    F::from_f64(v).expect("finite literal must convert")
}

/// Tolerance used for "equals an affine-model quantity" assertions.
///
/// `1e-12` for `f64`; widens to a few epsilons for narrower scalars.
pub(crate) fn affine_tol<F: Real>() -> F {
    let eps_based = F::epsilon() * real::<F>(64.0);
    eps_based.max(real::<F>(1e-12))
}
