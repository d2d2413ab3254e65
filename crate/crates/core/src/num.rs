//! Scalar abstraction for the optimization layer.
//!
//! The MILP model, the dense simplex, branch-and-bound and the feasibility
//! checker are written against [`Scalar`] so they run in `f64` (the default)
//! or `f32`. Physical data (energies, prices, times) stays `f64` and is
//! converted once when a model is built.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, NumCast, ToPrimitive};

/// Floating-point scalar usable by the LP/MILP machinery.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + NumCast + Debug + Display + Default + Send + Sync + 'static
{
    /// Primal feasibility tolerance used by the simplex ratio tests.
    fn feasibility_tol() -> Self;
    /// Reduced-cost tolerance used for pricing.
    fn optimality_tol() -> Self;
    /// Smallest pivot magnitude accepted before the pivot is treated as zero.
    fn pivot_tol() -> Self;
    /// Distance from the nearest integer below which a value counts as integral.
    fn integrality_tol() -> Self;
    /// Absolute tolerance used when re-checking rows of a finished solution.
    fn check_tol() -> Self;

    #[inline]
    fn of(value: f64) -> Self {
        <Self as FromPrimitive>::from_f64(value).expect("finite f64 converts to scalar")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }
}

impl Scalar for f64 {
    fn feasibility_tol() -> Self {
        1e-7
    }
    fn optimality_tol() -> Self {
        1e-7
    }
    fn pivot_tol() -> Self {
        1e-9
    }
    fn integrality_tol() -> Self {
        1e-6
    }
    fn check_tol() -> Self {
        1e-6
    }
}

impl Scalar for f32 {
    fn feasibility_tol() -> Self {
        1e-4
    }
    fn optimality_tol() -> Self {
        1e-4
    }
    fn pivot_tol() -> Self {
        1e-5
    }
    fn integrality_tol() -> Self {
        1e-3
    }
    fn check_tol() -> Self {
        1e-2
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conversions_round_trip() {
        assert_eq!(f64::of(2.5), 2.5);
        assert_eq!(f32::of(2.5).as_f64(), 2.5);
    }

    #[test]
    fn f32_tolerances_are_looser() {
        assert!(f32::feasibility_tol().as_f64() > f64::feasibility_tol());
        assert!(f32::check_tol().as_f64() > f64::check_tol());
    }
}
