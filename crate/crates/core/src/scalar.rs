//! Floating-point scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// A floating-point type usable as probability mass: `f32` or `f64`.
///
/// The associated tolerances are scaled to the precision of the type, so that
/// normalization checks and negative-excursion guards stay meaningful in `f32`.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Allowed deviation of a distribution's total mass from 1.
    const MASS_TOLERANCE: f64;
    /// Largest negative rounding excursion tolerated before clamping to zero.
    const NEGATIVE_GUARD: f64;
    /// Masses at or below this are treated as zero inside logarithms.
    const ZERO_MASS: f64 = 1e-15;

    fn lift(x: f64) -> Self {
        Self::from_f64(x).expect("f64 is representable in every Scalar")
    }

    fn lower(self) -> f64 {
        self.to_f64().expect("Scalar converts to f64")
    }
}

impl Scalar for f64 {
    const MASS_TOLERANCE: f64 = 1e-9;
    const NEGATIVE_GUARD: f64 = 1e-12;
}

impl Scalar for f32 {
    const MASS_TOLERANCE: f64 = 1e-5;
    const NEGATIVE_GUARD: f64 = 1e-6;
}
