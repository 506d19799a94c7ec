//! Scalar field abstraction.
//!
//! The basic linear algebra (vectors, functionals, operators, module
//! actions, diamonds) is generic over the scalar field; real mode is the
//! default everywhere, complex mode is available for the field-agnostic
//! identities. The optimization layers work over `f64` only.

use nalgebra::ComplexField;

pub type Complex = nalgebra::Complex<f64>;

/// Scalars the model supports: `f64` and `Complex<f64>`.
///
/// `ComplexField` already provides the modulus as `.abs()` (returning the
/// real field, here `f64`) plus conjugation and arithmetic.
pub trait Scalar: ComplexField<RealField = f64> + Copy + 'static {
    fn from_real_f64(x: f64) -> Self;
}

impl Scalar for f64 {
    fn from_real_f64(x: f64) -> Self {
        x
    }
}

impl Scalar for Complex {
    fn from_real_f64(x: f64) -> Self {
        Complex::new(x, 0.0)
    }
}

/// Modulus of a scalar as `f64`; disambiguates between the inherent
/// `f64::abs` and `ComplexField::abs`.
pub fn modulus<S: Scalar>(c: S) -> f64 {
    ComplexField::abs(c)
}
