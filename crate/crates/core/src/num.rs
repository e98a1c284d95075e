//! Scalar-field abstraction shared by all operators and solvers.
//!
//! Every solver in this crate is generic over [`Scalar`], implemented for
//! `f64` (real problems, e.g. tomography) and `Complex64` (e.g. masked
//! Fourier sampling). Real-coefficient operators written against this trait
//! automatically act component-wise on the real and imaginary parts of a
//! complex vector.

use std::fmt::Debug;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

use num_complex::Complex64;

use crate::rng::SplitMix64;

/// Whether an operator or vector lives over the real or complex field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScalarField {
    Real,
    Complex,
}

impl std::fmt::Display for ScalarField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ScalarField::Real => write!(f, "real"),
            ScalarField::Complex => write!(f, "complex"),
        }
    }
}

/// Field element of the vectors our linear operators act on.
pub trait Scalar:
    Copy
    + Clone
    + Debug
    + PartialEq
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
    + Sum
{
    const FIELD: ScalarField;

    fn zero() -> Self;
    fn one() -> Self;
    /// Embed a real number into the field.
    fn from_real(v: f64) -> Self;
    /// Complex conjugate (identity over the reals).
    fn conj(self) -> Self;
    /// Squared modulus |x|².
    fn abs_sq(self) -> f64;
    /// Multiplication by a real scalar.
    fn scale(self, s: f64) -> Self;
    /// Real part.
    fn re(self) -> f64;
    fn is_finite(self) -> bool;
    /// Sample with independent standard-Gaussian real components
    /// (complex: N(0,1) real and imaginary parts).
    fn standard_gaussian(rng: &mut SplitMix64) -> Self;
    /// Sample noise with E|g|² = 1 (complex: real/imag parts each N(0, 1/2)).
    fn unit_noise(rng: &mut SplitMix64) -> Self;

    fn abs(self) -> f64 {
        self.abs_sq().sqrt()
    }
}

impl Scalar for f64 {
    const FIELD: ScalarField = ScalarField::Real;

    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_real(v: f64) -> Self {
        v
    }
    fn conj(self) -> Self {
        self
    }
    fn abs_sq(self) -> f64 {
        self * self
    }
    fn scale(self, s: f64) -> Self {
        self * s
    }
    fn re(self) -> f64 {
        self
    }
    fn is_finite(self) -> bool {
        f64::is_finite(self)
    }
    fn standard_gaussian(rng: &mut SplitMix64) -> Self {
        rng.next_gaussian()
    }
    fn unit_noise(rng: &mut SplitMix64) -> Self {
        rng.next_gaussian()
    }
}

impl Scalar for Complex64 {
    const FIELD: ScalarField = ScalarField::Complex;

    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn one() -> Self {
        Complex64::new(1.0, 0.0)
    }
    fn from_real(v: f64) -> Self {
        Complex64::new(v, 0.0)
    }
    fn conj(self) -> Self {
        Complex64::conj(&self)
    }
    fn abs_sq(self) -> f64 {
        self.norm_sqr()
    }
    fn scale(self, s: f64) -> Self {
        self * s
    }
    fn re(self) -> f64 {
        self.re
    }
    fn is_finite(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
    fn standard_gaussian(rng: &mut SplitMix64) -> Self {
        let re = rng.next_gaussian();
        let im = rng.next_gaussian();
        Complex64::new(re, im)
    }
    fn unit_noise(rng: &mut SplitMix64) -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let re = rng.next_gaussian() * s;
        let im = rng.next_gaussian() * s;
        Complex64::new(re, im)
    }
}

/// Inner product ⟨x, y⟩ = Σᵢ conj(xᵢ)·yᵢ.
pub fn dot<T: Scalar>(x: &[T], y: &[T]) -> T {
    debug_assert_eq!(x.len(), y.len());
    x.iter().zip(y).map(|(&a, &b)| a.conj() * b).sum()
}

/// Euclidean norm √(Σ |xᵢ|²).
pub fn norm2<T: Scalar>(x: &[T]) -> f64 {
    x.iter().map(|&v| v.abs_sq()).sum::<f64>().sqrt()
}

/// y ← y + a·x with a real scalar.
pub fn axpy<T: Scalar>(y: &mut [T], a: f64, x: &[T]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += xi.scale(a);
    }
}

/// x ← s·x with s real.
pub fn scale_in_place<T: Scalar>(x: &mut [T], s: f64) {
    for v in x.iter_mut() {
        *v = v.scale(s);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dot_conjugates_first_argument() {
        let x = [Complex64::new(0.0, 1.0)];
        let y = [Complex64::new(1.0, 0.0)];
        let d = dot(&x, &y);
        assert_eq!(d, Complex64::new(0.0, -1.0));
    }

    #[test]
    fn norm_is_real_modulus() {
        let x = [Complex64::new(3.0, 4.0)];
        assert!((norm2(&x) - 5.0).abs() < 1e-15);
    }

    #[test]
    fn unit_noise_has_unit_second_moment() {
        let mut rng = SplitMix64::new(7);
        let n = 200_000;
        let mean_sq: f64 = (0..n)
            .map(|_| Complex64::unit_noise(&mut rng).abs_sq())
            .sum::<f64>()
            / n as f64;
        assert!((mean_sq - 1.0).abs() < 0.02, "E|g|^2 = {mean_sq}");
    }
}
