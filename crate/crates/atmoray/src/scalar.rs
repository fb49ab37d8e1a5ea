//! Numeric abstraction the whole solver is generic over.
//!
//! [`Scalar`] is implemented by `f64` (plain runs) and by
//! [`crate::sensitivity::DualScalar`] (runs that carry one forward-mode
//! derivative). Comparisons and branches look at the *value* only, so a dual
//! run follows exactly the same control flow as the plain run it
//! differentiates — the derivative simply rides along through every
//! arithmetic operation, including the Newton updates of the thermal solve.
//!
//! All transcendental functions route through `libm` (not `std`) so that
//! `std` and `no_std` builds of the same computation produce bit-identical
//! results.

use core::fmt::Debug;
use core::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};

/// A field element the solver can run on: `f64` or a dual number.
///
/// Mixed-mode arithmetic with plain `f64` on the right-hand side is part of
/// the contract (`S * f64`, `S + f64`, …) because grid geometry, quadrature
/// weights and frequencies stay `f64` even in a dual-number run; only
/// radiative quantities (κ, J, T, …) are generic.
pub trait Scalar:
    Copy
    + Debug
    + PartialOrd
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
    + AddAssign
    + SubAssign
{
    /// Additive identity.
    const ZERO: Self;
    /// Multiplicative identity.
    const ONE: Self;

    /// Lift a constant. The derivative part (if any) starts at zero.
    fn from_f64(x: f64) -> Self;

    /// The value part; this is what all branches and comparisons see.
    fn value(self) -> f64;

    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn sqrt(self) -> Self;
    fn abs(self) -> Self;

    /// Value-ordered maximum (ties keep `self`).
    fn max(self, other: Self) -> Self {
        if other.value() > self.value() {
            other
        } else {
            self
        }
    }

    /// Value-ordered minimum (ties keep `self`).
    fn min(self, other: Self) -> Self {
        if other.value() < self.value() {
            other
        } else {
            self
        }
    }

    /// Exact identity including any derivative part.
    ///
    /// `PartialEq`/`PartialOrd` on dual numbers look at values only; kernel
    /// deduplication needs to know when two scalars are the *same number in
    /// every component*, which this answers.
    fn exactly_eq(self, other: Self) -> bool;
}

impl Scalar for f64 {
    const ZERO: Self = 0.0;
    const ONE: Self = 1.0;

    #[inline]
    fn from_f64(x: f64) -> Self {
        x
    }

    #[inline]
    fn value(self) -> f64 {
        self
    }

    #[inline]
    fn exp(self) -> Self {
        libm::exp(self)
    }

    #[inline]
    fn ln(self) -> Self {
        libm::log(self)
    }

    #[inline]
    fn sqrt(self) -> Self {
        libm::sqrt(self)
    }

    #[inline]
    fn abs(self) -> Self {
        libm::fabs(self)
    }

    #[inline]
    fn exactly_eq(self, other: Self) -> bool {
        self.to_bits() == other.to_bits()
    }
}
