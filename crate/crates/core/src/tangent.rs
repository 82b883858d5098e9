//! Value/derivative pairs carried by every timestamp and service time.

use core::fmt;
use core::ops::{Add, Sub};

/// A simulated quantity together with its pathwise derivative in θ.
///
/// Addition adds both parts. `max_first`/`min_first` select the whole tangent
/// of the winning operand, so the derivative follows the active branch of the
/// max/min-plus recursion. On equal values the first operand wins.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Tangent {
    pub value: f64,
    pub deriv: f64,
}

impl Tangent {
    pub const ZERO: Tangent = Tangent { value: 0.0, deriv: 0.0 };

    pub const fn new(value: f64, deriv: f64) -> Self {
        Self { value, deriv }
    }

    /// A θ-independent quantity.
    pub const fn constant(value: f64) -> Self {
        Self { value, deriv: 0.0 }
    }

    /// `self ∨ other`, keeping `self` on ties.
    #[inline]
    pub fn max_first(self, other: Tangent) -> Tangent {
        if other.value > self.value {
            other
        } else {
            self
        }
    }

    /// `self ∧ other`, keeping `self` on ties.
    #[inline]
    pub fn min_first(self, other: Tangent) -> Tangent {
        if other.value < self.value {
            other
        } else {
            self
        }
    }

    /// True when the values tie but the derivatives disagree, i.e. the
    /// tie-break decides which derivative propagates.
    #[inline]
    pub fn ties_with(self, other: Tangent) -> bool {
        self.value == other.value && self.deriv != other.deriv
    }

    /// Bitwise equality of both parts.
    pub fn bit_eq(self, other: Tangent) -> bool {
        self.value.to_bits() == other.value.to_bits()
            && self.deriv.to_bits() == other.deriv.to_bits()
    }
}

impl Add for Tangent {
    type Output = Tangent;

    #[inline]
    fn add(self, rhs: Tangent) -> Tangent {
        Tangent::new(self.value + rhs.value, self.deriv + rhs.deriv)
    }
}

impl Sub for Tangent {
    type Output = Tangent;

    #[inline]
    fn sub(self, rhs: Tangent) -> Tangent {
        Tangent::new(self.value - rhs.value, self.deriv - rhs.deriv)
    }
}

impl fmt::Display for Tangent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.value, self.deriv)
    }
}
