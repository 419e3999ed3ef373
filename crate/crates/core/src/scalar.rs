//! Scalar abstractions.
//!
//! Floating-point code is generic over [`Real`] (implemented for `f32` and `f64`).
//! Exact rank computations are generic over [`ExactField`], implemented for a
//! prime field and for arbitrary-precision rationals.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::RealField;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, One, ToPrimitive, Zero};

/// Real scalar used by every floating-point routine in the crate.
pub trait Real: RealField + Copy + FromPrimitive + ToPrimitive + fmt::LowerExp {
    /// Converts an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        nalgebra::convert(x)
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Unit roundoff of the type.
    #[inline]
    fn eps() -> Self {
        Self::default_epsilon()
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// A field with exact arithmetic, used for rank decisions that must not depend on
/// a floating-point threshold.
pub trait ExactField:
    Clone + PartialEq + fmt::Debug + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Neg<Output = Self>
{
    fn zero() -> Self;
    fn one() -> Self;
    fn from_i64(v: i64) -> Self;
    fn is_zero(&self) -> bool;
    /// Multiplicative inverse; only called on nonzero elements.
    fn inv(&self) -> Self;
}

/// Integers modulo the Mersenne prime 2³¹ − 1.
///
/// The rank of an integer matrix over this field never exceeds its rank over ℚ.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Hash)]
pub struct ModPrime(u64);

impl ModPrime {
    pub const P: u64 = (1 << 31) - 1;

    pub fn new(v: i64) -> Self {
        Self(v.rem_euclid(Self::P as i64) as u64)
    }

    pub fn value(self) -> u64 {
        self.0
    }

    fn pow(self, mut e: u64) -> Self {
        let mut base = self.0;
        let mut acc = 1u64;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base % Self::P;
            }
            base = base * base % Self::P;
            e >>= 1;
        }
        Self(acc)
    }
}

impl Add for ModPrime {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self((self.0 + rhs.0) % Self::P)
    }
}

impl Sub for ModPrime {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self((self.0 + Self::P - rhs.0) % Self::P)
    }
}

impl Mul for ModPrime {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        Self(self.0 * rhs.0 % Self::P)
    }
}

impl Neg for ModPrime {
    type Output = Self;
    fn neg(self) -> Self {
        Self((Self::P - self.0) % Self::P)
    }
}

impl ExactField for ModPrime {
    fn zero() -> Self {
        Self(0)
    }
    fn one() -> Self {
        Self(1)
    }
    fn from_i64(v: i64) -> Self {
        Self::new(v)
    }
    fn is_zero(&self) -> bool {
        self.0 == 0
    }
    fn inv(&self) -> Self {
        debug_assert!(self.0 != 0);
        self.pow(Self::P - 2)
    }
}

impl ExactField for BigRational {
    fn zero() -> Self {
        <BigRational as Zero>::zero()
    }
    fn one() -> Self {
        <BigRational as One>::one()
    }
    fn from_i64(v: i64) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }
    fn is_zero(&self) -> bool {
        <BigRational as Zero>::is_zero(self)
    }
    fn inv(&self) -> Self {
        self.recip()
    }
}
