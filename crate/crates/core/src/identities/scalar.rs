//! Number types the identity corpus can be evaluated in.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Num, One, Signed, ToPrimitive, Zero};
use std::ops::{Add, Div, Mul, Neg, Rem, Sub};
use twofloat::TwoFloat;

pub trait Real: Clone + Num + Neg<Output = Self> + PartialOrd {
    fn from_f64(x: f64) -> Self;
    fn to_f64(&self) -> f64;
    fn magnitude(&self) -> Self;

    fn int(n: i64) -> Self {
        Self::from_f64(n as f64)
    }
}

impl Real for f64 {
    fn from_f64(x: f64) -> Self {
        x
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn magnitude(&self) -> Self {
        self.abs()
    }
}

/// Double-double number. Wraps [`TwoFloat`] for its error-free sums and
/// products, but divides by long division: the crate's own quotient keeps
/// only double precision when the divisor has a nonzero low word.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Dd(pub TwoFloat);

impl Dd {
    pub fn hi(&self) -> f64 {
        self.0.hi()
    }
}

impl Add for Dd {
    type Output = Dd;
    fn add(self, rhs: Dd) -> Dd {
        Dd(self.0 + rhs.0)
    }
}

impl Sub for Dd {
    type Output = Dd;
    fn sub(self, rhs: Dd) -> Dd {
        Dd(self.0 - rhs.0)
    }
}

impl Mul for Dd {
    type Output = Dd;
    fn mul(self, rhs: Dd) -> Dd {
        Dd(self.0 * rhs.0)
    }
}

impl Div for Dd {
    type Output = Dd;
    fn div(self, rhs: Dd) -> Dd {
        let b = rhs.0;
        let q1 = self.0.hi() / b.hi();
        let r = self.0 - b * q1;
        let q2 = r.hi() / b.hi();
        let r = r - b * q2;
        let q3 = r.hi() / b.hi();
        Dd(TwoFloat::new_add(q1, q2) + q3)
    }
}

impl Rem for Dd {
    type Output = Dd;
    fn rem(self, rhs: Dd) -> Dd {
        Dd(self.0 % rhs.0)
    }
}

impl Neg for Dd {
    type Output = Dd;
    fn neg(self) -> Dd {
        Dd(-self.0)
    }
}

impl Zero for Dd {
    fn zero() -> Dd {
        Dd(TwoFloat::from(0.0))
    }
    fn is_zero(&self) -> bool {
        self.0.hi() == 0.0
    }
}

impl One for Dd {
    fn one() -> Dd {
        Dd(TwoFloat::from(1.0))
    }
}

impl Num for Dd {
    type FromStrRadixErr = <f64 as Num>::FromStrRadixErr;
    fn from_str_radix(s: &str, radix: u32) -> Result<Dd, Self::FromStrRadixErr> {
        f64::from_str_radix(s, radix).map(|x| Dd(TwoFloat::from(x)))
    }
}

impl Real for Dd {
    fn from_f64(x: f64) -> Self {
        Dd(TwoFloat::from(x))
    }
    fn to_f64(&self) -> f64 {
        self.0.hi() + self.0.lo()
    }
    fn magnitude(&self) -> Self {
        Dd(self.0.abs())
    }
}

impl Real for BigRational {
    /// Exact: every finite double is a dyadic rational.
    fn from_f64(x: f64) -> Self {
        BigRational::from_float(x).expect("finite input")
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn magnitude(&self) -> Self {
        self.abs()
    }
    fn int(n: i64) -> Self {
        BigRational::from_integer(BigInt::from(n))
    }
}
