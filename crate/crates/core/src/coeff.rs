//! Exact rational coefficients.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg};

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::error::EngineError;

/// An arbitrary-precision rational kept in lowest terms with a positive
/// denominator. Zero is always `0/1`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Coefficient {
    num: BigInt,
    den: BigInt,
}

impl Coefficient {
    pub fn new(num: BigInt, den: BigInt) -> Result<Self, EngineError> {
        if den.is_zero() {
            return Err(EngineError::DivisionByZero);
        }
        Ok(Self::reduced(num, den))
    }

    fn reduced(mut num: BigInt, mut den: BigInt) -> Self {
        if den.is_negative() {
            num = -num;
            den = -den;
        }
        if num.is_zero() {
            return Coefficient::zero();
        }
        let g = num.gcd(&den);
        if !g.is_one() {
            num /= &g;
            den /= &g;
        }
        Coefficient { num, den }
    }

    pub fn from_int(n: impl Into<BigInt>) -> Self {
        Coefficient {
            num: n.into(),
            den: BigInt::one(),
        }
    }

    pub fn zero() -> Self {
        Self::from_int(0)
    }

    pub fn one() -> Self {
        Self::from_int(1)
    }

    pub fn numer(&self) -> &BigInt {
        &self.num
    }

    pub fn denom(&self) -> &BigInt {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.num.is_one() && self.den.is_one()
    }

    pub fn is_integer(&self) -> bool {
        self.den.is_one()
    }

    pub fn is_negative(&self) -> bool {
        self.num.is_negative()
    }

    pub fn abs(&self) -> Self {
        Coefficient {
            num: self.num.abs(),
            den: self.den.clone(),
        }
    }

    /// The integer value, when the denominator is one.
    pub fn to_integer(&self) -> Option<BigInt> {
        self.is_integer().then(|| self.num.clone())
    }

    pub fn recip(&self) -> Result<Self, EngineError> {
        Self::new(self.den.clone(), self.num.clone())
    }

    pub fn pow(&self, exp: i64) -> Result<Self, EngineError> {
        if exp < 0 {
            return self.recip()?.pow(-exp);
        }
        let e = u32::try_from(exp).map_err(|_| EngineError::ExponentOverflow)?;
        Ok(Coefficient {
            num: num_traits::pow(self.num.clone(), e as usize),
            den: num_traits::pow(self.den.clone(), e as usize),
        })
    }

    pub fn sign(&self) -> Sign {
        self.num.sign()
    }
}

impl Default for Coefficient {
    fn default() -> Self {
        Coefficient::zero()
    }
}

impl From<i64> for Coefficient {
    fn from(n: i64) -> Self {
        Coefficient::from_int(n)
    }
}

impl From<BigInt> for Coefficient {
    fn from(n: BigInt) -> Self {
        Coefficient::from_int(n)
    }
}

impl Add for &Coefficient {
    type Output = Coefficient;

    fn add(self, rhs: &Coefficient) -> Coefficient {
        if self.den == rhs.den {
            return Coefficient::reduced(&self.num + &rhs.num, self.den.clone());
        }
        Coefficient::reduced(&self.num * &rhs.den + &rhs.num * &self.den, &self.den * &rhs.den)
    }
}

impl Mul for &Coefficient {
    type Output = Coefficient;

    fn mul(self, rhs: &Coefficient) -> Coefficient {
        if self.den.is_one() && rhs.den.is_one() {
            return Coefficient {
                num: &self.num * &rhs.num,
                den: BigInt::one(),
            };
        }
        Coefficient::reduced(&self.num * &rhs.num, &self.den * &rhs.den)
    }
}

impl Neg for &Coefficient {
    type Output = Coefficient;

    fn neg(self) -> Coefficient {
        Coefficient {
            num: -&self.num,
            den: self.den.clone(),
        }
    }
}

impl Neg for Coefficient {
    type Output = Coefficient;

    fn neg(self) -> Coefficient {
        Coefficient {
            num: -self.num,
            den: self.den,
        }
    }
}

impl PartialOrd for Coefficient {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Coefficient {
    fn cmp(&self, other: &Self) -> Ordering {
        (&self.num * &other.den).cmp(&(&other.num * &self.den))
    }
}

impl fmt::Display for Coefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den.is_one() {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

impl fmt::Debug for Coefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}
