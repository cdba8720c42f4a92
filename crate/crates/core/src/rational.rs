//! Exact rationals. Backed by `num-rational`'s arbitrary-precision
//! `BigRational`, which keeps every value in lowest terms with a positive
//! denominator.

use num_bigint::BigInt;
use num_traits::{One, Zero};

pub type Rational = num_rational::BigRational;

pub fn int(n: u64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// `num / den`, reduced. Panics if `den == 0`.
pub fn ratio(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn zero() -> Rational {
    Rational::zero()
}

pub fn one() -> Rational {
    Rational::one()
}

pub fn pow2(exp: usize) -> BigInt {
    BigInt::one() << exp
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ratios_are_reduced() {
        let r = ratio(10, -4);
        assert_eq!(*r.numer(), BigInt::from(-5));
        assert_eq!(*r.denom(), BigInt::from(2));
        assert_eq!(ratio(1, 7) * ratio(7, 3), ratio(1, 3));
        assert_eq!(pow2(70), BigInt::from(1u128 << 70));
    }
}
