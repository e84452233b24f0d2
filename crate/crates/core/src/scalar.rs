//! Exact scalar types.
//!
//! Every numeric quantity in an automaton, an encoding or an oracle system is an
//! exact element of an ordered field. The [`Scalar`] trait captures what the
//! rest of the crate needs from such a field, on top of `num-traits`.
//! Floating point types are intentionally not implementors: Fourier-Motzkin
//! elimination and trace validation compare values for equality.

use std::fmt::{Debug, Display};
use std::hash::Hash;

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{One, Signed, ToPrimitive, Zero};

/// An exact ordered field element.
pub trait Scalar:
    Clone + Ord + Hash + Debug + Display + Signed + Send + Sync + 'static
{
    fn from_i64(v: i64) -> Self;

    /// Converts from an arbitrary-precision rational, failing when the value
    /// does not fit the concrete representation.
    fn from_big_rational(r: &BigRational) -> Option<Self>;

    fn to_big_rational(&self) -> BigRational;

    fn is_integral(&self) -> bool;

    /// Exact integer value, if this is an integer that fits in `i64`.
    fn to_i64_exact(&self) -> Option<i64> {
        let r = self.to_big_rational();
        if r.is_integer() {
            r.to_integer().to_i64()
        } else {
            None
        }
    }

    fn half(&self) -> Self {
        self.clone() / Self::from_i64(2)
    }
}

impl Scalar for BigRational {
    fn from_i64(v: i64) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }

    fn from_big_rational(r: &BigRational) -> Option<Self> {
        Some(r.clone())
    }

    fn to_big_rational(&self) -> BigRational {
        self.clone()
    }

    fn is_integral(&self) -> bool {
        self.is_integer()
    }
}

macro_rules! impl_machine_ratio {
    ($int:ty, $to:ident) => {
        impl Scalar for Ratio<$int> {
            fn from_i64(v: i64) -> Self {
                Ratio::from_integer(<$int>::from(v))
            }

            fn from_big_rational(r: &BigRational) -> Option<Self> {
                let n = r.numer().$to()?;
                let d = r.denom().$to()?;
                Some(Ratio::new(n, d))
            }

            fn to_big_rational(&self) -> BigRational {
                BigRational::new(BigInt::from(*self.numer()), BigInt::from(*self.denom()))
            }

            fn is_integral(&self) -> bool {
                self.denom().is_one()
            }
        }
    };
}

impl_machine_ratio!(i64, to_i64);
impl_machine_ratio!(i128, to_i128);

/// Parses `-12`, `2.5` or `5/2` into an exact rational. Decimal literals are
/// exact: `2.5` is `5/2`.
pub fn parse_rational<S: Scalar>(text: &str) -> Option<S> {
    let (neg, body) = match text.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text),
    };
    if body.is_empty() {
        return None;
    }
    let value = if let Some((num, den)) = body.split_once('/') {
        let n = parse_digits(num)?;
        let d = parse_digits(den)?;
        if d.is_zero() {
            return None;
        }
        BigRational::new(n, d)
    } else if let Some((int, frac)) = body.split_once('.') {
        let i = parse_digits(int)?;
        let f = parse_digits(frac)?;
        let scale = num_traits::pow(BigInt::from(10), frac.len());
        BigRational::new(i * &scale + f, scale)
    } else {
        BigRational::from_integer(parse_digits(body)?)
    };
    let value = if neg { -value } else { value };
    S::from_big_rational(&value)
}

fn parse_digits(s: &str) -> Option<BigInt> {
    if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    s.parse().ok()
}

/// Canonical text form: integers as `p`, everything else as `p/q` in lowest
/// terms.
pub fn format_rational<S: Scalar>(value: &S) -> String {
    let r = value.to_big_rational();
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Integer ceiling of `log2(n)`, with the convention that `n <= 1` needs zero
/// bits.
pub fn ceil_log2(n: u64) -> u32 {
    if n <= 1 {
        0
    } else {
        u64::BITS - (n - 1).leading_zeros()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rational;

    fn r(n: i64, d: i64) -> Rational {
        Rational::new(n.into(), d.into())
    }

    #[test]
    fn decimal_literals_are_exact() {
        assert_eq!(parse_rational::<Rational>("2.5"), Some(r(5, 2)));
        assert_eq!(parse_rational::<Rational>("-0.125"), Some(r(-1, 8)));
        assert_eq!(parse_rational::<Rational>("10/4"), Some(r(5, 2)));
        assert_eq!(parse_rational::<Rational>("7"), Some(r(7, 1)));
    }

    #[test]
    fn malformed_literals_are_rejected() {
        for bad in ["", "-", "1/0", "1.", ".5", "1/-2", "abc", "1e3"] {
            assert_eq!(parse_rational::<Rational>(bad), None, "{bad}");
        }
    }

    #[test]
    fn canonical_format_uses_lowest_terms() {
        assert_eq!(format_rational(&r(10, 4)), "5/2");
        assert_eq!(format_rational(&r(-6, 3)), "-2");
        assert_eq!(format_rational(&Ratio::<i64>::new(3, 9)), "1/3");
    }

    #[test]
    fn machine_ratio_conversion_checks_range() {
        let big = parse_rational::<Rational>("123456789012345678901234567890").unwrap();
        assert!(Ratio::<i64>::from_big_rational(&big).is_none());
        assert!(Ratio::<i128>::from_big_rational(&big).is_some());
    }

    #[test]
    fn ceil_log2_matches_definition() {
        assert_eq!(ceil_log2(1), 0);
        assert_eq!(ceil_log2(2), 1);
        assert_eq!(ceil_log2(3), 2);
        assert_eq!(ceil_log2(4), 2);
        assert_eq!(ceil_log2(5), 3);
        assert_eq!(ceil_log2(81), 7);
        assert_eq!(ceil_log2(6561), 13);
    }

    proptest::proptest! {
        #[test]
        fn format_parse_round_trip(n in -10_000i64..10_000, d in 1i64..500) {
            let v = r(n, d);
            let text = format_rational(&v);
            proptest::prop_assert_eq!(parse_rational::<Rational>(&text), Some(v));
        }
    }
}
