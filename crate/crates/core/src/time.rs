//! Exact time points in the quadratic field Q[√2].
//!
//! A [`Time`] is `rat + sqrt2 * √2` with both coefficients arbitrary-precision
//! rationals. Since 1 and √2 are linearly independent over Q, two values are
//! equal iff both coefficients agree, and ordering is decided exactly.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};
use std::str::FromStr;

use num::bigint::{BigInt, Sign};
use num::rational::BigRational;
use num::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::ParseError;

/// An exact element `rat + sqrt2·√2` of Q[√2].
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Time {
    rat: BigRational,
    sqrt2: BigRational,
}

fn ratio(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// Sign of `p + q√2` for rationals p, q.
fn sign_of(p: &BigRational, q: &BigRational) -> Ordering {
    let sp = p.cmp(&BigRational::zero());
    let sq = q.cmp(&BigRational::zero());
    if sq == Ordering::Equal {
        return sp;
    }
    if sp == Ordering::Equal || sp == sq {
        return sq;
    }
    // opposite signs: compare p² against 2q²
    let lhs = p * p;
    let rhs = q * q * BigRational::from_integer(BigInt::from(2));
    match lhs.cmp(&rhs) {
        Ordering::Greater => sp,
        Ordering::Less => sq,
        Ordering::Equal => Ordering::Equal,
    }
}

impl Time {
    pub fn new(rat: BigRational, sqrt2: BigRational) -> Self {
        Time { rat, sqrt2 }
    }

    pub fn zero() -> Self {
        Time::default()
    }

    pub fn from_int(n: i64) -> Self {
        Time::new(BigRational::from_integer(n.into()), BigRational::zero())
    }

    /// The rational `n/d`.
    pub fn frac(n: i64, d: i64) -> Self {
        Time::new(ratio(n, d), BigRational::zero())
    }

    pub fn from_rational(r: BigRational) -> Self {
        Time::new(r, BigRational::zero())
    }

    pub fn sqrt2() -> Self {
        Time::new(BigRational::zero(), BigRational::one())
    }

    /// `a + b√2` from integer coefficients.
    pub fn from_parts(a: i64, b: i64) -> Self {
        Time::new(
            BigRational::from_integer(a.into()),
            BigRational::from_integer(b.into()),
        )
    }

    pub fn rat_part(&self) -> &BigRational {
        &self.rat
    }

    pub fn sqrt2_part(&self) -> &BigRational {
        &self.sqrt2
    }

    pub fn is_zero(&self) -> bool {
        self.rat.is_zero() && self.sqrt2.is_zero()
    }

    pub fn is_rational(&self) -> bool {
        self.sqrt2.is_zero()
    }

    pub fn signum(&self) -> Ordering {
        sign_of(&self.rat, &self.sqrt2)
    }

    pub fn is_positive(&self) -> bool {
        self.signum() == Ordering::Greater
    }

    pub fn is_negative(&self) -> bool {
        self.signum() == Ordering::Less
    }

    pub fn abs(&self) -> Time {
        if self.is_negative() {
            -self.clone()
        } else {
            self.clone()
        }
    }

    pub fn scale(&self, k: &BigRational) -> Time {
        Time::new(&self.rat * k, &self.sqrt2 * k)
    }

    pub fn scale_int(&self, k: i64) -> Time {
        self.scale(&BigRational::from_integer(k.into()))
    }

    pub fn half(&self) -> Time {
        self.scale(&ratio(1, 2))
    }

    /// Midpoint of `self` and `other`.
    pub fn midpoint(&self, other: &Time) -> Time {
        (self + other).half()
    }

    pub fn min(self, other: Time) -> Time {
        if other < self {
            other
        } else {
            self
        }
    }

    pub fn max(self, other: Time) -> Time {
        if other > self {
            other
        } else {
            self
        }
    }

    /// Exact quotient in the field; `None` when dividing by zero.
    pub fn checked_div(&self, other: &Time) -> Option<Time> {
        if other.is_zero() {
            return None;
        }
        // (a + b√2)/(c + e√2) = (a + b√2)(c - e√2) / (c² - 2e²)
        let two = BigRational::from_integer(BigInt::from(2));
        let (a, b, c, e) = (&self.rat, &self.sqrt2, &other.rat, &other.sqrt2);
        let norm = c * c - &two * e * e;
        let re = (a * c - &two * b * e) / &norm;
        let im = (b * c - a * e) / &norm;
        Some(Time::new(re, im))
    }

    /// Largest integer `n` with `n <= self`.
    pub fn floor(&self) -> BigInt {
        let mut n = match self.to_f64_approx().floor() {
            x if x.is_finite() && x.abs() < 1e15 => BigInt::from(x as i64),
            _ => self.coarse_floor(),
        };
        loop {
            let nt = Time::from_rational(BigRational::from_integer(n.clone()));
            if nt > *self {
                n -= 1;
                continue;
            }
            let next = Time::from_rational(BigRational::from_integer(&n + 1));
            if next <= *self {
                n += 1;
                continue;
            }
            return n;
        }
    }

    // Bracketing start for huge magnitudes: floor(rat) + floor(sqrt2 * 1.41421356) roughly,
    // refined by the exact loop in `floor`.
    fn coarse_floor(&self) -> BigInt {
        let r = self.rat.floor().to_integer();
        let s = (&self.sqrt2 * ratio(141_421_356, 100_000_000)).floor().to_integer();
        r + s
    }

    /// `self - P * floor(self / P)`, the representative in `[0, P)`.
    pub fn rem_euclid(&self, period: &Time) -> Time {
        let q = self
            .checked_div(period)
            .expect("period must be non-zero")
            .floor();
        let k = BigRational::from_integer(q);
        self - &period.scale(&k)
    }

    /// Floating-point approximation, for display and heuristics only.
    pub fn to_f64_approx(&self) -> f64 {
        let r = self.rat.to_f64().unwrap_or(f64::NAN);
        let s = self.sqrt2.to_f64().unwrap_or(f64::NAN);
        r + s * std::f64::consts::SQRT_2
    }

    /// Correctly rounded decimal expansion with `digits` fractional digits
    /// (ties rounded away from zero).
    pub fn to_decimal(&self, digits: usize) -> String {
        let neg = self.is_negative();
        let mag = self.abs();
        let scale = BigRational::from_integer(num::pow(BigInt::from(10), digits));
        let scaled = mag.scale(&scale) + Time::frac(1, 2);
        let n = scaled.floor();
        let s = n.to_str_radix(10);
        let s = if s.len() <= digits {
            format!("{}{}", "0".repeat(digits + 1 - s.len()), s)
        } else {
            s
        };
        let (int, frac) = s.split_at(s.len() - digits);
        let body = if digits == 0 {
            int.to_string()
        } else {
            format!("{int}.{frac}")
        };
        if neg && n.sign() != Sign::NoSign {
            format!("-{body}")
        } else {
            body
        }
    }
}

fn fmt_rational(r: &BigRational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

impl fmt::Display for Time {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let coeff = |q: &BigRational| -> String {
            if q.is_one() {
                "sqrt2".to_string()
            } else {
                format!("{}*sqrt2", fmt_rational(q))
            }
        };
        match (self.rat.is_zero(), self.sqrt2.is_zero()) {
            (_, true) => write!(f, "{}", fmt_rational(&self.rat)),
            (true, false) => {
                if self.sqrt2.is_negative() {
                    write!(f, "-{}", coeff(&-self.sqrt2.clone()))
                } else {
                    write!(f, "{}", coeff(&self.sqrt2))
                }
            }
            (false, false) => {
                if self.sqrt2.is_negative() {
                    write!(f, "{} - {}", fmt_rational(&self.rat), coeff(&-self.sqrt2.clone()))
                } else {
                    write!(f, "{} + {}", fmt_rational(&self.rat), coeff(&self.sqrt2))
                }
            }
        }
    }
}

impl fmt::Debug for Time {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Time({self})")
    }
}

impl Ord for Time {
    fn cmp(&self, other: &Self) -> Ordering {
        if self.sqrt2 == other.sqrt2 {
            return self.rat.cmp(&other.rat);
        }
        sign_of(&(&self.rat - &other.rat), &(&self.sqrt2 - &other.sqrt2))
    }
}

impl PartialOrd for Time {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

macro_rules! binop {
    ($trait:ident, $method:ident, $op:tt) => {
        impl<'a> $trait<&'a Time> for &'a Time {
            type Output = Time;
            fn $method(self, rhs: &'a Time) -> Time {
                Time::new(&self.rat $op &rhs.rat, &self.sqrt2 $op &rhs.sqrt2)
            }
        }
        impl $trait<Time> for Time {
            type Output = Time;
            fn $method(self, rhs: Time) -> Time {
                Time::new(self.rat $op rhs.rat, self.sqrt2 $op rhs.sqrt2)
            }
        }
        impl<'a> $trait<&'a Time> for Time {
            type Output = Time;
            fn $method(self, rhs: &'a Time) -> Time {
                Time::new(self.rat $op &rhs.rat, self.sqrt2 $op &rhs.sqrt2)
            }
        }
    };
}

binop!(Add, add, +);
binop!(Sub, sub, -);

impl AddAssign<&Time> for Time {
    fn add_assign(&mut self, rhs: &Time) {
        self.rat += &rhs.rat;
        self.sqrt2 += &rhs.sqrt2;
    }
}

impl SubAssign<&Time> for Time {
    fn sub_assign(&mut self, rhs: &Time) {
        self.rat -= &rhs.rat;
        self.sqrt2 -= &rhs.sqrt2;
    }
}

impl Neg for Time {
    type Output = Time;
    fn neg(self) -> Time {
        Time::new(-self.rat, -self.sqrt2)
    }
}

impl Mul<&Time> for &Time {
    type Output = Time;
    fn mul(self, rhs: &Time) -> Time {
        let two = BigRational::from_integer(BigInt::from(2));
        Time::new(
            &self.rat * &rhs.rat + two * &self.sqrt2 * &rhs.sqrt2,
            &self.rat * &rhs.sqrt2 + &self.sqrt2 * &rhs.rat,
        )
    }
}

impl From<i64> for Time {
    fn from(n: i64) -> Self {
        Time::from_int(n)
    }
}

fn parse_rational(s: &str) -> Result<BigRational, ParseError> {
    let bad = || ParseError::new(format!("invalid rational `{s}`"));
    if s.is_empty() {
        return Err(bad());
    }
    match s.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().map_err(|_| bad())?;
            let d: BigInt = d.trim().parse().map_err(|_| bad())?;
            if d.is_zero() {
                return Err(ParseError::new(format!("zero denominator in `{s}`")));
            }
            Ok(BigRational::new(n, d))
        }
        None => Ok(BigRational::from_integer(s.trim().parse().map_err(|_| bad())?)),
    }
}

impl FromStr for Time {
    type Err = ParseError;

    /// Accepts `a/b + c/e * sqrt2` with optional spaces, signs, and either
    /// term omitted (`sqrt2`, `-3*sqrt2`, `1/2`, `1 - sqrt2`).
    fn from_str(input: &str) -> Result<Self, ParseError> {
        let compact: String = input.chars().filter(|c| !c.is_whitespace()).collect();
        if compact.is_empty() {
            return Err(ParseError::new("empty time literal"));
        }
        // split into signed terms
        let mut terms: Vec<(bool, String)> = Vec::new();
        let mut cur = String::new();
        let mut neg = false;
        for (i, ch) in compact.chars().enumerate() {
            if ch == '+' || ch == '-' {
                if cur.is_empty() {
                    if i == 0 {
                        neg = ch == '-';
                        continue;
                    }
                    return Err(ParseError::new(format!("dangling sign in `{input}`")));
                }
                terms.push((neg, std::mem::take(&mut cur)));
                neg = ch == '-';
            } else {
                cur.push(ch);
            }
        }
        if cur.is_empty() {
            return Err(ParseError::new(format!("trailing sign in `{input}`")));
        }
        terms.push((neg, cur));

        let mut rat = BigRational::zero();
        let mut sq = BigRational::zero();
        for (neg, term) in terms {
            let (value, is_sqrt) = if term == "sqrt2" {
                (BigRational::one(), true)
            } else if let Some(c) = term.strip_suffix("*sqrt2") {
                (parse_rational(c)?, true)
            } else if let Some(c) = term.strip_prefix("sqrt2*") {
                (parse_rational(c)?, true)
            } else {
                (parse_rational(&term)?, false)
            };
            let value = if neg { -value } else { value };
            if is_sqrt {
                sq += value;
            } else {
                rat += value;
            }
        }
        Ok(Time::new(rat, sq))
    }
}

impl Serialize for Time {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Time {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            S(String),
            I(i64),
        }
        match Raw::deserialize(d)? {
            Raw::S(s) => s.parse().map_err(serde::de::Error::custom),
            Raw::I(i) => Ok(Time::from_int(i)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(s: &str) -> Time {
        s.parse().unwrap()
    }

    #[test]
    fn compare_examples() {
        assert_eq!(Time::zero().cmp(&Time::zero()), Ordering::Equal);
        assert_eq!(Time::from_int(1).cmp(&Time::sqrt2()), Ordering::Less);
        // 9 - 8 > 0
        assert_eq!(Time::from_int(3).cmp(&Time::from_parts(0, 2)), Ordering::Greater);
    }

    #[test]
    fn arithmetic_examples() {
        assert_eq!(Time::from_int(1) + Time::sqrt2(), Time::from_parts(1, 1));
        assert!((Time::from_parts(1, 1) - Time::from_parts(1, 1)).is_zero());
        let x = Time::new(ratio(1, 2), ratio(1, 3));
        assert_eq!(x.scale_int(3), Time::new(ratio(3, 2), ratio(1, 1)));
    }

    #[test]
    fn decimal_examples() {
        assert_eq!(Time::sqrt2().to_decimal(5), "1.41421");
        assert_eq!(Time::from_int(2).to_decimal(3), "2.000");
        assert_eq!(Time::from_parts(1, 1).to_decimal(3), "2.414");
        assert_eq!(Time::frac(-1, 8).to_decimal(2), "-0.13");
        assert_eq!(Time::frac(1, 1000).to_decimal(2), "0.00");
        assert_eq!((-Time::sqrt2()).to_decimal(4), "-1.4142");
    }

    #[test]
    fn parse_forms() {
        assert_eq!(t("1/2 + 3/4 * sqrt2"), Time::new(ratio(1, 2), ratio(3, 4)));
        assert_eq!(t("sqrt2"), Time::sqrt2());
        assert_eq!(t("-sqrt2"), -Time::sqrt2());
        assert_eq!(t("1-sqrt2"), Time::from_parts(1, -1));
        assert_eq!(t("7"), Time::from_int(7));
        assert_eq!(t("-3/6"), Time::frac(-1, 2));
        assert_eq!(t("2*sqrt2 + 1"), Time::from_parts(1, 2));
        assert!("".parse::<Time>().is_err());
        assert!("1/0".parse::<Time>().is_err());
        assert!("1 +".parse::<Time>().is_err());
        assert!("abc".parse::<Time>().is_err());
    }

    #[test]
    fn display_roundtrip() {
        for s in ["0", "3/2", "sqrt2", "-sqrt2", "1 + sqrt2", "1/2 - 3/4*sqrt2", "-2*sqrt2"] {
            let x = t(s);
            assert_eq!(x.to_string().parse::<Time>().unwrap(), x, "{s}");
        }
        assert_eq!(t("1 + sqrt2").to_string(), "1 + sqrt2");
        assert_eq!(t("1/2 - 3/4*sqrt2").to_string(), "1/2 - 3/4*sqrt2");
    }

    #[test]
    fn floor_and_rem() {
        assert_eq!(Time::sqrt2().floor(), BigInt::from(1));
        assert_eq!((-Time::sqrt2()).floor(), BigInt::from(-2));
        assert_eq!(Time::from_int(3).floor(), BigInt::from(3));
        let p = Time::frac(5, 2);
        assert_eq!(Time::frac(53, 10).rem_euclid(&p), Time::frac(3, 10));
        assert_eq!(Time::frac(-1, 2).rem_euclid(&p), Time::from_int(2));
    }

    #[test]
    fn division_inverts_multiplication() {
        let a = Time::new(ratio(3, 7), ratio(-2, 5));
        let b = Time::new(ratio(1, 3), ratio(4, 9));
        let q = a.checked_div(&b).unwrap();
        assert_eq!(&q * &b, a);
        assert!(a.checked_div(&Time::zero()).is_none());
    }
}
