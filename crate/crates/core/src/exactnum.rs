//! Exact arithmetic in the quadratic field Q(sqrt 2).
//!
//! A [`Scalar`] is `a + b*sqrt(2)` with rational `a`, `b`. Signs are decided
//! algebraically; decimal output exists only for reports.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NumError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("undefined operation on infinities: {0}")]
    Indeterminate(&'static str),
    #[error("malformed scalar literal {text:?} at position {pos}: {msg}")]
    Parse { text: String, pos: usize, msg: String },
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Scalar {
    rat: BigRational,
    rad: BigRational,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
}

/// Field operation with a checked division.
pub fn arith(op: ArithOp, x: &Scalar, y: &Scalar) -> Result<Scalar, NumError> {
    Ok(match op {
        ArithOp::Add => x + y,
        ArithOp::Sub => x - y,
        ArithOp::Mul => x * y,
        ArithOp::Div => x.checked_div(y)?,
    })
}

fn rat_int(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

impl Scalar {
    pub fn new(rat: BigRational, rad: BigRational) -> Self {
        Scalar { rat, rad }
    }

    pub fn zero() -> Self {
        Scalar::new(BigRational::zero(), BigRational::zero())
    }

    pub fn one() -> Self {
        Scalar::int(1)
    }

    pub fn int(n: i64) -> Self {
        Scalar::new(rat_int(n), BigRational::zero())
    }

    /// `n/d` as a rational scalar. Panics if `d == 0`.
    pub fn frac(n: i64, d: i64) -> Self {
        Scalar::new(BigRational::new(n.into(), d.into()), BigRational::zero())
    }

    pub fn from_rational(q: BigRational) -> Self {
        Scalar::new(q, BigRational::zero())
    }

    pub fn sqrt2() -> Self {
        Scalar::new(BigRational::zero(), rat_int(1))
    }

    /// `2^k` for any integer `k`.
    pub fn pow2(k: i32) -> Self {
        let p = BigInt::one() << k.unsigned_abs();
        if k >= 0 {
            Scalar::from_rational(BigRational::from_integer(p))
        } else {
            Scalar::from_rational(BigRational::new(BigInt::one(), p))
        }
    }

    pub fn rat_part(&self) -> &BigRational {
        &self.rat
    }

    pub fn rad_part(&self) -> &BigRational {
        &self.rad
    }

    pub fn is_zero(&self) -> bool {
        self.rat.is_zero() && self.rad.is_zero()
    }

    pub fn is_rational(&self) -> bool {
        self.rad.is_zero()
    }

    /// Exact sign in {-1, 0, 1}.
    pub fn sign(&self) -> i8 {
        let sa = rsign(&self.rat);
        let sb = rsign(&self.rad);
        if sb == 0 {
            return sa;
        }
        if sa == 0 || sa == sb {
            return sb;
        }
        let a2 = &self.rat * &self.rat;
        let b2 = &self.rad * &self.rad * rat_int(2);
        if a2 > b2 {
            sa
        } else {
            sb
        }
    }

    pub fn is_positive(&self) -> bool {
        self.sign() > 0
    }

    pub fn is_negative(&self) -> bool {
        self.sign() < 0
    }

    pub fn abs(&self) -> Scalar {
        if self.is_negative() {
            -self
        } else {
            self.clone()
        }
    }

    pub fn conj(&self) -> Scalar {
        Scalar::new(self.rat.clone(), -&self.rad)
    }

    /// Field norm `a^2 - 2 b^2`.
    pub fn norm(&self) -> BigRational {
        &self.rat * &self.rat - &self.rad * &self.rad * rat_int(2)
    }

    pub fn recip(&self) -> Result<Scalar, NumError> {
        if self.is_zero() {
            return Err(NumError::DivisionByZero);
        }
        let n = self.norm();
        Ok(Scalar::new(&self.rat / &n, -(&self.rad / &n)))
    }

    pub fn checked_div(&self, other: &Scalar) -> Result<Scalar, NumError> {
        Ok(self * &other.recip()?)
    }

    /// Multiplication by a rational.
    pub fn scale(&self, q: &BigRational) -> Scalar {
        Scalar::new(&self.rat * q, &self.rad * q)
    }

    pub fn half(&self) -> Scalar {
        self.scale(&BigRational::new(1.into(), 2.into()))
    }

    pub fn min(&self, other: &Scalar) -> Scalar {
        if self <= other {
            self.clone()
        } else {
            other.clone()
        }
    }

    pub fn max(&self, other: &Scalar) -> Scalar {
        if self >= other {
            self.clone()
        } else {
            other.clone()
        }
    }

    /// Largest integer not exceeding the value.
    pub fn floor(&self) -> BigInt {
        // floor(a) + floor(b*sqrt2) is within 2 of the answer; fix up exactly.
        let mut n = self.rat.floor().to_integer();
        if !self.rad.is_zero() {
            let b = &self.rad;
            let b2 = b * b * rat_int(2);
            let num = b2.numer() * b2.denom();
            let root = num.sqrt();
            let approx = BigRational::new(root, b2.denom().clone());
            let approx = if b.is_negative() { -approx } else { approx };
            n += approx.floor().to_integer();
        }
        loop {
            let ni = Scalar::from_rational(BigRational::from_integer(n.clone()));
            if (self - &ni).is_negative() {
                n -= 1;
                continue;
            }
            let n1 = Scalar::from_rational(BigRational::from_integer(&n + 1));
            if !(self - &n1).is_negative() {
                n += 1;
                continue;
            }
            return n;
        }
    }

    /// Decimal rendering rounded half away from zero to `digits` fractional digits,
    /// with trailing zeros removed.
    pub fn approx(&self, digits: usize) -> String {
        let neg = self.is_negative();
        let a = self.abs();
        let scale = BigInt::from(10).pow(digits as u32);
        let scaled = a.scale(&BigRational::from_integer(scale.clone()));
        let n = (scaled + Scalar::frac(1, 2)).floor();
        let (ip, fp) = n.div_rem(&scale);
        let mut frac = format!("{:0>width$}", fp.to_string(), width = digits);
        while frac.ends_with('0') {
            frac.pop();
        }
        let mut s = String::new();
        if neg && !n.is_zero() {
            s.push('-');
        }
        s.push_str(&ip.to_string());
        if !frac.is_empty() {
            s.push('.');
            s.push_str(&frac);
        }
        s
    }

    pub fn to_f64(&self) -> f64 {
        self.rat.to_f64().unwrap_or(f64::NAN)
            + self.rad.to_f64().unwrap_or(f64::NAN) * std::f64::consts::SQRT_2
    }

    /// Simplest rational (smallest denominator, then numerator) in the open
    /// interval `(lo, hi)`, where `lo < hi` and both are non-negative rationals.
    pub fn simplest_between(lo: &BigRational, hi: &BigRational) -> BigRational {
        debug_assert!(lo < hi);
        // Continued-fraction descent on the open interval.
        let fl = lo.floor();
        if &(fl.clone() + BigRational::one()) < hi {
            let c = fl + BigRational::one();
            if &c > lo {
                return c;
            }
        }
        let fl = lo.floor();
        let (l, h) = (lo - &fl, hi - &fl);
        if l.is_zero() && h > BigRational::one() {
            return fl + BigRational::one();
        }
        // Both in [0, 1]; recurse on reciprocals.
        let inner = if l.is_zero() {
            let r = h.recip();
            let k = r.floor() + BigRational::one();
            k.recip()
        } else {
            let rl = l.recip();
            let rh = h.recip();
            Scalar::simplest_between(&rh, &rl).recip()
        };
        fl + inner
    }
}

fn rsign(q: &BigRational) -> i8 {
    if q.is_zero() {
        0
    } else if q.is_negative() {
        -1
    } else {
        1
    }
}

impl Default for Scalar {
    fn default() -> Self {
        Scalar::zero()
    }
}

impl Ord for Scalar {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self - other).sign() {
            -1 => Ordering::Less,
            0 => Ordering::Equal,
            _ => Ordering::Greater,
        }
    }
}

impl PartialOrd for Scalar {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<'a> Add<&'a Scalar> for &'a Scalar {
    type Output = Scalar;
    fn add(self, o: &Scalar) -> Scalar {
        Scalar::new(&self.rat + &o.rat, &self.rad + &o.rad)
    }
}

impl<'a> Sub<&'a Scalar> for &'a Scalar {
    type Output = Scalar;
    fn sub(self, o: &Scalar) -> Scalar {
        Scalar::new(&self.rat - &o.rat, &self.rad - &o.rad)
    }
}

impl<'a> Mul<&'a Scalar> for &'a Scalar {
    type Output = Scalar;
    fn mul(self, o: &Scalar) -> Scalar {
        let two = rat_int(2);
        Scalar::new(
            &self.rat * &o.rat + &self.rad * &o.rad * two,
            &self.rat * &o.rad + &self.rad * &o.rat,
        )
    }
}

impl Neg for &Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        Scalar::new(-&self.rat, -&self.rad)
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr<Scalar> for Scalar {
            type Output = Scalar;
            fn $m(self, o: Scalar) -> Scalar {
                (&self).$m(&o)
            }
        }
        impl<'a> $tr<&'a Scalar> for Scalar {
            type Output = Scalar;
            fn $m(self, o: &Scalar) -> Scalar {
                (&self).$m(o)
            }
        }
        impl<'a> $tr<Scalar> for &'a Scalar {
            type Output = Scalar;
            fn $m(self, o: Scalar) -> Scalar {
                self.$m(&o)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl Neg for Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        -&self
    }
}

fn fmt_rat(q: &BigRational) -> String {
    if q.denom().is_one() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.rad.is_zero() {
            return write!(f, "{}", fmt_rat(&self.rat));
        }
        if self.rat.is_zero() {
            return write!(f, "{}r2", fmt_rat(&self.rad));
        }
        if self.rad.is_negative() {
            write!(f, "{}-{}r2", fmt_rat(&self.rat), fmt_rat(&-&self.rad))
        } else {
            write!(f, "{}+{}r2", fmt_rat(&self.rat), fmt_rat(&self.rad))
        }
    }
}

impl fmt::Debug for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

struct Lexer<'a> {
    text: &'a str,
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn err(&self, msg: &str) -> NumError {
        NumError::Parse { text: self.text.to_string(), pos: self.pos, msg: msg.to_string() }
    }

    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn digits(&mut self) -> Result<BigInt, NumError> {
        let start = self.pos;
        while matches!(self.peek(), Some(b'0'..=b'9')) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.err("expected digits"));
        }
        Ok(self.text[start..self.pos].parse::<BigInt>().expect("digit run"))
    }

    fn rat(&mut self) -> Result<BigRational, NumError> {
        let neg = self.eat(b'-');
        let n = self.digits()?;
        let d = if self.eat(b'/') {
            let at = self.pos;
            let d = self.digits()?;
            if d.is_zero() {
                self.pos = at;
                return Err(self.err("zero denominator"));
            }
            d
        } else {
            BigInt::one()
        };
        let q = BigRational::new(n, d);
        Ok(if neg { -q } else { q })
    }

    fn r2(&mut self) -> bool {
        if self.text[self.pos..].starts_with("r2") {
            self.pos += 2;
            true
        } else {
            false
        }
    }
}

/// Parse a scalar literal: `RAT`, `RAT (+|-) RAT r2`, or `[-] RAT r2`.
pub fn parse_scalar(text: &str) -> Result<Scalar, NumError> {
    let mut lx = Lexer { text, bytes: text.as_bytes(), pos: 0 };
    let neg = lx.eat(b'-');
    let first = lx.rat()?;
    let first = if neg { -first } else { first };
    let value = if lx.r2() {
        Scalar::new(BigRational::zero(), first)
    } else if matches!(lx.peek(), Some(b'+') | Some(b'-')) {
        let minus = lx.peek() == Some(b'-');
        lx.pos += 1;
        let second = lx.rat()?;
        if !lx.r2() {
            return Err(lx.err("expected 'r2'"));
        }
        Scalar::new(first, if minus { -second } else { second })
    } else {
        Scalar::from_rational(first)
    };
    if lx.pos != text.len() {
        return Err(lx.err("unexpected trailing input"));
    }
    Ok(value)
}

impl FromStr for Scalar {
    type Err = NumError;
    fn from_str(s: &str) -> Result<Self, NumError> {
        parse_scalar(s)
    }
}

impl Serialize for Scalar {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Scalar {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        parse_scalar(&s).map_err(serde::de::Error::custom)
    }
}

/// A scalar or one of the two infinities.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ExtScalar {
    NegInf,
    Finite(Scalar),
    PosInf,
}

impl ExtScalar {
    pub fn finite(&self) -> Option<&Scalar> {
        match self {
            ExtScalar::Finite(s) => Some(s),
            _ => None,
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, ExtScalar::Finite(_))
    }

    pub fn add(&self, o: &ExtScalar) -> Result<ExtScalar, NumError> {
        use ExtScalar::*;
        Ok(match (self, o) {
            (Finite(a), Finite(b)) => Finite(a + b),
            (PosInf, NegInf) | (NegInf, PosInf) => return Err(NumError::Indeterminate("inf - inf")),
            (PosInf, _) | (_, PosInf) => PosInf,
            (NegInf, _) | (_, NegInf) => NegInf,
        })
    }

    pub fn neg(&self) -> ExtScalar {
        match self {
            ExtScalar::NegInf => ExtScalar::PosInf,
            ExtScalar::PosInf => ExtScalar::NegInf,
            ExtScalar::Finite(s) => ExtScalar::Finite(-s),
        }
    }

    /// Product with a finite scalar; `0 * inf` is rejected.
    pub fn mul_scalar(&self, k: &Scalar) -> Result<ExtScalar, NumError> {
        match self {
            ExtScalar::Finite(s) => Ok(ExtScalar::Finite(s * k)),
            inf => match k.sign() {
                0 => Err(NumError::Indeterminate("0 * inf")),
                1 => Ok(inf.clone()),
                _ => Ok(inf.neg()),
            },
        }
    }

    pub fn approx(&self, digits: usize) -> String {
        match self {
            ExtScalar::Finite(s) => s.approx(digits),
            ExtScalar::PosInf => "inf".into(),
            ExtScalar::NegInf => "-inf".into(),
        }
    }
}

impl From<Scalar> for ExtScalar {
    fn from(s: Scalar) -> Self {
        ExtScalar::Finite(s)
    }
}

impl PartialEq<Scalar> for ExtScalar {
    fn eq(&self, o: &Scalar) -> bool {
        matches!(self, ExtScalar::Finite(s) if s == o)
    }
}

impl fmt::Display for ExtScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtScalar::NegInf => write!(f, "-inf"),
            ExtScalar::PosInf => write!(f, "inf"),
            ExtScalar::Finite(s) => write!(f, "{}", s),
        }
    }
}

impl fmt::Debug for ExtScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

pub fn parse_ext(text: &str) -> Result<ExtScalar, NumError> {
    match text {
        "inf" | "+inf" => Ok(ExtScalar::PosInf),
        "-inf" => Ok(ExtScalar::NegInf),
        _ => parse_scalar(text).map(ExtScalar::Finite),
    }
}

impl FromStr for ExtScalar {
    type Err = NumError;
    fn from_str(s: &str) -> Result<Self, NumError> {
        parse_ext(s)
    }
}

impl Serialize for ExtScalar {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for ExtScalar {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        parse_ext(&s).map_err(serde::de::Error::custom)
    }
}

/// Sign of a big integer as {-1,0,1}.
pub fn bigint_sign(n: &BigInt) -> i8 {
    match n.sign() {
        Sign::Minus => -1,
        Sign::NoSign => 0,
        Sign::Plus => 1,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(t: &str) -> Scalar {
        parse_scalar(t).unwrap()
    }

    #[test]
    fn conjugate_product() {
        assert_eq!(&s("1+1r2") * &s("1-1r2"), Scalar::int(-1));
    }

    #[test]
    fn division_by_conjugate() {
        let q = arith(ArithOp::Div, &Scalar::one(), &s("1+1r2")).unwrap();
        assert_eq!(q, s("-1+1r2"));
        assert_eq!(&q * &s("1+1r2"), Scalar::one());
        assert_eq!(arith(ArithOp::Div, &Scalar::one(), &Scalar::zero()), Err(NumError::DivisionByZero));
    }

    #[test]
    fn canonical_sum() {
        let x = &Scalar::frac(1, 2) + &Scalar::new(BigRational::zero(), BigRational::new(1.into(), 3.into()));
        assert_eq!(x.to_string(), "1/2+1/3r2");
    }

    #[test]
    fn signs() {
        assert_eq!(s("3-2r2").sign(), 1);
        assert_eq!(Scalar::zero().sign(), 0);
        assert_eq!(s("-2+1r2").sign(), -1);
        assert_eq!(s("-1r2").sign(), -1);
    }

    #[test]
    fn rationality() {
        assert!(Scalar::frac(3, 7).is_rational());
        assert!(!s("1/5r2").is_rational());
        assert!((&s("1+1r2") + &s("1-1r2")).is_rational());
    }

    #[test]
    fn literals() {
        assert_eq!(s("-2+1/3r2"), Scalar::new(rat_int(-2), BigRational::new(1.into(), 3.into())));
        assert_eq!(Scalar::frac(1, 2).to_string(), "1/2");
        assert_eq!(s("4/6").to_string(), "2/3");
        assert_eq!(s("1r2").to_string(), "1r2");
        assert_eq!(s("-1/2r2").to_string(), "-1/2r2");
        assert!(parse_scalar("1/0").is_err());
        assert!(parse_scalar("").is_err());
        assert!(parse_scalar("1+2").is_err());
        match parse_scalar("12x") {
            Err(NumError::Parse { pos, .. }) => assert_eq!(pos, 2),
            other => panic!("{other:?}"),
        }
        assert_eq!(parse_ext("-inf").unwrap(), ExtScalar::NegInf);
    }

    #[test]
    fn decimals() {
        assert_eq!(Scalar::sqrt2().approx(8), "1.41421356");
        assert_eq!(Scalar::sqrt2().approx(20), "1.4142135623730950488");
        assert_eq!(Scalar::zero().approx(6), "0");
        assert_eq!(Scalar::frac(-1, 4).approx(6), "-0.25");
        assert_eq!(Scalar::frac(2, 3).approx(3), "0.667");
        assert_eq!(s("-1/3r2").approx(4), "-0.4714");
    }

    #[test]
    fn floors() {
        assert_eq!(s("1r2").floor(), BigInt::from(1));
        assert_eq!(s("-1r2").floor(), BigInt::from(-2));
        assert_eq!(s("7/2").floor(), BigInt::from(3));
        assert_eq!(s("-7/2").floor(), BigInt::from(-4));
        assert_eq!(s("100-70r2").floor(), BigInt::from(1));
    }

    #[test]
    fn simplest_rationals() {
        let q = |a: i64, b: i64| BigRational::new(a.into(), b.into());
        assert_eq!(Scalar::simplest_between(&q(1, 2), &q(1, 1)), q(2, 3));
        assert_eq!(Scalar::simplest_between(&q(0, 1), &q(3, 1)), q(1, 1));
        assert_eq!(Scalar::simplest_between(&q(1, 1), &q(3, 1)), q(2, 1));
        assert_eq!(Scalar::simplest_between(&q(0, 1), &q(1, 1000)), q(1, 1001));
        assert_eq!(Scalar::simplest_between(&q(3, 10), &q(4, 10)), q(1, 3));
    }

    #[test]
    fn ext_order() {
        assert!(ExtScalar::NegInf < ExtScalar::Finite(Scalar::int(-100)));
        assert!(ExtScalar::Finite(Scalar::int(100)) < ExtScalar::PosInf);
        assert!(ExtScalar::PosInf.add(&ExtScalar::NegInf).is_err());
    }
}
