//! Ordered coefficient rings for the constraint engine.

use std::fmt;
use std::hash::Hash;

use crate::exactnum::Scalar;

/// An ordered commutative ring that is an algebra over `Scalar`.
pub trait OrderedRing: Clone + Eq + Hash + fmt::Debug + Send + Sync + 'static {
    fn zero() -> Self;
    fn from_scalar(s: &Scalar) -> Self;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn neg(&self) -> Self;
    fn sign(&self) -> i8;
    fn is_zero(&self) -> bool;
    /// Division by a nonzero scalar.
    fn div_scalar(&self, s: &Scalar) -> Self;
    /// A positive scalar of the same order of magnitude, used to keep
    /// coefficients small (`|dominant coefficient|`).
    fn magnitude(&self) -> Option<Scalar>;

    fn one() -> Self {
        Self::from_scalar(&Scalar::one())
    }
}

impl OrderedRing for Scalar {
    fn zero() -> Self {
        Scalar::zero()
    }
    fn from_scalar(s: &Scalar) -> Self {
        s.clone()
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn neg(&self) -> Self {
        -self
    }
    fn sign(&self) -> i8 {
        Scalar::sign(self)
    }
    fn is_zero(&self) -> bool {
        Scalar::is_zero(self)
    }
    fn div_scalar(&self, s: &Scalar) -> Self {
        self.checked_div(s).expect("nonzero divisor")
    }
    fn magnitude(&self) -> Option<Scalar> {
        if self.is_zero() {
            None
        } else {
            Some(self.abs())
        }
    }
}

/// Polynomials over `Scalar` in two positive infinitesimals `s ≫ t`.
///
/// A monomial `s^a t^b` dominates every monomial with larger `(b, a)` in
/// lexicographic order, so the sign of a polynomial is the sign of the
/// coefficient of its dominant monomial.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Eps {
    /// Terms `(b, a, coefficient)` sorted by `(b, a)`, no zero coefficients.
    terms: Vec<(u16, u16, Scalar)>,
}

impl Eps {
    pub fn constant(c: &Scalar) -> Eps {
        if c.is_zero() {
            Eps { terms: vec![] }
        } else {
            Eps { terms: vec![(0, 0, c.clone())] }
        }
    }

    /// The outer infinitesimal `s`.
    pub fn s() -> Eps {
        Eps { terms: vec![(0, 1, Scalar::one())] }
    }

    /// The inner infinitesimal `t`, infinitely smaller than every power of `s`.
    pub fn t() -> Eps {
        Eps { terms: vec![(1, 0, Scalar::one())] }
    }

    fn from_terms(mut terms: Vec<(u16, u16, Scalar)>) -> Eps {
        terms.sort_by(|x, y| (x.0, x.1).cmp(&(y.0, y.1)));
        let mut out: Vec<(u16, u16, Scalar)> = Vec::with_capacity(terms.len());
        for (b, a, c) in terms {
            match out.last_mut() {
                Some(last) if last.0 == b && last.1 == a => last.2 = &last.2 + &c,
                _ => out.push((b, a, c)),
            }
        }
        out.retain(|t| !t.2.is_zero());
        Eps { terms: out }
    }

    /// The standard part (constant coefficient).
    pub fn standard(&self) -> Scalar {
        self.terms
            .iter()
            .find(|t| t.0 == 0 && t.1 == 0)
            .map(|t| t.2.clone())
            .unwrap_or_else(Scalar::zero)
    }
}

impl fmt::Debug for Eps {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> =
            self.terms.iter().map(|(b, a, c)| format!("({c})s^{a}t^{b}")).collect();
        write!(f, "{}", parts.join(" + "))
    }
}

impl OrderedRing for Eps {
    fn zero() -> Self {
        Eps { terms: vec![] }
    }
    fn from_scalar(s: &Scalar) -> Self {
        Eps::constant(s)
    }
    fn add(&self, o: &Self) -> Self {
        let mut t = self.terms.clone();
        t.extend(o.terms.iter().cloned());
        Eps::from_terms(t)
    }
    fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }
    fn mul(&self, o: &Self) -> Self {
        let mut t = Vec::with_capacity(self.terms.len() * o.terms.len());
        for (b1, a1, c1) in &self.terms {
            for (b2, a2, c2) in &o.terms {
                t.push((b1 + b2, a1 + a2, c1 * c2));
            }
        }
        Eps::from_terms(t)
    }
    fn neg(&self) -> Self {
        Eps { terms: self.terms.iter().map(|(b, a, c)| (*b, *a, -c)).collect() }
    }
    fn sign(&self) -> i8 {
        self.terms.first().map(|t| t.2.sign()).unwrap_or(0)
    }
    fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
    fn div_scalar(&self, s: &Scalar) -> Self {
        let r = s.recip().expect("nonzero divisor");
        Eps { terms: self.terms.iter().map(|(b, a, c)| (*b, *a, c * &r)).collect() }
    }
    fn magnitude(&self) -> Option<Scalar> {
        self.terms.first().map(|t| t.2.abs())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn infinitesimal_order() {
        let s = Eps::s();
        let t = Eps::t();
        let tiny_const = Eps::constant(&Scalar::frac(1, 1_000_000));
        assert_eq!(tiny_const.sub(&s).sign(), 1);
        assert_eq!(s.sub(&t.mul(&Eps::constant(&Scalar::int(1000)))).sign(), 1);
        assert_eq!(s.mul(&s).sub(&t).sign(), 1);
        assert_eq!(t.sub(&s.mul(&s).mul(&s).mul(&t)).sign(), 1);
        assert_eq!(Eps::one().add(&s).sub(&Eps::one()).sign(), 1);
        assert_eq!(s.neg().sign(), -1);
    }
}
