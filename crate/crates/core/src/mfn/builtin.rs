//! The example library: named maps and the bespoke sequence map.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive};

use super::pamap::{Affine, Exceptional, FiberMode, PaMap, Piece};
use crate::exactnum::Scalar;
use crate::rset::{Cell, Density, RSet};

/// A map evaluated by hand-written exact rules instead of a finite graph.
pub trait Bespoke: Send + Sync + fmt::Debug {
    fn name(&self) -> &str;
    fn fiber(&self, x: &Scalar) -> RSet;
    fn image_of_cell(&self, c: &Cell) -> RSet;
    /// `F^{-1}(y)`, or its closure with `false` when the preimage is not an `RSet`.
    fn preimage(&self, y: &Scalar) -> (RSet, bool);
    fn graph_closed(&self) -> bool;
    /// Inputs near `center` where the map behaves exceptionally.
    fn special_points(&self, center: &Scalar, radius: &Scalar, count: usize) -> Vec<Scalar>;
    /// A short name for an exceptional input, if it has one.
    fn describe_point(&self, _x: &Scalar) -> Option<String> {
        None
    }
    /// Exact verdict for the full Lipschitz property on `B(center, radius)` at every rate.
    fn full_lipschitz(&self, _center: &Scalar, _radius: &Scalar) -> Option<(bool, String)> {
        None
    }
}

/// `G(x) = ]-inf,-1]`, except `G(1-1/n) = (]-inf,-1] ∩ Q) ∪ {-2 + r2/n}`.
#[derive(Debug, Clone, Copy, Default)]
pub struct RatTailSeq;

impl RatTailSeq {
    /// `n` with `x = 1 - 1/n`, if any.
    pub fn index_of(x: &Scalar) -> Option<u64> {
        if !x.is_rational() {
            return None;
        }
        let gap = BigRational::one() - x.rat_part();
        if !gap.is_positive() {
            return None;
        }
        let inv = gap.recip();
        if inv.is_integer() {
            inv.to_integer().to_u64()
        } else {
            None
        }
    }

    pub fn point(n: u64) -> Scalar {
        Scalar::one() - Scalar::from_rational(BigRational::new(BigInt::from(1), BigInt::from(n)))
    }

    /// The extra value `-2 + r2/n`.
    pub fn extra(n: u64) -> Scalar {
        Scalar::new(BigRational::from_integer(BigInt::from(-2)), BigRational::new(BigInt::from(1), BigInt::from(n)))
    }

    fn tail(density: Density) -> Cell {
        Cell::upto(Scalar::int(-1), true).with_density(density)
    }
}

impl Bespoke for RatTailSeq {
    fn name(&self) -> &str {
        "rat_tail_seq"
    }

    fn fiber(&self, x: &Scalar) -> RSet {
        match RatTailSeq::index_of(x) {
            Some(n) => RSet::from_parts(vec![RatTailSeq::tail(Density::rational())], vec![RatTailSeq::extra(n)]),
            None => RSet::from_cell(RatTailSeq::tail(Density::Solid)),
        }
    }

    fn image_of_cell(&self, c: &Cell) -> RSet {
        if c.is_degenerate() {
            return self.fiber(c.lo.finite().expect("finite"));
        }
        // Non-sequence inputs fill the tail; only n = 1 adds a value above -1.
        let mut img = RSet::from_cell(RatTailSeq::tail(Density::Solid));
        if c.contains(&Scalar::zero()) {
            img = img.union(&RSet::point(RatTailSeq::extra(1)));
        }
        img
    }

    fn preimage(&self, y: &Scalar) -> (RSet, bool) {
        if *y <= Scalar::int(-1) {
            // Rational values lie in every fiber; irrational ones miss all sequence
            // inputs but at most one, so only the closure is representable.
            return (RSet::real_line(), y.is_rational());
        }
        if *y == RatTailSeq::extra(1) {
            (RSet::point(Scalar::zero()), true)
        } else {
            (RSet::empty(), true)
        }
    }

    fn graph_closed(&self) -> bool {
        // (0, -2 + r2) is isolated; every other limit lies in the closed tail.
        true
    }

    fn special_points(&self, center: &Scalar, radius: &Scalar, count: usize) -> Vec<Scalar> {
        let lo = center - radius;
        let hi = center + radius;
        let mut out = Vec::new();
        let mut n = 1u64;
        while out.len() < count && n < 1 << 20 {
            let x = RatTailSeq::point(n);
            if x > lo && x < hi {
                out.push(x.clone());
            }
            n = if x < lo { n * 2 } else { n + 1 };
        }
        out
    }

    fn describe_point(&self, x: &Scalar) -> Option<String> {
        RatTailSeq::index_of(x).map(|n| format!("x_n = 1-1/n with n = {n}"))
    }

    fn full_lipschitz(&self, center: &Scalar, radius: &Scalar) -> Option<(bool, String)> {
        let window = Cell::ball(center, radius);
        if window.contains(&Scalar::zero()) {
            return Some((
                false,
                "the window contains x_1 = 0, whose extra value -2+r2 lies at distance 2-r2 from every other fiber".into(),
            ));
        }
        Some((
            true,
            "on the window every fiber lies in ]-inf,-1] and is dense there, so F(x) ⊂ F(u) + r𝔻 for every r > 0".into(),
        ))
    }
}

fn sc(n: i64) -> Scalar {
    Scalar::int(n)
}

fn linear(a: i64) -> PaMap {
    let f = Affine::new(sc(a), Scalar::zero());
    PaMap::new(vec![Piece::closed(Cell::real_line(), f.clone(), f)], vec![]).expect("valid")
}

fn constant_interval(lo: i64, hi: i64) -> Vec<Piece> {
    vec![Piece::closed(Cell::real_line(), Affine::constant(sc(lo)), Affine::constant(sc(hi)))]
}

fn abs_pieces(lower_zero: bool) -> Vec<Piece> {
    let lower = |a: i64| if lower_zero { Affine::constant(Scalar::zero()) } else { Affine::new(sc(a), Scalar::zero()) };
    vec![
        Piece::closed(Cell::upto(Scalar::zero(), false), lower(-1), Affine::new(sc(-1), Scalar::zero())),
        Piece::closed(Cell::from(Scalar::zero(), true), lower(1), Affine::new(sc(1), Scalar::zero())),
    ]
}

/// Names of the piecewise-affine library maps.
pub const PA_NAMES: &[&str] = &[
    "identity",
    "linear_2x",
    "linear_3x",
    "neg_linear_2x",
    "abs",
    "abs_interval",
    "jump_two",
    "neg_jump_two",
    "unit_shelf",
    "const_12",
    "rat_tail",
];

/// Resolve a library name (dashes and underscores are interchangeable).
pub fn library_pamap(name: &str) -> Option<PaMap> {
    let key = name.replace('-', "_");
    let m = match key.as_str() {
        "identity" => linear(1),
        "linear_2x" => linear(2),
        "linear_3x" => linear(3),
        "neg_linear_2x" => linear(-2),
        "abs" => PaMap::new(abs_pieces(false), vec![]).expect("valid"),
        "abs_interval" => PaMap::new(abs_pieces(true), vec![]).expect("valid"),
        "jump_two" | "neg_jump_two" => {
            let v = if key == "jump_two" { 2 } else { -2 };
            PaMap::new(
                constant_interval(-1, 1),
                vec![Exceptional { x: sc(1), set: RSet::point(sc(v)), mode: FiberMode::Replace }],
            )
            .expect("valid")
        }
        "unit_shelf" => PaMap::new(
            constant_interval(1, 2),
            vec![Exceptional { x: sc(1), set: RSet::point(Scalar::zero()), mode: FiberMode::Add }],
        )
        .expect("valid"),
        "const_12" => PaMap::new(constant_interval(1, 2), vec![]).expect("valid"),
        "rat_tail" => PaMap::new(
            vec![Piece {
                dom: Cell::real_line(),
                lower: Some(Affine::constant(sc(1))),
                upper: None,
                lower_closed: true,
                upper_closed: false,
                dense: true,
            }],
            vec![],
        )
        .expect("valid"),
        _ => return None,
    };
    Some(m)
}

/// Reference points `(x, y)` on the graph of each library map.
pub fn reference_points(name: &str) -> Vec<(Scalar, Scalar)> {
    let p = |x: i64, y: i64| (sc(x), sc(y));
    match name.replace('-', "_").as_str() {
        "identity" | "linear_2x" | "linear_3x" | "neg_linear_2x" | "abs" => vec![p(0, 0)],
        "abs_interval" => vec![p(0, 0), p(1, 1)],
        "jump_two" => vec![p(1, 2)],
        "neg_jump_two" => vec![p(1, -2)],
        "unit_shelf" | "const_12" | "rat_tail" => vec![p(1, 1)],
        "rat_tail_seq" => vec![p(1, -1)],
        _ => vec![],
    }
}

/// Every library name, piecewise-affine and bespoke.
pub fn all_names() -> Vec<&'static str> {
    let mut v = PA_NAMES.to_vec();
    v.push("rat_tail_seq");
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sequence_fibers() {
        let g = RatTailSeq;
        let x3 = RatTailSeq::point(3);
        assert_eq!(RatTailSeq::index_of(&x3), Some(3));
        let f = g.fiber(&x3);
        assert!(f.contains(&RatTailSeq::extra(3)));
        assert!(f.contains(&sc(-5)));
        assert!(!f.contains(&(&sc(-5) + &Scalar::sqrt2())));
        assert!(g.fiber(&Scalar::frac(1, 5)).contains(&(&sc(-5) + &Scalar::sqrt2())));
        let img = g.image_of_cell(&Cell::ball(&sc(1), &Scalar::frac(1, 2)));
        assert_eq!(img, RSet::from_cell(Cell::upto(sc(-1), true)));
        assert!(g.image_of_cell(&Cell::ball(&Scalar::zero(), &Scalar::frac(1, 8))).contains(&RatTailSeq::extra(1)));
    }

    #[test]
    fn sequence_specials_stay_in_window() {
        let pts = RatTailSeq.special_points(&sc(1), &Scalar::frac(1, 10), 5);
        assert_eq!(pts.len(), 5);
        assert!(pts.iter().all(|p| (p - &sc(1)).abs() < Scalar::frac(1, 10)));
    }
}
