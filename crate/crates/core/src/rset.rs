//! Exact subsets of the real line: finite unions of interval cells and points.
//!
//! A cell is either solid (all reals in its span) or dense. A dense cell with
//! offset `o` holds exactly the numbers `q + o*sqrt(2)` (q rational) in its span,
//! so offset 0 is `Q ∩ span`. Every value is kept in a canonical normal form,
//! which makes equality structural.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exactnum::{ExtScalar, Scalar};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SetError {
    #[error("invalid cell: {0}")]
    InvalidCell(String),
    #[error("negative dilation radius {0}")]
    NegativeRadius(Scalar),
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum Density {
    Solid,
    /// Members are the numbers whose sqrt(2) coefficient equals the offset.
    Dense(BigRational),
}

impl Density {
    pub fn rational() -> Density {
        Density::Dense(BigRational::zero())
    }

    fn admits(&self, s: &Scalar) -> bool {
        match self {
            Density::Solid => true,
            Density::Dense(o) => s.rad_part() == o,
        }
    }
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Cell {
    pub lo: ExtScalar,
    pub hi: ExtScalar,
    pub lo_closed: bool,
    pub hi_closed: bool,
    pub density: Density,
}

impl Cell {
    pub fn new(
        lo: ExtScalar,
        hi: ExtScalar,
        lo_closed: bool,
        hi_closed: bool,
        density: Density,
    ) -> Result<Cell, SetError> {
        if lo > hi {
            return Err(SetError::InvalidCell(format!("lower end {lo} exceeds upper end {hi}")));
        }
        if (lo_closed && !lo.is_finite()) || (hi_closed && !hi.is_finite()) {
            return Err(SetError::InvalidCell("infinite endpoints must be open".into()));
        }
        if lo == hi && !(lo_closed && hi_closed) {
            return Err(SetError::InvalidCell("degenerate cell must be closed".into()));
        }
        if lo == hi && density != Density::Solid {
            return Err(SetError::InvalidCell("degenerate cell must be solid".into()));
        }
        Ok(Cell { lo, hi, lo_closed, hi_closed, density })
    }

    fn raw(lo: ExtScalar, hi: ExtScalar, lo_closed: bool, hi_closed: bool, density: Density) -> Cell {
        Cell { lo, hi, lo_closed, hi_closed, density }
    }

    pub fn closed(a: Scalar, b: Scalar) -> Cell {
        Cell::raw(a.into(), b.into(), true, true, Density::Solid)
    }

    pub fn open(a: Scalar, b: Scalar) -> Cell {
        Cell::raw(a.into(), b.into(), false, false, Density::Solid)
    }

    pub fn closed_open(a: Scalar, b: Scalar) -> Cell {
        Cell::raw(a.into(), b.into(), true, false, Density::Solid)
    }

    pub fn open_closed(a: Scalar, b: Scalar) -> Cell {
        Cell::raw(a.into(), b.into(), false, true, Density::Solid)
    }

    /// Open ball `B(c, r)`.
    pub fn ball(c: &Scalar, r: &Scalar) -> Cell {
        Cell::open(c - r, c + r)
    }

    /// Closed ball `D(c, r)`.
    pub fn closed_ball(c: &Scalar, r: &Scalar) -> Cell {
        Cell::closed(c - r, c + r)
    }

    pub fn real_line() -> Cell {
        Cell::raw(ExtScalar::NegInf, ExtScalar::PosInf, false, false, Density::Solid)
    }

    /// `[a, +inf)`, or `(a, +inf)` when `closed` is false.
    pub fn from(a: Scalar, closed: bool) -> Cell {
        Cell::raw(a.into(), ExtScalar::PosInf, closed, false, Density::Solid)
    }

    /// `(-inf, b]`, or `(-inf, b)` when `closed` is false.
    pub fn upto(b: Scalar, closed: bool) -> Cell {
        Cell::raw(ExtScalar::NegInf, b.into(), false, closed, Density::Solid)
    }

    pub fn with_density(mut self, d: Density) -> Cell {
        self.density = d;
        self
    }

    pub fn is_degenerate(&self) -> bool {
        self.lo == self.hi
    }

    fn span_is_empty(&self) -> bool {
        match self.lo.cmp(&self.hi) {
            Ordering::Greater => true,
            Ordering::Equal => !(self.lo_closed && self.hi_closed) || !self.lo.is_finite(),
            Ordering::Less => false,
        }
    }

    pub fn span_contains(&self, s: &Scalar) -> bool {
        let x = ExtScalar::Finite(s.clone());
        let lo_ok = match self.lo.cmp(&x) {
            Ordering::Less => true,
            Ordering::Equal => self.lo_closed,
            Ordering::Greater => false,
        };
        let hi_ok = match x.cmp(&self.hi) {
            Ordering::Less => true,
            Ordering::Equal => self.hi_closed,
            Ordering::Greater => false,
        };
        lo_ok && hi_ok
    }

    pub fn contains(&self, s: &Scalar) -> bool {
        self.span_contains(s) && self.density.admits(s)
    }

    /// Intersection of spans; the density of `self` is kept.
    fn meet(&self, other: &Cell) -> Option<Cell> {
        let (lo, lo_closed) = match self.lo.cmp(&other.lo) {
            Ordering::Greater => (self.lo.clone(), self.lo_closed),
            Ordering::Less => (other.lo.clone(), other.lo_closed),
            Ordering::Equal => (self.lo.clone(), self.lo_closed && other.lo_closed),
        };
        let (hi, hi_closed) = match self.hi.cmp(&other.hi) {
            Ordering::Less => (self.hi.clone(), self.hi_closed),
            Ordering::Greater => (other.hi.clone(), other.hi_closed),
            Ordering::Equal => (self.hi.clone(), self.hi_closed && other.hi_closed),
        };
        let c = Cell::raw(lo, hi, lo_closed, hi_closed, self.density.clone());
        if c.span_is_empty() {
            None
        } else {
            Some(c)
        }
    }

    /// `self` minus the span of `s`: up to two pieces.
    fn minus(&self, s: &Cell) -> Vec<Cell> {
        let mut out = Vec::new();
        if let ExtScalar::Finite(a) = &s.lo {
            let left = Cell::upto(a.clone(), !s.lo_closed);
            out.extend(self.meet(&left));
        }
        if let ExtScalar::Finite(b) = &s.hi {
            let right = Cell::from(b.clone(), !s.hi_closed);
            out.extend(self.meet(&right));
        }
        out
    }

    fn sort_key(&self) -> (ExtScalar, bool, ExtScalar, bool, Density) {
        (self.lo.clone(), !self.lo_closed, self.hi.clone(), self.hi_closed, self.density.clone())
    }

    fn closure_span(&self) -> Cell {
        Cell::raw(
            self.lo.clone(),
            self.hi.clone(),
            self.lo.is_finite(),
            self.hi.is_finite(),
            Density::Solid,
        )
    }

    /// Some member of the cell, preferring one near the middle of its span.
    pub fn some_member(&self) -> Scalar {
        let target = match (&self.lo, &self.hi) {
            (ExtScalar::Finite(a), ExtScalar::Finite(b)) => (a + b).half(),
            (ExtScalar::Finite(a), _) => a + &Scalar::one(),
            (_, ExtScalar::Finite(b)) => b - &Scalar::one(),
            _ => Scalar::zero(),
        };
        self.member_near(&target)
    }

    /// A member of the cell close to `target`, which must lie in the span's interior
    /// or be a member itself.
    pub fn member_near(&self, target: &Scalar) -> Scalar {
        match &self.density {
            Density::Solid => target.clone(),
            Density::Dense(o) => {
                if self.contains(target) {
                    return target.clone();
                }
                let shift = Scalar::new(BigRational::zero(), o.clone());
                let base = target - &shift;
                let mut k = 1u32;
                loop {
                    let den = BigInt::from(1) << k;
                    let scaled = base.scale(&BigRational::from_integer(den.clone()));
                    let q = BigRational::new(scaled.floor(), den);
                    let cand = &Scalar::from_rational(q) + &shift;
                    if self.contains(&cand) {
                        return cand;
                    }
                    k += 1;
                    assert!(k < 4096, "no member found in non-degenerate dense cell");
                }
            }
        }
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.density {
            Density::Solid => {}
            Density::Dense(o) if o.is_zero() => write!(f, "Q∩")?,
            Density::Dense(o) => write!(f, "({}+Q)∩", Scalar::new(BigRational::zero(), o.clone()))?,
        }
        write!(
            f,
            "{}{},{}{}",
            if self.lo_closed { '[' } else { '(' },
            self.lo,
            self.hi,
            if self.hi_closed { ']' } else { ')' }
        )
    }
}

impl fmt::Debug for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct RSet {
    cells: Vec<Cell>,
    points: Vec<Scalar>,
}

/// Sorted, maximal merge of solid spans (degenerate spans allowed).
fn merge_solid(mut spans: Vec<Cell>) -> Vec<Cell> {
    spans.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
    let mut out: Vec<Cell> = Vec::new();
    for s in spans {
        if let Some(cur) = out.last_mut() {
            let joins = match s.lo.cmp(&cur.hi) {
                Ordering::Less => true,
                Ordering::Equal => cur.hi_closed || s.lo_closed,
                Ordering::Greater => false,
            };
            if joins {
                match s.hi.cmp(&cur.hi) {
                    Ordering::Greater => {
                        cur.hi = s.hi;
                        cur.hi_closed = s.hi_closed;
                    }
                    Ordering::Equal => cur.hi_closed |= s.hi_closed,
                    Ordering::Less => {}
                }
                continue;
            }
        }
        out.push(s);
    }
    out
}

/// Merge dense spans sharing one offset; touching spans join when the shared
/// endpoint is a member of either or is not a possible member at all.
fn merge_dense(mut spans: Vec<Cell>, offset: &BigRational) -> Vec<Cell> {
    spans.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
    let mut out: Vec<Cell> = Vec::new();
    for s in spans {
        if let Some(cur) = out.last_mut() {
            let joins = match s.lo.cmp(&cur.hi) {
                Ordering::Less => true,
                Ordering::Equal => {
                    cur.hi_closed
                        || s.lo_closed
                        || cur.hi.finite().map(|e| e.rad_part() != offset).unwrap_or(false)
                }
                Ordering::Greater => false,
            };
            if joins {
                match s.hi.cmp(&cur.hi) {
                    Ordering::Greater => {
                        cur.hi = s.hi;
                        cur.hi_closed = s.hi_closed;
                    }
                    Ordering::Equal => cur.hi_closed |= s.hi_closed,
                    Ordering::Less => {}
                }
                continue;
            }
        }
        out.push(s);
    }
    out
}

fn subtract_spans(c: &Cell, solid: &[Cell]) -> Vec<Cell> {
    let mut rem = vec![c.clone()];
    for s in solid {
        rem = rem.iter().flat_map(|r| r.minus(s)).collect();
        if rem.is_empty() {
            break;
        }
    }
    rem
}

fn touches_open_end(solid: &[Cell], e: &Scalar) -> bool {
    let x = ExtScalar::Finite(e.clone());
    solid.iter().any(|s| (s.lo == x && !s.lo_closed) || (s.hi == x && !s.hi_closed))
}

impl RSet {
    pub fn empty() -> RSet {
        RSet::default()
    }

    pub fn point(s: Scalar) -> RSet {
        RSet { cells: vec![], points: vec![s] }
    }

    pub fn from_cell(c: Cell) -> RSet {
        RSet::from_parts(vec![c], vec![])
    }

    pub fn real_line() -> RSet {
        RSet::from_cell(Cell::real_line())
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn points(&self) -> &[Scalar] {
        &self.points
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty() && self.points.is_empty()
    }

    /// Build a normalized set from arbitrary cells and points. Empty spans are
    /// dropped and infinite endpoints are treated as open.
    pub fn from_parts(cells: Vec<Cell>, points: Vec<Scalar>) -> RSet {
        let mut solid: Vec<Cell> = Vec::new();
        let mut dense: Vec<Cell> = Vec::new();
        for mut c in cells {
            c.lo_closed &= c.lo.is_finite();
            c.hi_closed &= c.hi.is_finite();
            if c.span_is_empty() {
                continue;
            }
            match &c.density {
                Density::Solid => solid.push(c),
                Density::Dense(_) if c.is_degenerate() => {
                    let p = c.lo.finite().cloned().expect("finite degenerate cell");
                    if c.density.admits(&p) {
                        solid.push(Cell::closed(p.clone(), p));
                    }
                }
                Density::Dense(_) => dense.push(c),
            }
        }
        // Points absorbed by dense cells, possibly closing an endpoint.
        for p in points {
            let x = ExtScalar::Finite(p.clone());
            let mut absorbed = false;
            for d in dense.iter_mut() {
                if !d.density.admits(&p) {
                    continue;
                }
                if d.span_contains(&p) {
                    absorbed = true;
                } else if d.lo == x {
                    d.lo_closed = true;
                    absorbed = true;
                } else if d.hi == x {
                    d.hi_closed = true;
                    absorbed = true;
                }
                if absorbed {
                    break;
                }
            }
            if !absorbed {
                solid.push(Cell::closed(p.clone(), p));
            }
        }
        for d in dense.iter_mut() {
            for (end, closed) in [(&d.lo, &mut d.lo_closed), (&d.hi, &mut d.hi_closed)] {
                if *closed && !end.finite().map(|e| d.density.admits(e)).unwrap_or(false) {
                    *closed = false;
                }
            }
        }
        let (merged, pieces) = loop {
            let merged = merge_solid(solid.clone());
            let mut pieces: Vec<Cell> = Vec::new();
            let mut grew = false;
            for d in &dense {
                for mut piece in subtract_spans(d, &merged) {
                    if piece.is_degenerate() {
                        let p = piece.lo.finite().cloned().expect("finite");
                        if piece.density.admits(&p) {
                            solid.push(Cell::closed(p.clone(), p));
                            grew = true;
                        }
                        continue;
                    }
                    let dens = piece.density.clone();
                    for (end, closed) in [(&piece.lo, &mut piece.lo_closed), (&piece.hi, &mut piece.hi_closed)] {
                        if let ExtScalar::Finite(e) = end {
                            if !dens.admits(e) {
                                *closed = false;
                            } else if *closed && touches_open_end(&merged, e) {
                                solid.push(Cell::closed(e.clone(), e.clone()));
                                grew = true;
                            }
                        }
                    }
                    pieces.push(piece);
                }
            }
            if !grew {
                break (merged, pieces);
            }
        };
        let mut by_offset: Vec<(BigRational, Vec<Cell>)> = Vec::new();
        for p in pieces {
            let Density::Dense(o) = &p.density else { unreachable!() };
            match by_offset.iter_mut().find(|(k, _)| k == o) {
                Some((_, v)) => v.push(p),
                None => by_offset.push((o.clone(), vec![p])),
            }
        }
        let mut cells: Vec<Cell> = Vec::new();
        let mut pts: Vec<Scalar> = Vec::new();
        for s in merged {
            if s.is_degenerate() {
                pts.push(s.lo.finite().cloned().expect("finite"));
            } else {
                cells.push(s);
            }
        }
        for (o, v) in by_offset {
            cells.extend(merge_dense(v, &o));
        }
        cells.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
        pts.sort();
        RSet { cells, points: pts }
    }

    pub fn contains(&self, s: &Scalar) -> bool {
        self.points.iter().any(|p| p == s) || self.cells.iter().any(|c| c.contains(s))
    }

    pub fn union(&self, other: &RSet) -> RSet {
        let mut cells = self.cells.clone();
        cells.extend(other.cells.iter().cloned());
        let mut pts = self.points.clone();
        pts.extend(other.points.iter().cloned());
        RSet::from_parts(cells, pts)
    }

    pub fn intersect_cell(&self, i: &Cell) -> RSet {
        self.intersect(&RSet::from_cell(i.clone()))
    }

    pub fn intersect(&self, other: &RSet) -> RSet {
        let mut cells = Vec::new();
        for a in &self.cells {
            for b in &other.cells {
                let density = match (&a.density, &b.density) {
                    (Density::Solid, d) | (d, Density::Solid) => d.clone(),
                    (Density::Dense(x), Density::Dense(y)) if x == y => a.density.clone(),
                    _ => continue,
                };
                if let Some(m) = a.meet(b) {
                    cells.push(m.with_density(density));
                }
            }
        }
        let mut pts: Vec<Scalar> = self.points.iter().filter(|p| other.contains(p)).cloned().collect();
        pts.extend(other.points.iter().filter(|p| self.contains(p)).cloned());
        RSet::from_parts(cells, pts)
    }

    pub fn is_subset(&self, other: &RSet) -> bool {
        &self.intersect(other) == self
    }

    pub fn closure(&self) -> RSet {
        RSet::from_parts(self.cells.iter().map(Cell::closure_span).collect(), self.points.clone())
    }

    pub fn is_closed(&self) -> bool {
        &self.closure() == self
    }

    pub fn negate(&self) -> RSet {
        let cells = self
            .cells
            .iter()
            .map(|c| {
                let density = match &c.density {
                    Density::Solid => Density::Solid,
                    Density::Dense(o) => Density::Dense(-o),
                };
                Cell::raw(c.hi.neg(), c.lo.neg(), c.hi_closed, c.lo_closed, density)
            })
            .collect();
        RSet::from_parts(cells, self.points.iter().map(|p| -p).collect())
    }

    pub fn translate(&self, t: &Scalar) -> RSet {
        minkowski(self, &RSet::point(t.clone()), true)
    }

    /// Closed-span components of the closure, sorted.
    fn closure_components(&self) -> Vec<Cell> {
        let cl = self.closure();
        let mut comps: Vec<Cell> = cl.cells.clone();
        comps.extend(cl.points.iter().map(|p| Cell::closed(p.clone(), p.clone())));
        comps.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
        comps
    }

    /// Infimum and supremum of the set (`None` when empty).
    pub fn bounds(&self) -> Option<(ExtScalar, ExtScalar)> {
        let comps = self.closure_components();
        let lo = comps.iter().map(|c| c.lo.clone()).min()?;
        let hi = comps.iter().map(|c| c.hi.clone()).max()?;
        Some((lo, hi))
    }

    /// Representative members: points, closed endpoints, and interior members of cells.
    pub fn sample_members(&self) -> Vec<Scalar> {
        let mut out = self.points.clone();
        for c in &self.cells {
            for (e, closed) in [(&c.lo, c.lo_closed), (&c.hi, c.hi_closed)] {
                if closed {
                    out.push(e.finite().cloned().expect("closed ends are finite"));
                }
            }
            out.push(c.some_member());
        }
        out
    }
}

impl fmt::Display for RSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return write!(f, "∅");
        }
        let mut parts: Vec<String> = self.cells.iter().map(|c| c.to_string()).collect();
        if !self.points.is_empty() {
            let ps: Vec<String> = self.points.iter().map(|p| p.to_string()).collect();
            parts.push(format!("{{{}}}", ps.join(",")));
        }
        write!(f, "{}", parts.join(" ∪ "))
    }
}

impl fmt::Debug for RSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// `d(x, A)`, with `d(x, ∅) = +inf`.
pub fn distance(x: &Scalar, a: &RSet) -> ExtScalar {
    let mut best = ExtScalar::PosInf;
    let xe = ExtScalar::Finite(x.clone());
    for c in a.closure_components() {
        let d = if xe < c.lo {
            c.lo.finite().expect("finite") - x
        } else if xe > c.hi {
            x - c.hi.finite().expect("finite")
        } else {
            Scalar::zero()
        };
        let d = ExtScalar::Finite(d);
        if d < best {
            best = d;
        }
    }
    best
}

/// `sup_{a in A} d(a, B)`, with `sup ∅ = 0`.
pub fn excess(a: &RSet, b: &RSet) -> ExtScalar {
    if a.is_empty() {
        return ExtScalar::Finite(Scalar::zero());
    }
    if b.is_empty() {
        return ExtScalar::PosInf;
    }
    let (alo, ahi) = a.bounds().expect("nonempty");
    let (blo, bhi) = b.bounds().expect("nonempty");
    if (ahi == ExtScalar::PosInf && bhi != ExtScalar::PosInf)
        || (alo == ExtScalar::NegInf && blo != ExtScalar::NegInf)
    {
        return ExtScalar::PosInf;
    }
    let ac = a.closure_components();
    let bc = b.closure_components();
    let mut cands: Vec<Scalar> = Vec::new();
    for c in &ac {
        cands.extend(c.lo.finite().cloned());
        cands.extend(c.hi.finite().cloned());
    }
    for w in bc.windows(2) {
        if let (ExtScalar::Finite(h), ExtScalar::Finite(l)) = (&w[0].hi, &w[1].lo) {
            let mid = (h + l).half();
            if ac.iter().any(|c| c.span_contains(&mid)) {
                cands.push(mid);
            }
        }
    }
    let mut best = Scalar::zero();
    for x in cands {
        if let ExtScalar::Finite(d) = distance(&x, b) {
            if d > best {
                best = d;
            }
        }
    }
    ExtScalar::Finite(best)
}

/// Exact Minkowski sum `A + [-r, r]`.
pub fn dilate(a: &RSet, r: &Scalar) -> Result<RSet, SetError> {
    if r.is_negative() {
        return Err(SetError::NegativeRadius(r.clone()));
    }
    if r.is_zero() {
        return Ok(a.clone());
    }
    Ok(minkowski(a, &RSet::from_cell(Cell::closed(-r, r.clone())), true))
}

fn shift_end(e: &ExtScalar, t: &Scalar) -> ExtScalar {
    match e {
        ExtScalar::Finite(s) => ExtScalar::Finite(s + t),
        inf => inf.clone(),
    }
}

fn sum_ends(a: &ExtScalar, b: &ExtScalar) -> ExtScalar {
    a.add(b).expect("lower and upper ends never mix infinities")
}

/// Exact `{a + b}` (when `plus`) or `{a - b}`.
pub fn minkowski(a: &RSet, b: &RSet, plus: bool) -> RSet {
    let b = if plus { b.clone() } else { b.negate() };
    let mut cells = Vec::new();
    let mut pts = Vec::new();
    for ca in &a.cells {
        for cb in &b.cells {
            let density = match (&ca.density, &cb.density) {
                (Density::Dense(x), Density::Dense(y)) => Density::Dense(x + y),
                _ => Density::Solid,
            };
            cells.push(Cell::raw(
                sum_ends(&ca.lo, &cb.lo),
                sum_ends(&ca.hi, &cb.hi),
                ca.lo_closed && cb.lo_closed,
                ca.hi_closed && cb.hi_closed,
                density,
            ));
        }
        for p in &b.points {
            cells.push(shift_cell(ca, p));
        }
    }
    for pa in &a.points {
        for cb in &b.cells {
            cells.push(shift_cell(cb, pa));
        }
        for pb in &b.points {
            pts.push(pa + pb);
        }
    }
    RSet::from_parts(cells, pts)
}

fn shift_cell(c: &Cell, t: &Scalar) -> Cell {
    let density = match &c.density {
        Density::Solid => Density::Solid,
        Density::Dense(o) => Density::Dense(o + t.rad_part()),
    };
    Cell::raw(shift_end(&c.lo, t), shift_end(&c.hi, t), c.lo_closed, c.hi_closed, density)
}

/// JSON form of a cell: `{lo, hi, lo_open, hi_open, density}`.
#[derive(Serialize, Deserialize, Clone, Debug)]
#[serde(deny_unknown_fields)]
pub struct CellLiteral {
    pub lo: ExtScalar,
    pub hi: ExtScalar,
    #[serde(default)]
    pub lo_open: bool,
    #[serde(default)]
    pub hi_open: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density: Option<DensityLiteral>,
}

#[derive(Serialize, Deserialize, Clone, Debug, PartialEq)]
#[serde(untagged)]
pub enum DensityLiteral {
    Tag(DensityTag),
    Offset { dense_offset: Scalar },
}

#[derive(Serialize, Deserialize, Clone, Copy, Debug, PartialEq)]
#[serde(rename_all = "lowercase")]
pub enum DensityTag {
    Solid,
    Dense,
}

impl CellLiteral {
    pub fn to_cell(&self) -> Result<Cell, SetError> {
        let density = match &self.density {
            None | Some(DensityLiteral::Tag(DensityTag::Solid)) => Density::Solid,
            Some(DensityLiteral::Tag(DensityTag::Dense)) => Density::rational(),
            Some(DensityLiteral::Offset { dense_offset }) => Density::Dense(dense_offset.rad_part().clone()),
        };
        let lo_closed = !self.lo_open && self.lo.is_finite();
        let hi_closed = !self.hi_open && self.hi.is_finite();
        Cell::new(self.lo.clone(), self.hi.clone(), lo_closed, hi_closed, density)
    }

    pub fn from_cell(c: &Cell) -> CellLiteral {
        CellLiteral {
            lo: c.lo.clone(),
            hi: c.hi.clone(),
            lo_open: !c.lo_closed,
            hi_open: !c.hi_closed,
            density: Some(match &c.density {
                Density::Solid => DensityLiteral::Tag(DensityTag::Solid),
                Density::Dense(o) if o.is_zero() => DensityLiteral::Tag(DensityTag::Dense),
                Density::Dense(o) => DensityLiteral::Offset {
                    dense_offset: Scalar::new(BigRational::zero(), o.clone()),
                },
            }),
        }
    }
}

/// JSON form of a set: either `{cells, points}` or an array mixing cell objects
/// and `{points: [...]}` entries.
#[derive(Serialize, Deserialize, Clone, Debug)]
#[serde(untagged)]
pub enum RSetLiteral {
    Object {
        #[serde(default)]
        cells: Vec<CellLiteral>,
        #[serde(default)]
        points: Vec<Scalar>,
    },
    List(Vec<RSetItem>),
}

#[derive(Serialize, Deserialize, Clone, Debug)]
#[serde(untagged)]
pub enum RSetItem {
    Cell(CellLiteral),
    Points { points: Vec<Scalar> },
}

impl RSetLiteral {
    pub fn to_rset(&self) -> Result<RSet, SetError> {
        let (mut cells, mut pts) = (Vec::new(), Vec::new());
        match self {
            RSetLiteral::Object { cells: cs, points } => {
                for c in cs {
                    cells.push(c.to_cell()?);
                }
                pts.extend(points.iter().cloned());
            }
            RSetLiteral::List(items) => {
                for it in items {
                    match it {
                        RSetItem::Cell(c) => cells.push(c.to_cell()?),
                        RSetItem::Points { points } => pts.extend(points.iter().cloned()),
                    }
                }
            }
        }
        Ok(RSet::from_parts(cells, pts))
    }

    pub fn from_rset(s: &RSet) -> RSetLiteral {
        RSetLiteral::Object {
            cells: s.cells.iter().map(CellLiteral::from_cell).collect(),
            points: s.points.clone(),
        }
    }
}

impl Serialize for RSet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        RSetLiteral::from_rset(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for RSet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        RSetLiteral::deserialize(d)?.to_rset().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactnum::parse_scalar;

    fn s(t: &str) -> Scalar {
        parse_scalar(t).unwrap()
    }
    fn cl(a: &str, b: &str) -> Cell {
        Cell::closed(s(a), s(b))
    }
    fn set(cells: Vec<Cell>, pts: &[&str]) -> RSet {
        RSet::from_parts(cells, pts.iter().map(|p| s(p)).collect())
    }
    fn fin(t: &str) -> ExtScalar {
        ExtScalar::Finite(s(t))
    }
    fn qray_le(b: &str) -> Cell {
        Cell::upto(s(b), true).with_density(Density::rational())
    }

    #[test]
    fn distances() {
        assert_eq!(distance(&s("0"), &RSet::from_cell(cl("1", "2"))), fin("1"));
        assert_eq!(distance(&s("3"), &set(vec![cl("0", "1"), cl("5", "7")], &[])), fin("2"));
        let dq = RSet::from_cell(cl("0", "1").with_density(Density::rational()));
        assert_eq!(distance(&Scalar::sqrt2(), &dq), fin("-1+1r2"));
        assert_eq!(distance(&s("0"), &RSet::empty()), ExtScalar::PosInf);
    }

    #[test]
    fn excesses() {
        let b = set(vec![cl("0", "1"), cl("2", "3")], &[]);
        assert_eq!(excess(&RSet::from_cell(cl("0", "3")), &b), fin("1/2"));
        assert_eq!(excess(&RSet::empty(), &RSet::from_cell(cl("0", "1"))), fin("0"));
        assert_eq!(excess(&RSet::from_cell(cl("0", "1")), &RSet::empty()), ExtScalar::PosInf);
        assert_eq!(excess(&RSet::from_cell(Cell::from(s("0"), true)), &RSet::from_cell(cl("0", "1"))), ExtScalar::PosInf);
    }

    #[test]
    fn dilations() {
        assert_eq!(dilate(&RSet::from_cell(cl("1", "2")), &s("1")).unwrap(), RSet::from_cell(cl("0", "3")));
        assert_eq!(dilate(&set(vec![], &["0", "5"]), &s("1")).unwrap(), set(vec![cl("-1", "1"), cl("4", "6")], &[]));
        assert_eq!(dilate(&RSet::empty(), &s("1")).unwrap(), RSet::empty());
        assert!(dilate(&RSet::empty(), &s("-1")).is_err());
        // Exact Minkowski sum keeps open ends open.
        assert_eq!(dilate(&RSet::from_cell(Cell::open(s("0"), s("1"))), &s("1")).unwrap(), RSet::from_cell(Cell::open(s("-1"), s("2"))));
    }

    #[test]
    fn minkowski_sums() {
        assert_eq!(minkowski(&RSet::from_cell(cl("0", "1")), &RSet::from_cell(cl("2", "3")), true), RSet::from_cell(cl("2", "4")));
        assert_eq!(minkowski(&RSet::from_cell(cl("-1", "1")), &RSet::from_cell(cl("-1", "1")), true), RSet::from_cell(cl("-2", "2")));
        assert_eq!(minkowski(&set(vec![], &["2"]), &set(vec![], &["-2+1/3r2"]), true), set(vec![], &["1/3r2"]));
        // Dense plus an irrational point keeps the offset.
        let d = RSet::from_cell(qray_le("-1"));
        let shifted = minkowski(&d, &set(vec![], &["1r2"]), true);
        assert!(shifted.contains(&s("-3+1r2")));
        assert!(!shifted.contains(&s("-3")));
    }

    #[test]
    fn intersections() {
        assert_eq!(RSet::from_cell(cl("0", "3")).intersect_cell(&Cell::open(s("1"), s("2"))), RSet::from_cell(Cell::open(s("1"), s("2"))));
        let shelf = set(vec![cl("1", "2")], &["0"]);
        assert_eq!(shelf.intersect_cell(&Cell::ball(&s("2"), &s("1/2"))), RSet::from_cell(Cell::open_closed(s("3/2"), s("2"))));
        let d = RSet::from_cell(qray_le("-1"));
        let got = d.intersect_cell(&Cell::open(s("-3/2"), s("-1/2")));
        assert_eq!(got, RSet::from_cell(Cell::open_closed(s("-3/2"), s("-1")).with_density(Density::rational())));
    }

    #[test]
    fn membership() {
        let d = RSet::from_cell(Cell::from(s("1"), true).with_density(Density::rational()));
        assert!(d.contains(&s("2")));
        assert!(!d.contains(&Scalar::sqrt2()));
        assert!(!RSet::from_cell(Cell::closed_open(s("0"), s("1"))).contains(&s("1")));
    }

    #[test]
    fn closures() {
        let d = RSet::from_cell(Cell::open(s("0"), s("1")).with_density(Density::rational()));
        assert_eq!(d.closure(), RSet::from_cell(cl("0", "1")));
        assert!(set(vec![cl("1", "2")], &["0"]).is_closed());
        assert_eq!(RSet::from_cell(Cell::open(s("0"), s("1"))).closure(), RSet::from_cell(cl("0", "1")));
        assert!(!d.is_closed());
    }

    #[test]
    fn normal_forms() {
        // Adjacent solid cells merge; touching points close open ends.
        let a = set(vec![Cell::open(s("0"), s("1")), Cell::open(s("1"), s("2"))], &["1"]);
        assert_eq!(a, RSet::from_cell(Cell::open(s("0"), s("2"))));
        // Points inside dense cells are absorbed.
        let q = Cell::closed(s("0"), s("2")).with_density(Density::rational());
        assert_eq!(set(vec![q.clone()], &["1"]), RSet::from_cell(q.clone()));
        // An irrational point splits nothing.
        let with_irr = set(vec![q.clone()], &["1r2"]);
        assert_eq!(with_irr.cells().len(), 1);
        assert_eq!(with_irr.points(), &[Scalar::sqrt2()]);
        // Dense parts under a solid cell vanish; a rational boundary joins the solid cell.
        let mixed = set(vec![q, Cell::open(s("1"), s("3"))], &[]);
        assert_eq!(mixed.cells().len(), 2);
        assert!(mixed.contains(&s("1")));
        assert_eq!(mixed.cells()[1], Cell::closed_open(s("1"), s("3")));
        assert!(mixed.is_subset(&RSet::from_cell(cl("0", "3"))));
        assert!(!RSet::from_cell(cl("0", "3")).is_subset(&mixed));
    }
}
