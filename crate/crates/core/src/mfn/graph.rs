//! Semilinear graphs: finite unions of convex polyhedral atoms in graph space.
//!
//! Variables are ordered `[input_0, .., input_{d-1}, output]`.

use crate::exactnum::{ExtScalar, Scalar};
use crate::linear::fm::{self, Constraint, Rel};
use crate::linear::formula::{self, Formula};
use crate::linear::OrderedRing;
use crate::rset::{Cell, Density, RSet};

/// A convex piece of a graph. A dense atom holds only the points of the piece
/// whose output is rational.
#[derive(Clone, Debug, PartialEq)]
pub struct Atom {
    pub cons: Vec<Constraint<Scalar>>,
    pub dense: bool,
}

impl Atom {
    pub fn new(cons: Vec<Constraint<Scalar>>, dense: bool) -> Atom {
        Atom { cons, dense }
    }

    /// Constraints relabelled into a space of `n` variables: local variable `i`
    /// becomes global variable `map[i]`.
    pub fn embed<R: OrderedRing>(&self, map: &[usize], n: usize) -> Vec<Constraint<R>> {
        self.cons.iter().map(|c| embed_constraint(c, map, n)).collect()
    }

    /// Closure of the atom: strict inequalities relaxed.
    pub fn closure(&self) -> Atom {
        Atom {
            cons: self
                .cons
                .iter()
                .map(|c| Constraint { rel: if c.rel == Rel::Lt { Rel::Le } else { c.rel }, ..c.clone() })
                .collect(),
            dense: false,
        }
    }
}

pub fn embed_constraint<R: OrderedRing>(c: &Constraint<Scalar>, map: &[usize], n: usize) -> Constraint<R> {
    let mut coef = vec![R::zero(); n];
    for (i, a) in c.coef.iter().enumerate() {
        if !a.is_zero() {
            coef[map[i]] = coef[map[i]].add(&R::from_scalar(a));
        }
    }
    Constraint::new(coef, R::from_scalar(&c.konst), c.rel)
}

/// `sum coef * v + k (rel) 0` over `n` scalar variables.
pub fn lin(n: usize, terms: &[(usize, Scalar)], k: Scalar, rel: Rel) -> Constraint<Scalar> {
    let mut coef = vec![Scalar::zero(); n];
    for (i, a) in terms {
        coef[*i] = &coef[*i] + a;
    }
    Constraint::new(coef, k, rel)
}

/// Constraints placing variable `v` in the span of `c`.
pub fn cell_constraints(c: &Cell, v: usize, n: usize) -> Vec<Constraint<Scalar>> {
    let mut out = Vec::new();
    if let ExtScalar::Finite(lo) = &c.lo {
        // lo - v (rel) 0
        out.push(lin(n, &[(v, Scalar::int(-1))], lo.clone(), if c.lo_closed { Rel::Le } else { Rel::Lt }));
    }
    if let ExtScalar::Finite(hi) = &c.hi {
        out.push(lin(n, &[(v, Scalar::one())], -hi, if c.hi_closed { Rel::Le } else { Rel::Lt }));
    }
    out
}

/// Interval described by constraints mentioning only variable `v`.
pub fn constraints_to_cell(cs: &[Constraint<Scalar>], v: usize) -> Option<Cell> {
    let cs = fm::simplify(cs.to_vec())?;
    let mut lo = (ExtScalar::NegInf, false);
    let mut hi = (ExtScalar::PosInf, false);
    for c in &cs {
        debug_assert!(c.coef.iter().enumerate().all(|(i, a)| i == v || a.is_zero()));
        let a = &c.coef[v];
        let b = ExtScalar::Finite((-&c.konst).checked_div(a).expect("nonzero"));
        let closed = c.rel != Rel::Lt;
        if c.rel == Rel::Eq || a.is_positive() {
            if b < hi.0 || (b == hi.0 && !closed) {
                hi = (b.clone(), closed);
            }
        }
        if c.rel == Rel::Eq || a.is_negative() {
            if b > lo.0 || (b == lo.0 && !closed) {
                lo = (b, closed);
            }
        }
    }
    let empty = match lo.0.cmp(&hi.0) {
        std::cmp::Ordering::Greater => true,
        std::cmp::Ordering::Equal => !(lo.1 && hi.1),
        std::cmp::Ordering::Less => false,
    };
    if empty {
        None
    } else {
        Some(Cell { lo: lo.0, hi: hi.0, lo_closed: lo.1, hi_closed: hi.1, density: Density::Solid })
    }
}

/// Keep only the listed variables, in the listed order.
pub fn compress(cs: Vec<Constraint<Scalar>>, keep: &[usize]) -> Vec<Constraint<Scalar>> {
    cs.into_iter()
        .map(|c| Constraint::new(keep.iter().map(|&i| c.coef[i].clone()).collect(), c.konst, c.rel))
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct GraphMap {
    pub in_dim: usize,
    pub atoms: Vec<Atom>,
}

impl GraphMap {
    pub fn new(in_dim: usize, atoms: Vec<Atom>) -> GraphMap {
        let atoms = atoms
            .into_iter()
            .filter_map(|a| fm::simplify(a.cons).map(|cons| Atom { cons, dense: a.dense }))
            .filter(|a| fm::feasible(&a.cons))
            .collect();
        GraphMap { in_dim, atoms }
    }

    pub fn nvars(&self) -> usize {
        self.in_dim + 1
    }

    /// True when every atom is solid, so the exact engine applies.
    pub fn is_solid(&self) -> bool {
        self.atoms.iter().all(|a| !a.dense)
    }

    /// The set of values of the free coordinate when all others are fixed.
    /// `fixed` has one entry per graph variable; exactly one is `None`.
    pub fn section(&self, fixed: &[Option<Scalar>]) -> RSet {
        let n = self.nvars();
        assert_eq!(fixed.len(), n);
        let free = fixed.iter().position(|f| f.is_none()).expect("one free variable");
        let out_var = self.in_dim;
        let mut cells = Vec::new();
        for atom in &self.atoms {
            let mut density = Density::Solid;
            if atom.dense {
                if free == out_var {
                    density = Density::rational();
                } else if !fixed[out_var].as_ref().expect("fixed output").is_rational() {
                    continue;
                }
            }
            let cs: Vec<Constraint<Scalar>> = atom
                .cons
                .iter()
                .map(|c| {
                    let mut k = c.konst.clone();
                    let mut coef = vec![Scalar::zero(); n];
                    for (i, a) in c.coef.iter().enumerate() {
                        match &fixed[i] {
                            Some(v) => k = &k + &(a * v),
                            None => coef[i] = a.clone(),
                        }
                    }
                    Constraint::new(coef, k, c.rel)
                })
                .collect();
            if let Some(cell) = constraints_to_cell(&cs, free) {
                if cell.is_degenerate() && density != Density::Solid {
                    let p = cell.lo.finite().cloned().expect("finite");
                    if p.is_rational() {
                        cells.push(Cell::closed(p.clone(), p));
                    }
                } else {
                    cells.push(cell.with_density(density));
                }
            }
        }
        RSet::from_parts(cells, vec![])
    }

    pub fn fiber(&self, x: &[Scalar]) -> RSet {
        let mut fixed: Vec<Option<Scalar>> = x.iter().cloned().map(Some).collect();
        fixed.push(None);
        self.section(&fixed)
    }

    /// Image of the input region described by `region` (constraints over the
    /// input variables only, given in a space of `in_dim` variables).
    pub fn image_of_region(&self, region: &[Constraint<Scalar>]) -> RSet {
        let n = self.nvars();
        let inputs: Vec<usize> = (0..self.in_dim).collect();
        let mut cells = Vec::new();
        for atom in &self.atoms {
            let mut cs = atom.cons.clone();
            cs.extend(region.iter().map(|c| embed_constraint::<Scalar>(c, &inputs, n)));
            if let Some(p) = fm::project(cs, &inputs) {
                if let Some(cell) = constraints_to_cell(&p, self.in_dim) {
                    if atom.dense && !cell.is_degenerate() {
                        cells.push(cell.with_density(Density::rational()));
                    } else if !atom.dense || cell.lo.finite().map(|p| p.is_rational()).unwrap_or(false) {
                        cells.push(cell);
                    }
                }
            }
        }
        RSet::from_parts(cells, vec![])
    }

    /// Image of a cell (one-dimensional input).
    pub fn image_of_cell(&self, c: &Cell) -> RSet {
        assert_eq!(self.in_dim, 1);
        self.image_of_region(&cell_constraints(c, 0, 1))
    }

    /// Graph of the inverse (one-dimensional input).
    pub fn transpose(&self) -> GraphMap {
        assert_eq!(self.in_dim, 1);
        let atoms = self.atoms.iter().map(|a| Atom::new(compress(a.cons.clone(), &[1, 0]), a.dense)).collect();
        GraphMap::new(1, atoms)
    }

    /// Relabel variables: new variable `j` is old variable `perm[j]`.
    pub fn permute(&self, perm: &[usize]) -> GraphMap {
        let atoms = self.atoms.iter().map(|a| Atom::new(compress(a.cons.clone(), perm), a.dense)).collect();
        GraphMap::new(self.in_dim, atoms)
    }

    /// Combine atom pairs over a joint space and project to the listed variables.
    fn combine(
        &self,
        other: &GraphMap,
        n: usize,
        map_self: &[usize],
        map_other: &[usize],
        link: &[Constraint<Scalar>],
        keep: &[usize],
        out_in_dim: usize,
    ) -> GraphMap {
        let elim: Vec<usize> = (0..n).filter(|i| !keep.contains(i)).collect();
        let mut atoms = Vec::new();
        for a in &self.atoms {
            for b in &other.atoms {
                let mut cs: Vec<Constraint<Scalar>> = a.embed(map_self, n);
                cs.extend(b.embed::<Scalar>(map_other, n));
                cs.extend(link.iter().cloned());
                if let Some(p) = fm::project(cs, &elim) {
                    atoms.push(Atom::new(compress(p, keep), false));
                }
            }
        }
        GraphMap::new(out_in_dim, atoms)
    }

    /// Graph of `x -> F(x) + G(x)` for solid graphs with equal input dimension.
    pub fn sum(&self, g: &GraphMap) -> GraphMap {
        assert_eq!(self.in_dim, g.in_dim);
        let d = self.in_dim;
        let n = d + 3;
        let ins: Vec<usize> = (0..d).collect();
        let mut mf = ins.clone();
        mf.push(d);
        let mut mg = ins.clone();
        mg.push(d + 1);
        let link = vec![lin(n, &[(d, Scalar::one()), (d + 1, Scalar::one()), (d + 2, Scalar::int(-1))], Scalar::zero(), Rel::Eq)];
        let mut keep = ins;
        keep.push(d + 2);
        self.combine(g, n, &mf, &mg, &link, &keep, d)
    }

    /// Graph of `x -> F(x) - G^{-1}(x)` where `G` maps outputs of `F` back to inputs.
    pub fn diff_inverse(&self, g: &GraphMap) -> GraphMap {
        assert_eq!(self.in_dim, 1);
        assert_eq!(g.in_dim, 1);
        // x, y, z, s with (x, y) in F, (z, x) in G, s = y - z
        let n = 4;
        let link = vec![lin(n, &[(1, Scalar::one()), (2, Scalar::int(-1)), (3, Scalar::int(-1))], Scalar::zero(), Rel::Eq)];
        self.combine(g, n, &[0, 1], &[2, 0], &link, &[0, 3], 1)
    }

    /// Graph of `(x, p) -> F(x, p) + G(x)`.
    pub fn param_sum(&self, g: &GraphMap) -> GraphMap {
        assert_eq!(self.in_dim, 2);
        assert_eq!(g.in_dim, 1);
        let n = 5;
        let link = vec![lin(n, &[(2, Scalar::one()), (3, Scalar::one()), (4, Scalar::int(-1))], Scalar::zero(), Rel::Eq)];
        self.combine(g, n, &[0, 1, 2], &[0, 3], &link, &[0, 1, 4], 2)
    }

    /// Graph of `p -> {x : 0 in H(x, p)}`.
    pub fn implicit(&self) -> GraphMap {
        assert_eq!(self.in_dim, 2);
        let atoms = self
            .atoms
            .iter()
            .filter_map(|a| {
                let mut cs = a.cons.clone();
                cs.push(lin(3, &[(2, Scalar::one())], Scalar::zero(), Rel::Eq));
                fm::project(cs, &[2]).map(|p| Atom::new(compress(p, &[1, 0]), false))
            })
            .collect();
        GraphMap::new(1, atoms)
    }

    /// Graph of `(y, w) -> {x : 0 in F(x, y) + g(w)}`.
    pub fn gamma(&self, g: &GraphMap) -> GraphMap {
        assert_eq!(self.in_dim, 2);
        assert_eq!(g.in_dim, 1);
        // x, y, w, z, q with (x, y, z) in F, (w, q) in g, z + q = 0
        let n = 5;
        let link = vec![lin(n, &[(3, Scalar::one()), (4, Scalar::one())], Scalar::zero(), Rel::Eq)];
        self.combine(g, n, &[0, 1, 3], &[2, 4], &link, &[1, 2, 0], 2)
    }

    /// Graph of the one-input map obtained by fixing input `var` at `value`.
    pub fn slice(&self, var: usize, value: &Scalar) -> GraphMap {
        assert_eq!(self.in_dim, 2);
        let n = 3;
        let keep = [1 - var, 2];
        let atoms = self
            .atoms
            .iter()
            .filter_map(|a| {
                let mut cs = a.cons.clone();
                cs.push(lin(n, &[(var, Scalar::one())], -value, Rel::Eq));
                fm::project(cs, &[var]).map(|p| Atom::new(compress(p, &keep), a.dense))
            })
            .collect();
        GraphMap::new(1, atoms)
    }

    /// Graph of `x -> F(x) - a * x_var`.
    pub fn shear(&self, var: usize, a: &Scalar) -> GraphMap {
        let d = self.in_dim;
        let atoms = self
            .atoms
            .iter()
            .map(|at| {
                let cons = at
                    .cons
                    .iter()
                    .map(|c| {
                        // y = y' + a x_var
                        let mut coef = c.coef.clone();
                        coef[var] = &coef[var] + &(&c.coef[d] * a);
                        Constraint::new(coef, c.konst.clone(), c.rel)
                    })
                    .collect();
                Atom::new(cons, at.dense)
            })
            .collect();
        GraphMap::new(d, atoms)
    }

    /// The atoms that meet `region`; the graph is unchanged inside it.
    pub fn localize(&self, region: &[Constraint<Scalar>]) -> GraphMap {
        let atoms = self
            .atoms
            .iter()
            .filter(|a| {
                let mut cs = a.cons.clone();
                cs.extend(region.iter().cloned());
                fm::feasible(&cs)
            })
            .cloned()
            .collect();
        GraphMap { in_dim: self.in_dim, atoms }
    }

    /// Whether the graph is a closed subset of the product space.
    pub fn is_closed(&self) -> bool {
        self.closed_within(&[])
    }

    /// Whether the graph intersected with the closed region `region` is closed.
    pub fn closed_within(&self, region: &[Constraint<Scalar>]) -> bool {
        let solid: Vec<&Atom> = self.atoms.iter().filter(|a| !a.dense).collect();
        for a in &self.atoms {
            let mut cs = a.closure().cons;
            cs.extend(region.iter().cloned());
            let mut parts = vec![Formula::conj(cs)];
            for b in &solid {
                parts.push(Formula::not_conj(&b.cons));
            }
            if formula::solve(&Formula::and(parts)).is_some() {
                return false;
            }
        }
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactnum::parse_scalar;

    fn s(t: &str) -> Scalar {
        parse_scalar(t).unwrap()
    }

    /// y = a x + b over all x.
    fn line(a: &str, b: &str) -> GraphMap {
        GraphMap::new(1, vec![Atom::new(vec![lin(2, &[(0, s(a)), (1, s("-1"))], s(b), Rel::Eq)], false)])
    }

    #[test]
    fn fibers_and_images() {
        let f = line("2", "0");
        assert_eq!(f.fiber(&[s("3")]), RSet::point(s("6")));
        let img = f.image_of_cell(&Cell::ball(&s("0"), &s("1/4")));
        assert_eq!(img, RSet::from_cell(Cell::open(s("-1/2"), s("1/2"))));
        assert_eq!(f.transpose().fiber(&[s("1")]), RSet::point(s("1/2")));
        assert!(f.is_closed());
    }

    #[test]
    fn difference_of_lines() {
        let d = line("2", "0").diff_inverse(&line("1", "0"));
        assert_eq!(d.fiber(&[s("5")]), RSet::point(s("5")));
    }
}
