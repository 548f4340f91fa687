//! Helpers for writing first-order violation formulas over a graph.

use crate::exactnum::Scalar;
use crate::linear::fm::{Constraint, Rel};
use crate::linear::formula::{self, Formula};
use crate::linear::OrderedRing;
use crate::mfn::graph::GraphMap;

/// An affine expression `c · v + k` over `n` variables.
#[derive(Clone, Debug)]
pub struct Lx<R> {
    pub c: Vec<R>,
    pub k: R,
}

impl<R: OrderedRing> Lx<R> {
    pub fn var(n: usize, i: usize) -> Self {
        let mut c = vec![R::zero(); n];
        c[i] = R::one();
        Lx { c, k: R::zero() }
    }

    pub fn cst(n: usize, k: R) -> Self {
        Lx { c: vec![R::zero(); n], k }
    }

    pub fn scalar(n: usize, k: &Scalar) -> Self {
        Lx::cst(n, R::from_scalar(k))
    }

    pub fn add(&self, o: &Self) -> Self {
        Lx { c: self.c.iter().zip(&o.c).map(|(a, b)| a.add(b)).collect(), k: self.k.add(&o.k) }
    }

    pub fn sub(&self, o: &Self) -> Self {
        Lx { c: self.c.iter().zip(&o.c).map(|(a, b)| a.sub(b)).collect(), k: self.k.sub(&o.k) }
    }

    pub fn scale(&self, r: &R) -> Self {
        Lx { c: self.c.iter().map(|a| a.mul(r)).collect(), k: self.k.mul(r) }
    }

    pub fn neg(&self) -> Self {
        Lx { c: self.c.iter().map(|a| a.neg()).collect(), k: self.k.neg() }
    }

    fn rel0(self, rel: Rel) -> Constraint<R> {
        Constraint::new(self.c, self.k, rel)
    }
}

pub fn lt<R: OrderedRing>(a: &Lx<R>, b: &Lx<R>) -> Constraint<R> {
    a.sub(b).rel0(Rel::Lt)
}

pub fn le<R: OrderedRing>(a: &Lx<R>, b: &Lx<R>) -> Constraint<R> {
    a.sub(b).rel0(Rel::Le)
}

pub fn eq<R: OrderedRing>(a: &Lx<R>, b: &Lx<R>) -> Constraint<R> {
    a.sub(b).rel0(Rel::Eq)
}

/// `|e| < b` (or `≤`) as two constraints.
pub fn abs_bound<R: OrderedRing>(e: &Lx<R>, b: &Lx<R>, strict: bool) -> Vec<Constraint<R>> {
    if strict {
        vec![lt(e, b), lt(&e.neg(), b)]
    } else {
        vec![le(e, b), le(&e.neg(), b)]
    }
}

/// Sign patterns of length `k`.
pub fn orthants(k: usize) -> Vec<Vec<bool>> {
    (0..1usize << k).map(|m| (0..k).map(|i| m >> i & 1 == 1).collect()).collect()
}

/// `Σ σ_i e_i` for the sign pattern `sigma` (true = negative).
pub fn signed_sum<R: OrderedRing>(es: &[Lx<R>], sigma: &[bool]) -> Lx<R> {
    let mut acc = es[0].scale(&R::zero());
    for (e, neg) in es.iter().zip(sigma) {
        acc = if *neg { acc.sub(e) } else { acc.add(e) };
    }
    acc
}

/// `‖e‖₁ < b` (or `≤`): every signed sum is below `b`.
pub fn norm_bound<R: OrderedRing>(es: &[Lx<R>], b: &Lx<R>, strict: bool) -> Vec<Constraint<R>> {
    orthants(es.len())
        .iter()
        .map(|s| {
            let e = signed_sum(es, s);
            if strict {
                lt(&e, b)
            } else {
                le(&e, b)
            }
        })
        .collect()
}

/// `Gr(g)` at the given global variables (`[inputs.., output]`).
pub fn in_graph<R: OrderedRing>(g: &GraphMap, map: &[usize], n: usize) -> Formula<R> {
    Formula::or(g.atoms.iter().map(|a| Formula::conj(a.embed::<R>(map, n))).collect())
}

/// `¬∃ inner. Gr(g)(map) ∧ extra`, atom by atom.
pub fn nowhere_in_graph<R: OrderedRing>(
    g: &GraphMap,
    map: &[usize],
    n: usize,
    extra: &[Constraint<R>],
    inner: &[usize],
) -> Formula<R> {
    Formula::and(
        g.atoms
            .iter()
            .map(|a| {
                let mut cs = a.embed::<R>(map, n);
                cs.extend(extra.iter().cloned());
                formula::not_exists(cs, inner)
            })
            .collect(),
    )
}

/// A rate `num / den` with both parts positive.
#[derive(Clone, Debug)]
pub struct Rate<R> {
    pub num: R,
    pub den: R,
}

impl<R: OrderedRing> Rate<R> {
    pub fn value(q: &Scalar) -> Self {
        Rate { num: R::from_scalar(q), den: R::one() }
    }
}

/// Variable allocator.
#[derive(Default)]
pub struct Vars {
    n: usize,
}

impl Vars {
    pub fn one(&mut self) -> usize {
        self.n += 1;
        self.n - 1
    }

    pub fn many(&mut self, k: usize) -> Vec<usize> {
        (0..k).map(|_| self.one()).collect()
    }

    pub fn count(&self) -> usize {
        self.n
    }
}
