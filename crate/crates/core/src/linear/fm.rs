//! Linear constraints and Fourier-Motzkin elimination.

use std::collections::HashMap;

use super::ring::OrderedRing;
use crate::exactnum::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Rel {
    Lt,
    Le,
    Eq,
}

/// `sum coef[i] * v_i + konst  (rel)  0`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Constraint<R> {
    pub coef: Vec<R>,
    pub konst: R,
    pub rel: Rel,
}

impl<R: OrderedRing> Constraint<R> {
    pub fn new(coef: Vec<R>, konst: R, rel: Rel) -> Self {
        Constraint { coef, konst, rel }
    }

    pub fn nvars(&self) -> usize {
        self.coef.len()
    }

    fn is_constant(&self) -> bool {
        self.coef.iter().all(|c| c.is_zero())
    }

    /// Truth value of a constraint without variables.
    fn constant_truth(&self) -> bool {
        let s = self.konst.sign();
        match self.rel {
            Rel::Lt => s < 0,
            Rel::Le => s <= 0,
            Rel::Eq => s == 0,
        }
    }

    fn scale_pos(&self, k: &R) -> Self {
        Constraint {
            coef: self.coef.iter().map(|c| c.mul(k)).collect(),
            konst: self.konst.mul(k),
            rel: self.rel,
        }
    }

    fn combine(&self, other: &Self, rel: Rel) -> Self {
        Constraint {
            coef: self.coef.iter().zip(&other.coef).map(|(a, b)| a.add(b)).collect(),
            konst: self.konst.add(&other.konst),
            rel,
        }
    }

    /// Divide by a positive scalar so the leading coefficient has unit magnitude;
    /// equalities also get a positive leading coefficient.
    fn normalized(mut self) -> Self {
        let lead = self.coef.iter().find(|c| !c.is_zero()).cloned();
        let Some(lead) = lead else { return self };
        if self.rel == Rel::Eq && lead.sign() < 0 {
            self.coef = self.coef.iter().map(|c| c.neg()).collect();
            self.konst = self.konst.neg();
        }
        if let Some(m) = lead.magnitude() {
            if m != Scalar::one() {
                self.coef = self.coef.iter().map(|c| c.div_scalar(&m)).collect();
                self.konst = self.konst.div_scalar(&m);
            }
        }
        self
    }

    pub fn negations(&self) -> Vec<Constraint<R>> {
        let neg = Constraint {
            coef: self.coef.iter().map(|c| c.neg()).collect(),
            konst: self.konst.neg(),
            rel: Rel::Lt,
        };
        match self.rel {
            Rel::Lt => vec![Constraint { rel: Rel::Le, ..neg }],
            Rel::Le => vec![neg],
            Rel::Eq => vec![Constraint { rel: Rel::Lt, ..self.clone() }, neg],
        }
    }
}

impl Constraint<Scalar> {
    pub fn eval(&self, vals: &[Scalar]) -> Scalar {
        let mut acc = self.konst.clone();
        for (c, v) in self.coef.iter().zip(vals) {
            if !c.is_zero() {
                acc = &acc + &(c * v);
            }
        }
        acc
    }

    pub fn satisfied(&self, vals: &[Scalar]) -> bool {
        let s = self.eval(vals).sign();
        match self.rel {
            Rel::Lt => s < 0,
            Rel::Le => s <= 0,
            Rel::Eq => s == 0,
        }
    }
}

/// Simplify a conjunction: normalize, drop tautologies, keep the tightest of
/// parallel inequalities. `None` means a contradiction was found.
pub fn simplify<R: OrderedRing>(cs: Vec<Constraint<R>>) -> Option<Vec<Constraint<R>>> {
    let mut eqs: HashMap<Vec<R>, R> = HashMap::new();
    let mut ineqs: HashMap<Vec<R>, (R, Rel)> = HashMap::new();
    let mut order: Vec<(Vec<R>, bool)> = Vec::new();
    for c in cs {
        if c.is_constant() {
            if !c.constant_truth() {
                return None;
            }
            continue;
        }
        let c = c.normalized();
        if c.rel == Rel::Eq {
            match eqs.get(&c.coef) {
                Some(k) => {
                    if *k != c.konst {
                        return None;
                    }
                }
                None => {
                    order.push((c.coef.clone(), true));
                    eqs.insert(c.coef, c.konst);
                }
            }
        } else {
            match ineqs.get_mut(&c.coef) {
                Some((k, rel)) => {
                    let d = c.konst.sub(k).sign();
                    if d > 0 || (d == 0 && c.rel == Rel::Lt) {
                        *k = c.konst;
                        *rel = c.rel;
                    }
                }
                None => {
                    order.push((c.coef.clone(), false));
                    ineqs.insert(c.coef, (c.konst, c.rel));
                }
            }
        }
    }
    let mut out = Vec::with_capacity(order.len());
    for (coef, is_eq) in order {
        if is_eq {
            let k = eqs[&coef].clone();
            out.push(Constraint { coef, konst: k, rel: Rel::Eq });
        } else {
            let (k, rel) = ineqs[&coef].clone();
            out.push(Constraint { coef, konst: k, rel });
        }
    }
    // Opposite parallel inequalities: a.v <= -k1 and -a.v <= -k2.
    for i in 0..out.len() {
        if out[i].rel == Rel::Eq {
            continue;
        }
        let negc: Vec<R> = out[i].coef.iter().map(|c| c.neg()).collect();
        if let Some((k2, rel2)) = ineqs.get(&negc) {
            let sum = out[i].konst.add(k2).sign();
            let strict = out[i].rel == Rel::Lt || *rel2 == Rel::Lt;
            if sum > 0 || (sum == 0 && strict) {
                return None;
            }
        }
    }
    Some(out)
}

/// Eliminate variable `v`; `None` on contradiction.
pub fn eliminate<R: OrderedRing>(cs: Vec<Constraint<R>>, v: usize) -> Option<Vec<Constraint<R>>> {
    if let Some(pos) = cs.iter().position(|c| c.rel == Rel::Eq && !c.coef[v].is_zero()) {
        let e = cs[pos].clone();
        let a = e.coef[v].clone();
        let sa = a.sign();
        let abs_a = if sa < 0 { a.neg() } else { a.clone() };
        let mut out = Vec::with_capacity(cs.len());
        for (i, c) in cs.into_iter().enumerate() {
            if i == pos {
                continue;
            }
            if c.coef[v].is_zero() {
                out.push(c);
                continue;
            }
            // |a| c - sign(a) c_v e
            let k = if sa < 0 { c.coef[v].clone() } else { c.coef[v].neg() };
            let rel = c.rel;
            out.push(c.scale_pos(&abs_a).combine(&e.scale_pos(&k), rel));
        }
        return simplify(out);
    }
    let (mut pos, mut neg, mut rest) = (Vec::new(), Vec::new(), Vec::new());
    for c in cs {
        match c.coef[v].sign() {
            1 => pos.push(c),
            -1 => neg.push(c),
            _ => rest.push(c),
        }
    }
    for p in &pos {
        for n in &neg {
            let cp = p.coef[v].clone();
            let cn = n.coef[v].neg();
            let rel = if p.rel == Rel::Lt || n.rel == Rel::Lt { Rel::Lt } else { Rel::Le };
            rest.push(p.scale_pos(&cn).combine(&n.scale_pos(&cp), rel));
        }
    }
    simplify(rest)
}

fn occurs<R: OrderedRing>(cs: &[Constraint<R>], v: usize) -> bool {
    cs.iter().any(|c| !c.coef[v].is_zero())
}

/// Choose the next variable to eliminate among `vars`.
fn pick<R: OrderedRing>(cs: &[Constraint<R>], vars: &[usize]) -> Option<usize> {
    let present: Vec<usize> = vars.iter().copied().filter(|&v| occurs(cs, v)).collect();
    if let Some(&v) = present
        .iter()
        .find(|&&v| cs.iter().any(|c| c.rel == Rel::Eq && !c.coef[v].is_zero()))
    {
        return Some(v);
    }
    present.into_iter().min_by_key(|&v| {
        let p = cs.iter().filter(|c| c.coef[v].sign() > 0).count();
        let n = cs.iter().filter(|c| c.coef[v].sign() < 0).count();
        (p * n) as isize - (p + n) as isize
    })
}

/// Project out `vars`; `None` if the system is infeasible.
pub fn project<R: OrderedRing>(cs: Vec<Constraint<R>>, vars: &[usize]) -> Option<Vec<Constraint<R>>> {
    let mut cur = simplify(cs)?;
    while let Some(v) = pick(&cur, vars) {
        cur = eliminate(cur, v)?;
    }
    Some(cur)
}

pub fn feasible<R: OrderedRing>(cs: &[Constraint<R>]) -> bool {
    let Some(first) = cs.first() else { return true };
    let vars: Vec<usize> = (0..first.nvars()).collect();
    project(cs.to_vec(), &vars).is_some()
}

/// A satisfying point of a feasible scalar system.
pub fn witness(cs: &[Constraint<Scalar>], nvars: usize) -> Option<Vec<Scalar>> {
    let vars: Vec<usize> = (0..nvars).collect();
    let mut cur = simplify(cs.to_vec())?;
    let mut stages: Vec<(usize, Vec<Constraint<Scalar>>)> = Vec::new();
    while let Some(v) = pick(&cur, &vars) {
        stages.push((v, cur.clone()));
        cur = eliminate(cur, v)?;
    }
    let mut vals = vec![Scalar::zero(); nvars];
    for (v, sys) in stages.into_iter().rev() {
        vals[v] = Scalar::zero();
        let mut lo: Option<(Scalar, bool)> = None;
        let mut hi: Option<(Scalar, bool)> = None;
        let mut fixed: Option<Scalar> = None;
        for c in &sys {
            let a = &c.coef[v];
            if a.is_zero() {
                continue;
            }
            // a v + rest (rel) 0
            let rest = c.eval(&vals);
            let bound = (-rest).checked_div(a).expect("nonzero");
            match c.rel {
                Rel::Eq => fixed = Some(bound),
                _ => {
                    let strict = c.rel == Rel::Lt;
                    if a.is_positive() {
                        let better = match &hi {
                            None => true,
                            Some((h, hs)) => bound < *h || (bound == *h && strict && !hs),
                        };
                        if better {
                            hi = Some((bound, strict));
                        }
                    } else {
                        let better = match &lo {
                            None => true,
                            Some((l, ls)) => bound > *l || (bound == *l && strict && !ls),
                        };
                        if better {
                            lo = Some((bound, strict));
                        }
                    }
                }
            }
        }
        vals[v] = match (fixed, lo, hi) {
            (Some(f), _, _) => f,
            (None, Some((l, _)), Some((h, _))) => {
                if l == h {
                    l
                } else {
                    nice_between(&l, &h)
                }
            }
            (None, Some((l, ls)), None) => {
                if ls {
                    l.floor_plus_one()
                } else {
                    l
                }
            }
            (None, None, Some((h, hs))) => {
                if hs {
                    h.ceil_minus_one()
                } else {
                    h
                }
            }
            (None, None, None) => Scalar::zero(),
        };
    }
    if cs.iter().all(|c| c.satisfied(&vals)) {
        Some(vals)
    } else {
        None
    }
}

/// A simple number strictly between `l < h`: a dyadic rational when possible.
fn nice_between(l: &Scalar, h: &Scalar) -> Scalar {
    let mid = (l + h).half();
    for k in 0..2000 {
        let step = Scalar::pow2(-k);
        let n = mid.checked_div(&step).expect("nonzero").floor();
        let cand = &Scalar::from_rational(num_rational::BigRational::from_integer(n)) * &step;
        if &cand > l && &cand < h {
            return cand;
        }
    }
    mid
}

trait StepExt {
    fn floor_plus_one(&self) -> Scalar;
    fn ceil_minus_one(&self) -> Scalar;
}

impl StepExt for Scalar {
    fn floor_plus_one(&self) -> Scalar {
        Scalar::from_rational(num_rational::BigRational::from_integer(self.floor() + 1))
    }
    fn ceil_minus_one(&self) -> Scalar {
        -(-self).floor_plus_one()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linear::ring::Eps;

    fn c(coef: &[i64], k: i64, rel: Rel) -> Constraint<Scalar> {
        Constraint::new(coef.iter().map(|&x| Scalar::int(x)).collect(), Scalar::int(k), rel)
    }

    #[test]
    fn strictness_matters() {
        // x < 1 and x >= 1
        assert!(!feasible(&[c(&[1], -1, Rel::Lt), c(&[-1], 1, Rel::Le)]));
        // x <= 1 and x >= 1
        let sys = [c(&[1], -1, Rel::Le), c(&[-1], 1, Rel::Le)];
        assert!(feasible(&sys));
        assert_eq!(witness(&sys, 1).unwrap(), vec![Scalar::one()]);
    }

    #[test]
    fn triangle_projection() {
        // 0 < x, 0 < y, x + y < 1, project y: 0 < x < 1
        let sys = vec![c(&[-1, 0], 0, Rel::Lt), c(&[0, -1], 0, Rel::Lt), c(&[1, 1], -1, Rel::Lt)];
        let p = project(sys.clone(), &[1]).unwrap();
        assert!(p.iter().all(|k| k.coef[1].is_zero()));
        let w = witness(&sys, 2).unwrap();
        assert!(sys.iter().all(|k| k.satisfied(&w)));
    }

    #[test]
    fn equalities_substitute() {
        // x = 2y, y >= 1, x <= 1 infeasible
        let sys = [c(&[1, -2], 0, Rel::Eq), c(&[0, -1], 1, Rel::Le), c(&[1, 0], -1, Rel::Le)];
        assert!(!feasible(&sys));
    }

    #[test]
    fn infinitesimal_feasibility() {
        // 0 < x < t and x > s is infeasible; 0 < x < s and x > t is feasible
        let s = Eps::s();
        let t = Eps::t();
        let mk = |a: i64, k: Eps, rel| Constraint::new(vec![Eps::from_scalar(&Scalar::int(a))], k, rel);
        let no = [mk(-1, Eps::zero(), Rel::Lt), mk(1, t.neg(), Rel::Lt), mk(-1, s.clone(), Rel::Lt)];
        assert!(!feasible(&no));
        let yes = [mk(-1, Eps::zero(), Rel::Lt), mk(1, s.neg(), Rel::Lt), mk(-1, t, Rel::Lt)];
        assert!(feasible(&yes));
    }
}
