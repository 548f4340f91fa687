//! Quantifier-free formulas over linear constraints and a satisfiability search.

use super::fm::{self, Constraint};
use super::ring::OrderedRing;

#[derive(Clone, Debug)]
pub enum Formula<R> {
    True,
    False,
    Atom(Constraint<R>),
    And(Vec<Formula<R>>),
    Or(Vec<Formula<R>>),
}

impl<R: OrderedRing> Formula<R> {
    pub fn and(parts: Vec<Formula<R>>) -> Formula<R> {
        let mut out = Vec::new();
        for p in parts {
            match p {
                Formula::True => {}
                Formula::False => return Formula::False,
                Formula::And(inner) => out.extend(inner),
                other => out.push(other),
            }
        }
        match out.len() {
            0 => Formula::True,
            1 => out.pop().expect("one"),
            _ => Formula::And(out),
        }
    }

    pub fn or(parts: Vec<Formula<R>>) -> Formula<R> {
        let mut out = Vec::new();
        for p in parts {
            match p {
                Formula::False => {}
                Formula::True => return Formula::True,
                Formula::Or(inner) => out.extend(inner),
                other => out.push(other),
            }
        }
        match out.len() {
            0 => Formula::False,
            1 => out.pop().expect("one"),
            _ => Formula::Or(out),
        }
    }

    pub fn conj(cs: Vec<Constraint<R>>) -> Formula<R> {
        Formula::and(cs.into_iter().map(Formula::Atom).collect())
    }

    /// Negation of a conjunction: a disjunction of negated constraints.
    pub fn not_conj(cs: &[Constraint<R>]) -> Formula<R> {
        Formula::or(cs.iter().flat_map(|c| c.negations()).map(Formula::Atom).collect())
    }
}

/// `¬∃ vars. conj` as a formula in the remaining variables.
pub fn not_exists<R: OrderedRing>(conj: Vec<Constraint<R>>, vars: &[usize]) -> Formula<R> {
    match fm::project(conj, vars) {
        None => Formula::True,
        Some(p) => Formula::not_conj(&p),
    }
}

/// Find a satisfiable conjunction implied by a branch of `f`.
pub fn solve<R: OrderedRing>(f: &Formula<R>) -> Option<Vec<Constraint<R>>> {
    let mut conj = Vec::new();
    let mut ors: Vec<&Vec<Formula<R>>> = Vec::new();
    if !flatten(f, &mut conj, &mut ors) {
        return None;
    }
    search(conj, ors)
}

fn flatten<'a, R: OrderedRing>(
    f: &'a Formula<R>,
    conj: &mut Vec<Constraint<R>>,
    ors: &mut Vec<&'a Vec<Formula<R>>>,
) -> bool {
    match f {
        Formula::True => true,
        Formula::False => false,
        Formula::Atom(c) => {
            conj.push(c.clone());
            true
        }
        Formula::And(fs) => fs.iter().all(|g| flatten(g, conj, ors)),
        Formula::Or(bs) => {
            ors.push(bs);
            true
        }
    }
}

fn search<R: OrderedRing>(conj: Vec<Constraint<R>>, mut ors: Vec<&Vec<Formula<R>>>) -> Option<Vec<Constraint<R>>> {
    let conj = fm::simplify(conj)?;
    if !fm::feasible(&conj) {
        return None;
    }
    if ors.is_empty() {
        return Some(conj);
    }
    // Branch on the disjunction with the fewest alternatives.
    let (idx, _) = ors.iter().enumerate().min_by_key(|(_, b)| b.len()).expect("nonempty");
    let branches = ors.swap_remove(idx);
    for b in branches {
        let mut c2 = conj.clone();
        let mut o2 = ors.clone();
        if !flatten(b, &mut c2, &mut o2) {
            continue;
        }
        if let Some(found) = search(c2, o2) {
            return Some(found);
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactnum::Scalar;
    use crate::linear::fm::Rel;

    fn c(coef: &[i64], k: i64, rel: Rel) -> Constraint<Scalar> {
        Constraint::new(coef.iter().map(|&x| Scalar::int(x)).collect(), Scalar::int(k), rel)
    }

    #[test]
    fn disjunction_search() {
        // (x < 0 or x > 2) and 1 <= x <= 3
        let f = Formula::and(vec![
            Formula::or(vec![Formula::Atom(c(&[1], 0, Rel::Lt)), Formula::Atom(c(&[-1], 2, Rel::Lt))]),
            Formula::Atom(c(&[-1], 1, Rel::Le)),
            Formula::Atom(c(&[1], -3, Rel::Le)),
        ]);
        let conj = solve(&f).unwrap();
        let w = fm::witness(&conj, 1).unwrap();
        assert!(w[0] > Scalar::int(2) && w[0] <= Scalar::int(3));
    }

    #[test]
    fn not_exists_projection() {
        // not exists y: 0 <= y <= x  <=>  x < 0
        let inner = vec![c(&[0, -1], 0, Rel::Le), c(&[-1, 1], 0, Rel::Le)];
        let f = not_exists(inner, &[1]);
        let with_x = Formula::and(vec![f.clone(), Formula::Atom(c(&[-1, 0], 0, Rel::Le))]);
        assert!(solve(&with_x).is_none());
        let neg_x = Formula::and(vec![f, Formula::Atom(c(&[1, 0], 1, Rel::Le))]);
        assert!(solve(&neg_x).is_some());
    }
}
