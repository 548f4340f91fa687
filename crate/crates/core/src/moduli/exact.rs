//! Exact decision of regularity properties on solid graphs.
//!
//! Each property is refuted by an existential formula: a violating graph
//! point together with, for every atom, the absence of the point the
//! property promises. Satisfiability is decided by Fourier-Motzkin search,
//! over `Scalar` for concrete rates and windows or over `Eps` when they are
//! infinitesimally perturbed.

use super::builder::{abs_bound, in_graph, le, lt, norm_bound, nowhere_in_graph, orthants, signed_sum, Lx, Rate, Vars};
use super::types::{Property, RateSpec, Window, WindowSpec};
use crate::exactnum::Scalar;
use crate::linear::fm::{self, Constraint};
use crate::linear::formula::{self, Formula};
use crate::linear::{Eps, OrderedRing};
use crate::mfn::graph::GraphMap;

/// A graph, a reference point on it and the inputs that move.
#[derive(Clone, Debug)]
pub struct Problem<'a> {
    pub graph: &'a GraphMap,
    pub x: Vec<Scalar>,
    pub y: Scalar,
    pub moving: Vec<usize>,
}

impl<'a> Problem<'a> {
    pub fn new(graph: &'a GraphMap, x: Vec<Scalar>, y: Scalar, moving: Option<usize>) -> Self {
        let moving = match moving {
            Some(i) => vec![i],
            None => (0..graph.in_dim).collect(),
        };
        Problem { graph, x, y, moving }
    }

    fn frozen(&self) -> Vec<usize> {
        (0..self.graph.in_dim).filter(|i| !self.moving.contains(i)).collect()
    }
}

/// Window radii in the coefficient ring; `None` for `v` drops the output window.
#[derive(Clone, Debug)]
pub struct WinR<R> {
    pub u: R,
    pub v: Option<R>,
    pub eps: R,
    pub p: R,
}

impl<R: OrderedRing> WinR<R> {
    pub fn concrete(w: &Window) -> Self {
        WinR {
            u: R::from_scalar(&w.u_radius),
            v: Some(R::from_scalar(&w.v_radius)),
            eps: R::from_scalar(&w.eps),
            p: R::from_scalar(&w.p()),
        }
    }
}

impl WinR<Eps> {
    pub fn every() -> Self {
        WinR { u: Eps::t(), v: Some(Eps::t()), eps: Eps::t(), p: Eps::t() }
    }

    pub fn from_spec(w: &WindowSpec) -> Self {
        match w {
            WindowSpec::Concrete(w) => WinR::concrete(w),
            WindowSpec::Every => WinR::every(),
        }
    }
}

pub fn eps_rate(r: &RateSpec) -> Rate<Eps> {
    let c = |q: &Scalar| Eps::constant(q);
    match r {
        RateSpec::Value(q) => Rate { num: c(q), den: Eps::one() },
        RateSpec::Above(q) => Rate { num: c(q).add(&Eps::s()), den: Eps::one() },
        RateSpec::Below(q) => Rate { num: c(q).sub(&Eps::s()), den: Eps::one() },
        RateSpec::Tiny => Rate { num: Eps::s(), den: Eps::one() },
        RateSpec::Huge => Rate { num: Eps::one(), den: Eps::s() },
    }
}

fn coord_names(d: usize, prefix: &str) -> Vec<String> {
    match d {
        1 => vec![prefix.to_string()],
        _ => (0..d).map(|i| format!("{prefix}{}", ["_x", "_p", "_2", "_3"][i.min(3)])).collect(),
    }
}

/// The violation formula together with the variable count and named outer variables.
pub struct Violation<R> {
    pub formula: Formula<R>,
    pub n: usize,
    pub names: Vec<(String, usize)>,
}

/// Build the formula whose satisfiability refutes `property` at `rate` on `win`.
pub fn violation<R: OrderedRing>(pb: &Problem, property: Property, rate: &Rate<R>, win: &WinR<R>) -> Violation<R> {
    let d = pb.graph.in_dim;
    let m = pb.moving.len();
    let frozen = pb.frozen();
    let mut vars = Vars::default();
    let sc = |n: usize, s: &Scalar| Lx::<R>::scalar(n, s);
    match property {
        Property::Open => {
            let xs = vars.many(d);
            let y = vars.one();
            let rho = vars.one();
            let z = vars.one();
            let xp = vars.many(m);
            let n = vars.count();
            let v = |i| Lx::<R>::var(n, i);
            let mut outer = vec![in_graph(pb.graph, &[xs.clone(), vec![y]].concat(), n)];
            let mut cs = input_window(pb, &xs, &frozen, win, n);
            if let Some(vr) = &win.v {
                cs.extend(abs_bound(&v(y).sub(&sc(n, &pb.y)), &Lx::cst(n, vr.clone()), true));
            }
            cs.push(lt(&Lx::cst(n, R::zero()), &v(rho)));
            cs.push(lt(&v(rho), &Lx::cst(n, win.eps.clone())));
            cs.extend(abs_bound(&v(z).sub(&v(y)).scale(&rate.den), &v(rho).scale(&rate.num), true));
            outer.push(Formula::conj(cs));
            let mut map = xs.clone();
            for (k, &i) in pb.moving.iter().enumerate() {
                map[i] = xp[k];
            }
            map.push(z);
            let diffs: Vec<Lx<R>> = pb.moving.iter().enumerate().map(|(k, &i)| v(xp[k]).sub(&v(xs[i]))).collect();
            let extra = norm_bound(&diffs, &v(rho), true);
            outer.push(nowhere_in_graph(pb.graph, &map, n, &extra, &xp));
            let mut names = named(&coord_names(d, "x"), &xs);
            names.extend([("y".to_string(), y), ("rho".to_string(), rho), ("z".to_string(), z)]);
            Violation { formula: Formula::and(outer), n, names }
        }
        Property::LipschitzLike | Property::FullLipschitz => {
            let xs = vars.many(d);
            let us = vars.many(m);
            let y = vars.one();
            let y2 = vars.one();
            let n = vars.count();
            let v = |i| Lx::<R>::var(n, i);
            let mut outer = vec![in_graph(pb.graph, &[xs.clone(), vec![y]].concat(), n)];
            let mut cs = input_window(pb, &xs, &frozen, win, n);
            for (k, &i) in pb.moving.iter().enumerate() {
                cs.extend(abs_bound(&v(us[k]).sub(&sc(n, &pb.x[i])), &Lx::cst(n, win.u.clone()), true));
            }
            if property == Property::LipschitzLike {
                if let Some(vr) = &win.v {
                    cs.extend(abs_bound(&v(y).sub(&sc(n, &pb.y)), &Lx::cst(n, vr.clone()), true));
                }
            }
            outer.push(Formula::conj(cs));
            let mut map = xs.clone();
            for (k, &i) in pb.moving.iter().enumerate() {
                map[i] = us[k];
            }
            map.push(y2);
            let diffs: Vec<Lx<R>> = pb.moving.iter().enumerate().map(|(k, &i)| v(xs[i]).sub(&v(us[k]))).collect();
            let mut branches = Vec::new();
            for sigma in orthants(m) {
                let mut orth = Vec::new();
                for (k, e) in diffs.iter().enumerate() {
                    let e = if sigma[k] { e.neg() } else { e.clone() };
                    orth.push(le(&Lx::cst(n, R::zero()), &e));
                }
                let dist = signed_sum(&diffs, &sigma).scale(&rate.num);
                let extra = abs_bound(&v(y).sub(&v(y2)).scale(&rate.den), &dist, false);
                branches.push(Formula::and(vec![
                    Formula::conj(orth),
                    nowhere_in_graph(pb.graph, &map, n, &extra, &[y2]),
                ]));
            }
            outer.push(Formula::or(branches));
            let mut names = named(&coord_names(d, "x"), &xs);
            let unames: Vec<String> =
                pb.moving.iter().map(|&i| if d == 1 { "u".into() } else { coord_names(d, "u")[i].clone() }).collect();
            names.extend(named(&unames, &us));
            names.push(("y".into(), y));
            Violation { formula: Formula::and(outer), n, names }
        }
        Property::MetricRegular => {
            let xs = vars.many(d);
            let y = vars.one();
            let y1 = vars.one();
            let s = vars.one();
            let xpp = vars.many(m);
            let n = vars.count();
            let v = |i| Lx::<R>::var(n, i);
            let mut outer = vec![in_graph(pb.graph, &[xs.clone(), vec![y1]].concat(), n)];
            let mut cs = input_window(pb, &xs, &frozen, win, n);
            if let Some(vr) = &win.v {
                cs.extend(abs_bound(&v(y).sub(&sc(n, &pb.y)), &Lx::cst(n, vr.clone()), true));
            }
            cs.extend(abs_bound(&v(y).sub(&v(y1)).scale(&rate.num), &v(s).scale(&rate.den), true));
            outer.push(Formula::conj(cs));
            let mut map = xs.clone();
            for (k, &i) in pb.moving.iter().enumerate() {
                map[i] = xpp[k];
            }
            map.push(y);
            let diffs: Vec<Lx<R>> = pb.moving.iter().enumerate().map(|(k, &i)| v(xpp[k]).sub(&v(xs[i]))).collect();
            let extra = norm_bound(&diffs, &v(s), true);
            outer.push(nowhere_in_graph(pb.graph, &map, n, &extra, &xpp));
            let mut names = named(&coord_names(d, "x"), &xs);
            names.extend([("y".to_string(), y), ("y_near".to_string(), y1), ("s".to_string(), s)]);
            Violation { formula: Formula::and(outer), n, names }
        }
        Property::OpenAt => {
            let rho = vars.one();
            let z = vars.one();
            let xp = vars.many(m);
            let n = vars.count();
            let v = |i| Lx::<R>::var(n, i);
            let mut cs = vec![lt(&Lx::cst(n, R::zero()), &v(rho)), lt(&v(rho), &Lx::cst(n, win.eps.clone()))];
            cs.extend(abs_bound(&v(z).sub(&sc(n, &pb.y)).scale(&rate.den), &v(rho).scale(&rate.num), true));
            let (map, diffs) = at_point_map(pb, &xp, n);
            let mut map = map;
            map.push(z);
            let extra = norm_bound(&diffs, &v(rho), true);
            let f = Formula::and(vec![Formula::conj(cs), nowhere_in_graph(pb.graph, &map, n, &extra, &xp)]);
            Violation { formula: f, n, names: vec![("rho".into(), rho), ("z".into(), z)] }
        }
        Property::Pseudocalm => {
            let xs = vars.many(m);
            let s = vars.one();
            let y2 = vars.one();
            let n = vars.count();
            let v = |i| Lx::<R>::var(n, i);
            let mut cs = Vec::new();
            for (k, &i) in pb.moving.iter().enumerate() {
                cs.extend(abs_bound(&v(xs[k]).sub(&sc(n, &pb.x[i])), &Lx::cst(n, win.u.clone()), true));
            }
            let (mut map, diffs) = at_point_map(pb, &xs, n);
            let scaled: Vec<Lx<R>> = diffs.iter().map(|e| e.scale(&rate.num)).collect();
            cs.extend(norm_bound(&scaled, &v(s).scale(&rate.den), true));
            map.push(y2);
            let extra = abs_bound(&v(y2).sub(&sc(n, &pb.y)), &v(s), true);
            let f = Formula::and(vec![Formula::conj(cs), nowhere_in_graph(pb.graph, &map, n, &extra, &[y2])]);
            let mut names = named(&moving_names(pb, "x"), &xs);
            names.push(("s".into(), s));
            Violation { formula: f, n, names }
        }
        Property::Hemiregular => {
            let y = vars.one();
            let s = vars.one();
            let xpp = vars.many(m);
            let n = vars.count();
            let v = |i| Lx::<R>::var(n, i);
            let mut cs = Vec::new();
            if let Some(vr) = &win.v {
                cs.extend(abs_bound(&v(y).sub(&sc(n, &pb.y)), &Lx::cst(n, vr.clone()), true));
            }
            cs.extend(abs_bound(&v(y).sub(&sc(n, &pb.y)).scale(&rate.num), &v(s).scale(&rate.den), true));
            let (mut map, diffs) = at_point_map(pb, &xpp, n);
            map.push(y);
            let extra = norm_bound(&diffs, &v(s), true);
            let f = Formula::and(vec![Formula::conj(cs), nowhere_in_graph(pb.graph, &map, n, &extra, &xpp)]);
            Violation { formula: f, n, names: vec![("y".into(), y), ("s".into(), s)] }
        }
        Property::Calm => {
            let xs = vars.many(d);
            let y = vars.one();
            let n = vars.count();
            let v = |i| Lx::<R>::var(n, i);
            let mut outer = vec![in_graph(pb.graph, &[xs.clone(), vec![y]].concat(), n)];
            outer.push(Formula::conj(input_window(pb, &xs, &frozen, win, n)));
            let diffs: Vec<Lx<R>> = pb.moving.iter().map(|&i| v(xs[i]).sub(&sc(n, &pb.x[i]))).collect();
            let dy = v(y).sub(&sc(n, &pb.y)).scale(&rate.den);
            let mut branches = Vec::new();
            for side in [dy.clone(), dy.neg()] {
                let cs: Vec<Constraint<R>> =
                    orthants(m).iter().map(|sg| lt(&signed_sum(&diffs, sg).scale(&rate.num), &side)).collect();
                branches.push(Formula::conj(cs));
            }
            outer.push(Formula::or(branches));
            let mut names = named(&coord_names(d, "x"), &xs);
            names.push(("y".into(), y));
            Violation { formula: Formula::and(outer), n, names }
        }
        Property::InnerSemicontinuous => {
            // rate.num carries delta and win.eps carries epsilon.
            let xs = vars.many(d);
            let y = vars.one();
            let n = vars.count();
            let v = |i| Lx::<R>::var(n, i);
            let diffs: Vec<Lx<R>> = (0..d).map(|i| v(xs[i]).sub(&sc(n, &pb.x[i]))).collect();
            let cs = norm_bound(&diffs, &Lx::cst(n, rate.num.clone()), true);
            let mut map = xs.clone();
            map.push(y);
            let extra = abs_bound(&v(y).sub(&sc(n, &pb.y)), &Lx::cst(n, win.eps.clone()), true);
            let f = Formula::and(vec![Formula::conj(cs), nowhere_in_graph(pb.graph, &map, n, &extra, &[y])]);
            Violation { formula: f, n, names: named(&coord_names(d, "x"), &xs) }
        }
        Property::SumStable | Property::Claim => panic!("no single-graph formula for {property:?}"),
    }
}

fn named(names: &[String], idx: &[usize]) -> Vec<(String, usize)> {
    names.iter().cloned().zip(idx.iter().copied()).collect()
}

fn moving_names(pb: &Problem, prefix: &str) -> Vec<String> {
    let all = coord_names(pb.graph.in_dim, prefix);
    pb.moving.iter().map(|&i| all[i].clone()).collect()
}

/// `U` on moving inputs and the frozen-input window.
fn input_window<R: OrderedRing>(pb: &Problem, xs: &[usize], frozen: &[usize], win: &WinR<R>, n: usize) -> Vec<Constraint<R>> {
    let mut cs = Vec::new();
    for &i in &pb.moving {
        cs.extend(abs_bound(
            &Lx::var(n, xs[i]).sub(&Lx::scalar(n, &pb.x[i])),
            &Lx::cst(n, win.u.clone()),
            true,
        ));
    }
    for &j in frozen {
        cs.extend(abs_bound(
            &Lx::var(n, xs[j]).sub(&Lx::scalar(n, &pb.x[j])),
            &Lx::cst(n, win.p.clone()),
            true,
        ));
    }
    cs
}

/// Inputs for at-point properties: moving coordinates are variables, frozen
/// ones sit at the reference point. Also returns the moving displacements.
fn at_point_map<R: OrderedRing>(pb: &Problem, moving_vars: &[usize], n: usize) -> (Vec<usize>, Vec<Lx<R>>) {
    assert!(pb.frozen().is_empty(), "at-point properties move every input");
    let map = moving_vars.to_vec();
    let diffs = pb
        .moving
        .iter()
        .enumerate()
        .map(|(k, &i)| Lx::var(n, moving_vars[k]).sub(&Lx::scalar(n, &pb.x[i])))
        .collect();
    (map, diffs)
}

/// Concrete violating values, if any.
pub fn find_violation(pb: &Problem, property: Property, rate: &Scalar, w: &Window) -> Option<Vec<(String, Scalar)>> {
    let v = violation::<Scalar>(pb, property, &Rate::value(rate), &WinR::concrete(w));
    solve_named(&v)
}

pub fn solve_named(v: &Violation<Scalar>) -> Option<Vec<(String, Scalar)>> {
    let conj = formula::solve(&v.formula)?;
    let vals = fm::witness(&conj, v.n).expect("satisfiable conjunction has a witness");
    Some(v.names.iter().map(|(name, i)| (name.clone(), vals[*i].clone())).collect())
}

/// Whether a violation exists with possibly infinitesimal rate and window.
pub fn violated_eps(pb: &Problem, property: Property, rate: &RateSpec, w: &WindowSpec) -> bool {
    let v = violation::<Eps>(pb, property, &eps_rate(rate), &WinR::from_spec(w));
    formula::solve(&v.formula).is_some()
}

/// Inner semicontinuity at `(x̄, ȳ)`: for a concrete `(δ, ε)` pair.
pub fn isc_violation(pb: &Problem, delta: &Scalar, eps: &Scalar) -> Option<Vec<(String, Scalar)>> {
    let win = WinR { u: eps.clone(), v: None, eps: eps.clone(), p: eps.clone() };
    let v = violation::<Scalar>(pb, Property::InnerSemicontinuous, &Rate::value(delta), &win);
    solve_named(&v)
}

/// Inner semicontinuity for every `ε`, with `δ` infinitely smaller than `ε`.
pub fn isc_holds_exactly(pb: &Problem) -> bool {
    let win = WinR { u: Eps::s(), v: None, eps: Eps::s(), p: Eps::s() };
    let rate = Rate { num: Eps::t(), den: Eps::one() };
    let v = violation::<Eps>(pb, Property::InnerSemicontinuous, &rate, &win);
    formula::solve(&v.formula).is_none()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mfn::MapHandle;

    fn graph(name: &str) -> GraphMap {
        MapHandle::builtin(name).unwrap().graph().unwrap().clone()
    }

    fn q(n: i64, d: i64) -> Scalar {
        Scalar::frac(n, d)
    }

    #[test]
    fn linear_openness() {
        let g = graph("linear_2x");
        let pb = Problem::new(&g, vec![Scalar::zero()], Scalar::zero(), None);
        let w = Window::default();
        assert!(find_violation(&pb, Property::Open, &q(2, 1), &w).is_none());
        let wit = find_violation(&pb, Property::Open, &q(21, 10), &w).unwrap();
        let get = |n: &str| wit.iter().find(|(k, _)| k == n).unwrap().1.clone();
        let (x, z, rho) = (get("x"), get("z"), get("rho"));
        assert!((&z - &(&x * &q(2, 1))).abs() >= &rho * &q(2, 1));
        assert!(violated_eps(&pb, Property::Open, &RateSpec::Above(q(2, 1)), &WindowSpec::Every));
        assert!(!violated_eps(&pb, Property::Open, &RateSpec::Value(q(2, 1)), &WindowSpec::Every));
    }

    #[test]
    fn lipschitz_like_and_regularity() {
        let g = graph("abs_interval");
        let pb = Problem::new(&g, vec![Scalar::zero()], Scalar::zero(), None);
        let w = Window::default();
        assert!(find_violation(&pb, Property::LipschitzLike, &q(1, 1), &w).is_none());
        assert!(find_violation(&pb, Property::LipschitzLike, &q(9, 10), &w).is_some());
        let l2 = graph("linear_2x");
        let pb2 = Problem::new(&l2, vec![Scalar::zero()], Scalar::zero(), None);
        assert!(find_violation(&pb2, Property::MetricRegular, &q(1, 2), &w).is_none());
        assert!(find_violation(&pb2, Property::MetricRegular, &q(2, 5), &w).is_some());
        assert!(find_violation(&pb2, Property::Hemiregular, &q(2, 5), &w).is_some());
        assert!(find_violation(&pb2, Property::Hemiregular, &q(1, 2), &w).is_none());
    }

    #[test]
    fn inner_semicontinuity() {
        let g = graph("jump_two");
        let pb = Problem::new(&g, vec![q(1, 1)], q(2, 1), None);
        assert!(isc_violation(&pb, &q(1, 4), &q(1, 2)).is_some());
        assert!(!isc_holds_exactly(&pb));
        let g = graph("abs_interval");
        let pb = Problem::new(&g, vec![q(1, 1)], q(1, 1), None);
        assert!(isc_holds_exactly(&pb));
    }
}
