//! Falsification by sampling for maps without a solid graph.
//!
//! Every reported violation is checked with exact fiber and image arithmetic,
//! so a returned witness is a proof of failure; the absence of one proves
//! nothing.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::types::{Property, Window};
use crate::exactnum::{ExtScalar, Scalar};
use crate::mfn::MapHandle;
use crate::rset::{distance, Cell, RSet};

#[derive(Clone, Copy, Debug)]
pub struct Sampling {
    pub grid: usize,
    pub seed: u64,
}

type Values = Vec<(String, Scalar)>;

fn named(pairs: &[(&str, &Scalar)]) -> Values {
    pairs.iter().map(|(n, v)| (n.to_string(), (*v).clone())).collect()
}

/// Sample inputs of the open ball `B(center, radius)`.
pub fn inputs(map: &MapHandle, center: &Scalar, radius: &Scalar, s: Sampling) -> Vec<Scalar> {
    let g = s.grid.max(2) as i64;
    let mut out = vec![center.clone()];
    for k in 1..g {
        let step = radius * &Scalar::frac(k, g);
        out.push(center + &step);
        out.push(center - &step);
    }
    let irr = radius * &(Scalar::sqrt2() - Scalar::one());
    out.push(center + &irr);
    out.push(center - &irr.half());
    out.extend(map.special_points(center, radius, s.grid.max(4)));
    let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
    let scale = 1i64 << 16;
    for _ in 0..s.grid {
        let k: i64 = rng.gen_range(1 - scale..scale);
        out.push(center + &(radius * &Scalar::frac(k, scale)));
    }
    out.sort();
    out.dedup();
    out
}

/// Sample outputs of the open ball `B(center, radius)`, plus the given extras inside it.
fn outputs(center: &Scalar, radius: &Scalar, extra: &[Scalar], s: Sampling) -> Vec<Scalar> {
    let g = s.grid.max(2) as i64;
    let mut out = vec![center.clone()];
    for k in 1..g {
        let step = radius * &Scalar::frac(k, g);
        out.push(center + &step);
        out.push(center - &step);
    }
    let irr = radius * &(Scalar::sqrt2() - Scalar::one());
    out.push(center + &irr);
    out.push(center - &irr);
    out.extend(extra.iter().filter(|e| (*e - center).abs() < *radius).cloned());
    out.sort();
    out.dedup();
    out
}

/// Members of `F(x)` inside `B(ȳ, v)`, when the fiber is known exactly.
fn members(map: &MapHandle, x: &Scalar, yc: &Scalar, v: Option<&Scalar>) -> Vec<Scalar> {
    let f = map.fiber(std::slice::from_ref(x));
    if !f.exact {
        return vec![];
    }
    let set = match v {
        Some(v) => f.set.intersect_cell(&Cell::ball(yc, v)),
        None => f.set,
    };
    let mut out = set.sample_members();
    for c in set.cells() {
        if c.span_contains(yc) {
            out.push(c.member_near(yc));
        }
    }
    out.retain(|m| set.contains(m));
    out.sort();
    out.dedup();
    out
}

fn rhos(eps: &Scalar) -> Vec<Scalar> {
    vec![eps.half(), eps * &Scalar::frac(1, 4), eps * &Scalar::frac(1, 16), eps * &Scalar::frac(3, 4)]
}

/// Points of `B(c, r)` near its boundary and one irrational offset.
fn ball_points(c: &Scalar, r: &Scalar) -> Vec<Scalar> {
    let mut out = Vec::new();
    for k in [1, 2, 4, 8] {
        let d = r * &(Scalar::one() - Scalar::pow2(-k));
        out.push(c + &d);
        out.push(c - &d);
    }
    let irr = r * &(Scalar::sqrt2() - Scalar::one());
    out.push(c + &irr);
    out.push(c - &irr);
    out
}

fn ext_gt(a: &ExtScalar, b: &Scalar) -> bool {
    *a > ExtScalar::Finite(b.clone())
}

/// Search for a violation of `property` at rate `l` on window `w` around `(xb, yb)`.
pub fn search(
    map: &MapHandle,
    xb: &Scalar,
    yb: &Scalar,
    property: Property,
    l: &Scalar,
    w: &Window,
    s: Sampling,
) -> Option<Values> {
    let xs = || inputs(map, xb, &w.u_radius, s);
    match property {
        Property::Open => {
            for x in xs() {
                for y in members(map, &x, yb, Some(&w.v_radius)) {
                    for rho in rhos(&w.eps) {
                        let img = map.image_of_cell(&Cell::ball(&x, &rho))?;
                        for z in ball_points(&y, &(&rho * l)) {
                            if !img.contains(&z) {
                                return Some(named(&[("x", &x), ("y", &y), ("rho", &rho), ("z", &z)]));
                            }
                        }
                    }
                }
            }
            None
        }
        Property::OpenAt => {
            for rho in rhos(&w.eps) {
                let img = map.image_of_cell(&Cell::ball(xb, &rho))?;
                for z in ball_points(yb, &(&rho * l)) {
                    if !img.contains(&z) {
                        return Some(named(&[("rho", &rho), ("z", &z)]));
                    }
                }
            }
            None
        }
        Property::LipschitzLike | Property::FullLipschitz => {
            let v = (property == Property::LipschitzLike).then_some(&w.v_radius);
            let pts = xs();
            for x in &pts {
                let ys = members(map, x, yb, v);
                for u in &pts {
                    let r = &(x - u).abs() * l;
                    let fu = map.fiber(std::slice::from_ref(u)).set;
                    for y in &ys {
                        if fu.intersect_cell(&Cell::closed_ball(y, &r)).is_empty() {
                            return Some(named(&[("x", x), ("u", u), ("y", y)]));
                        }
                    }
                }
            }
            None
        }
        Property::MetricRegular => {
            for x in xs() {
                let fx = map.fiber(std::slice::from_ref(&x)).set;
                let extra: Vec<Scalar> = fx.sample_members();
                for y in outputs(yb, &w.v_radius, &extra, s) {
                    let ExtScalar::Finite(dy) = distance(&y, &fx) else { continue };
                    let Ok(pre) = map.preimage(&y) else { return None };
                    if ext_gt(&distance(&x, &pre.set), &(&dy * l)) {
                        return Some(named(&[("x", &x), ("y", &y)]));
                    }
                }
            }
            None
        }
        Property::Pseudocalm => {
            for x in xs() {
                let fx = map.fiber(std::slice::from_ref(&x)).set;
                if ext_gt(&distance(yb, &fx), &(&(&x - xb).abs() * l)) {
                    return Some(named(&[("x", &x)]));
                }
            }
            None
        }
        Property::Hemiregular => {
            for y in outputs(yb, &w.v_radius, &[], s) {
                let Ok(pre) = map.preimage(&y) else { return None };
                if ext_gt(&distance(xb, &pre.set), &(&(&y - yb).abs() * l)) {
                    return Some(named(&[("y", &y)]));
                }
            }
            None
        }
        Property::Calm => {
            for x in xs() {
                let fx = map.fiber(std::slice::from_ref(&x)).set;
                for y in fx.sample_members() {
                    if fx.contains(&y) && (&y - yb).abs() > &(&x - xb).abs() * l {
                        return Some(named(&[("x", &x), ("y", &y)]));
                    }
                }
            }
            None
        }
        _ => None,
    }
}

/// `x` within `delta` of `xb` with `F(x) ∩ B(yb, eps) = ∅`.
pub fn isc_search(map: &MapHandle, xb: &Scalar, yb: &Scalar, delta: &Scalar, eps: &Scalar, s: Sampling) -> Option<Values> {
    for x in inputs(map, xb, delta, s) {
        let fx = map.fiber(std::slice::from_ref(&x)).set;
        if fx.intersect_cell(&Cell::ball(yb, eps)).is_empty() {
            return Some(named(&[("x", &x)]));
        }
    }
    None
}

/// Whether no graph atom depends on the input, so every fiber is the same set.
pub fn input_independent(map: &MapHandle) -> bool {
    match map.graph() {
        Some(g) => g.atoms.iter().all(|a| a.cons.iter().all(|c| (0..g.in_dim).all(|i| c.coef[i].is_zero()))),
        None => false,
    }
}

/// `F(x) ∩ B` for replay.
pub fn fiber_near(map: &MapHandle, x: &Scalar, c: &Scalar, r: &Scalar) -> RSet {
    map.fiber(std::slice::from_ref(x)).set.intersect_cell(&Cell::ball(c, r))
}
