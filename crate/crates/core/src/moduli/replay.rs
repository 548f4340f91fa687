//! Re-evaluation of failure witnesses.
//!
//! A witness with one moving input is replayed with fiber, image and distance
//! arithmetic only; witnesses with several moving inputs are replayed by
//! re-deciding the violation with every named variable pinned.

use super::builder::Rate;
use super::exact::{self, Problem, WinR};
use super::types::{Certificate, Property, Verdict, Witness};
use super::Point;
use crate::exactnum::{ExtScalar, Scalar};
use crate::linear::fm::Rel;
use crate::linear::formula::{self, Formula};
use crate::mfn::graph::{cell_constraints, lin};
use crate::mfn::MapHandle;
use crate::rset::{distance, Cell, RSet};

/// Whether the certificate's witness is a genuine violation. Certificates
/// without a witness replay as `false`.
pub fn replay(map: &MapHandle, pt: &Point, cert: &Certificate, moving: Option<usize>) -> bool {
    if cert.verdict != Verdict::Fails {
        return false;
    }
    match &cert.witness {
        Some(w) => replay_witness(map, pt, cert.property, moving, w),
        None => false,
    }
}

pub fn replay_witness(map: &MapHandle, pt: &Point, property: Property, moving: Option<usize>, w: &Witness) -> bool {
    let d = map.in_dim();
    if d == 1 || moving.is_some() {
        if let Some(ok) = replay_direct(map, pt, property, moving.unwrap_or(0), w) {
            return ok;
        }
    }
    replay_formula(map, pt, property, moving, w)
}

struct Ctx<'a> {
    map: &'a MapHandle,
    pt: &'a Point,
    w: &'a Witness,
    m: usize,
}

impl<'a> Ctx<'a> {
    fn get(&self, name: &str) -> Option<Scalar> {
        self.w.get(name).cloned()
    }

    /// Input vector named `prefix`: `x` for one input, `x_x`/`x_p` for two.
    fn input(&self, prefix: &str) -> Option<Vec<Scalar>> {
        if self.map.in_dim() == 1 {
            Some(vec![self.get(prefix)?])
        } else {
            Some(vec![self.get(&format!("{prefix}_x"))?, self.get(&format!("{prefix}_p"))?])
        }
    }

    fn in_u(&self, x: &[Scalar]) -> bool {
        let win = &self.w.window;
        (0..x.len()).all(|i| {
            let r = if i == self.m { &win.u_radius } else { &win.p() };
            (&x[i] - &self.pt.x[i]).abs() < r.clone()
        })
    }

    fn in_v(&self, y: &Scalar) -> bool {
        (y - &self.pt.y).abs() < self.w.window.v_radius
    }

    fn fiber(&self, x: &[Scalar]) -> RSet {
        self.map.fiber(x).set
    }

    /// `F(B)` where the moving input ranges over `ball` and the others are fixed at `x`.
    fn image(&self, x: &[Scalar], ball: &Cell) -> Option<RSet> {
        if self.map.in_dim() == 1 {
            return self.map.image_of_cell(ball);
        }
        let g = self.map.graph()?;
        let n = g.in_dim;
        let mut region = cell_constraints(ball, self.m, n);
        for (i, xi) in x.iter().enumerate() {
            if i != self.m {
                region.push(lin(n, &[(i, Scalar::one())], -xi, Rel::Eq));
            }
        }
        Some(g.image_of_region(&region))
    }

    /// `{x_m : y ∈ F(x)}` with the other inputs fixed at `x`; the closure is
    /// enough for distances.
    fn preimage(&self, x: &[Scalar], y: &Scalar) -> Option<RSet> {
        if self.map.in_dim() == 1 {
            return self.map.preimage(y).ok().map(|f| f.set);
        }
        let g = self.map.graph()?;
        let mut fixed: Vec<Option<Scalar>> = x.iter().cloned().map(Some).collect();
        fixed[self.m] = None;
        fixed.push(Some(y.clone()));
        Some(g.section(&fixed))
    }
}

fn gt(a: &ExtScalar, b: &Scalar) -> bool {
    *a > ExtScalar::Finite(b.clone())
}

fn replay_direct(map: &MapHandle, pt: &Point, property: Property, m: usize, w: &Witness) -> Option<bool> {
    let c = Ctx { map, pt, w, m };
    let l = &w.rate;
    let win = &w.window;
    let ok = match property {
        Property::Open => {
            let x = c.input("x")?;
            let (y, rho, z) = (c.get("y")?, c.get("rho")?, c.get("z")?);
            c.fiber(&x).contains(&y)
                && c.in_u(&x)
                && c.in_v(&y)
                && rho.is_positive()
                && rho < win.eps
                && (&z - &y).abs() < &rho * l
                && !c.image(&x, &Cell::ball(&x[m], &rho))?.contains(&z)
        }
        Property::LipschitzLike | Property::FullLipschitz => {
            let x = c.input("x")?;
            let u_name = if map.in_dim() == 1 { "u".to_string() } else { ["u_x", "u_p"][m].to_string() };
            let mut u = x.clone();
            u[m] = c.get(&u_name)?;
            let y = c.get("y")?;
            let r = &(&x[m] - &u[m]).abs() * l;
            c.fiber(&x).contains(&y)
                && c.in_u(&x)
                && c.in_u(&u)
                && (property == Property::FullLipschitz || c.in_v(&y))
                && c.fiber(&u).intersect_cell(&Cell::closed_ball(&y, &r)).is_empty()
        }
        Property::MetricRegular => {
            let x = c.input("x")?;
            let y = c.get("y")?;
            let ExtScalar::Finite(dy) = distance(&y, &c.fiber(&x)) else { return Some(false) };
            c.in_u(&x) && c.in_v(&y) && gt(&distance(&x[m], &c.preimage(&x, &y)?), &(&dy * l))
        }
        Property::OpenAt if map.in_dim() == 1 => {
            let (rho, z) = (c.get("rho")?, c.get("z")?);
            rho.is_positive()
                && rho < win.eps
                && (&z - &pt.y).abs() < &rho * l
                && !map.image_of_cell(&Cell::ball(&pt.x[0], &rho))?.contains(&z)
        }
        Property::Pseudocalm if map.in_dim() == 1 => {
            let x = c.get("x")?;
            (&x - &pt.x[0]).abs() < win.u_radius
                && gt(&distance(&pt.y, &map.eval_fiber(&x)), &(&(&x - &pt.x[0]).abs() * l))
        }
        Property::Hemiregular if map.in_dim() == 1 => {
            let y = c.get("y")?;
            c.in_v(&y) && gt(&distance(&pt.x[0], &map.preimage(&y).ok()?.set), &(&(&y - &pt.y).abs() * l))
        }
        Property::Calm if map.in_dim() == 1 => {
            let (x, y) = (c.get("x")?, c.get("y")?);
            map.eval_fiber(&x).contains(&y) && c.in_u(&[x.clone()]) && (&y - &pt.y).abs() > &(&x - &pt.x[0]).abs() * l
        }
        Property::InnerSemicontinuous if map.in_dim() == 1 => {
            let x = c.get("x")?;
            (&x - &pt.x[0]).abs() < w.rate
                && map.eval_fiber(&x).intersect_cell(&Cell::ball(&pt.y, &win.v_radius)).is_empty()
        }
        _ => return None,
    };
    Some(ok)
}

/// Pin every named variable and decide the violation formula again.
fn replay_formula(map: &MapHandle, pt: &Point, property: Property, moving: Option<usize>, w: &Witness) -> bool {
    let Some(g) = map.solid_graph() else { return false };
    let pb = Problem::new(g, pt.x.clone(), pt.y.clone(), moving);
    let win = if property == Property::InnerSemicontinuous {
        WinR { u: w.window.v_radius.clone(), v: None, eps: w.window.v_radius.clone(), p: w.window.v_radius.clone() }
    } else {
        WinR::concrete(&w.window)
    };
    let v = exact::violation::<Scalar>(&pb, property, &Rate::value(&w.rate), &win);
    let mut parts = vec![v.formula];
    for (name, idx) in &v.names {
        let Some(val) = w.get(name) else { return false };
        parts.push(Formula::Atom(lin(v.n, &[(*idx, Scalar::one())], -val, Rel::Eq)));
    }
    formula::solve(&Formula::and(parts)).is_some()
}
