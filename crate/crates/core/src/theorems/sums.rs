//! Local sum-stability of pairs `(F, G)` and the estimates it enables.

use super::implicit::{grid_around, within};
use super::{certified_bound, inconclusive, locally_closed, Hypothesis, TheoremError, TheoremReport, Tightness};
use crate::exactnum::Scalar;
use crate::linear::fm;
use crate::linear::formula::{self, Formula};
use crate::linear::{Eps, OrderedRing};
use crate::mfn::builtin::RatTailSeq;
use crate::mfn::graph::GraphMap;
use crate::mfn::{implicit_map, MapHandle};
use crate::moduli::builder::{abs_bound, eq, in_graph, norm_bound, Lx, Vars};
use crate::moduli::exact::{isc_holds_exactly, Problem};
use crate::moduli::replay::replay_witness;
use crate::moduli::sampled::{self, Sampling};
use crate::moduli::{
    check, check_calm, estimate_modulus, Certificate, Evidence, Kind, ModulusBracket, Opts, Point, Property, RateSpec,
    Verdict, Window, WindowSpec, Witness,
};
use crate::rset::{minkowski, Cell, Density, RSet};

/// `(x̄, ȳ, z̄)` with `ȳ ∈ F(x̄)` and `z̄ ∈ G(x̄₀)`; `x̄` has one entry per input of `F`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SumPoint {
    pub x: Vec<Scalar>,
    pub y: Scalar,
    pub z: Scalar,
}

impl SumPoint {
    pub fn new(x: Scalar, y: Scalar, z: Scalar) -> SumPoint {
        SumPoint { x: vec![x], y, z }
    }

    pub fn param(x: Scalar, p: Scalar, y: Scalar, z: Scalar) -> SumPoint {
        SumPoint { x: vec![x, p], y, z }
    }

    pub fn w(&self) -> Scalar {
        &self.y + &self.z
    }

    fn input_names(&self) -> Vec<String> {
        match self.x.len() {
            1 => vec!["x".into()],
            _ => vec!["x_x".into(), "x_p".into()],
        }
    }
}

fn validate(f: &MapHandle, g: &MapHandle, sp: &SumPoint) -> Result<(), TheoremError> {
    if f.in_dim() != sp.x.len() || g.in_dim() != 1 || sp.x.len() > 2 {
        return Err(TheoremError::Precondition("F takes x (or (x, p)) and G takes x".into()));
    }
    if !f.fiber(&sp.x).set.contains(&sp.y) {
        return Err(TheoremError::Precondition(format!("ȳ = {} ∉ F(x̄)", sp.y)));
    }
    if !g.fiber(&sp.x[..1]).set.contains(&sp.z) {
        return Err(TheoremError::Precondition(format!("z̄ = {} ∉ G(x̄)", sp.z)));
    }
    Ok(())
}

/// Some `w ∈ (F + G)(x)` near `ȳ + z̄` with `x` near `x̄` that is not `y + z`
/// for any `y ∈ F(x) ∩ B(ȳ, ε)`, `z ∈ G(x) ∩ B(z̄, ε)`.
struct SumViolation<R> {
    formula: Formula<R>,
    n: usize,
    names: Vec<(String, usize)>,
}

fn sum_violation<R: OrderedRing>(
    fg: &GraphMap,
    gg: &GraphMap,
    sp: &SumPoint,
    eps: &R,
    delta: &R,
    pin_w: bool,
) -> SumViolation<R> {
    let d = fg.in_dim;
    let mut vars = Vars::default();
    let xs = vars.many(d);
    let (y, z, w, y2, z2) = (vars.one(), vars.one(), vars.one(), vars.one(), vars.one());
    let n = vars.count();
    let v = |i| Lx::<R>::var(n, i);
    let c = |s: &Scalar| Lx::<R>::scalar(n, s);
    let e = Lx::<R>::cst(n, eps.clone());
    let dl = Lx::<R>::cst(n, delta.clone());
    let wbar = sp.w();
    let mut outer = Vec::new();
    let diffs: Vec<Lx<R>> = xs.iter().zip(&sp.x).map(|(&i, xb)| v(i).sub(&c(xb))).collect();
    outer.extend(norm_bound(&diffs, &dl, true));
    outer.push(eq(&v(w), &v(y).add(&v(z))));
    outer.extend(abs_bound(&v(w).sub(&c(&wbar)), &dl, true));
    if pin_w {
        outer.push(eq(&v(w), &c(&wbar)));
    }
    let mut fmap = xs.clone();
    fmap.push(y);
    let mut fmap2 = xs.clone();
    fmap2.push(y2);
    let mut parts = vec![in_graph(fg, &fmap, n), in_graph(gg, &[xs[0], z], n), Formula::conj(outer)];
    for a in &fg.atoms {
        for b in &gg.atoms {
            let mut cs = a.embed::<R>(&fmap2, n);
            cs.extend(b.embed::<R>(&[xs[0], z2], n));
            cs.push(eq(&v(y2).add(&v(z2)), &v(w)));
            cs.extend(abs_bound(&v(y2).sub(&c(&sp.y)), &e, true));
            cs.extend(abs_bound(&v(z2).sub(&c(&sp.z)), &e, true));
            parts.push(formula::not_exists(cs, &[y2, z2]));
        }
    }
    let mut names: Vec<(String, usize)> = sp.input_names().into_iter().zip(xs).collect();
    names.extend([("y".to_string(), y), ("z".to_string(), z), ("w".to_string(), w)]);
    SumViolation { formula: Formula::and(parts), n, names }
}

fn solve_values(v: &SumViolation<Scalar>) -> Option<Vec<(String, Scalar)>> {
    let conj = formula::solve(&v.formula)?;
    let vals = fm::witness(&conj, v.n).expect("satisfiable");
    Some(v.names.iter().map(|(n, i)| (n.clone(), vals[*i].clone())).collect())
}

fn window_for(delta: &Scalar, eps: &Scalar) -> Window {
    Window { u_radius: delta.clone(), v_radius: delta.clone(), eps: eps.clone(), p_radius: None }
}

fn cert(verdict: Verdict, rate: Option<RateSpec>, window: WindowSpec, ev: Evidence) -> Certificate {
    Certificate::new(Property::SumStable, verdict, rate, window, ev)
}

/// A concrete violation for the radius `eps`, trying `w = ȳ + z̄` first.
fn concrete_witness(fg: &GraphMap, gg: &GraphMap, sp: &SumPoint, eps: &Scalar) -> Option<Witness> {
    for k in 0..=20 {
        let delta = eps * &Scalar::pow2(-k);
        for pin in [true, false] {
            if let Some(values) = solve_values(&sum_violation(fg, gg, sp, eps, &delta, pin)) {
                return Some(Witness {
                    values,
                    rate: delta.clone(),
                    window: window_for(&delta, eps),
                    note: Some("w ∈ (F + G)(x) has no decomposition y + z within ε of (ȳ, z̄)".into()),
                });
            }
        }
    }
    None
}

/// Whether some `δ > 0` makes every `w ∈ (F + G)(x) ∩ B(ȳ + z̄, δ)`,
/// `x ∈ B(x̄, δ)`, decomposable within `ε` of `(ȳ, z̄)`.
pub fn check_sum_stability(
    f: &MapHandle,
    g: &MapHandle,
    sp: &SumPoint,
    eps: &Scalar,
    opts: &Opts,
) -> Result<Certificate, TheoremError> {
    validate(f, g, sp)?;
    if !eps.is_positive() {
        return Err(TheoremError::Precondition("ε must be positive".into()));
    }
    let (Some(fg), Some(gg)) = (f.solid_graph(), g.solid_graph()) else {
        return Ok(sampled_sum_stability(f, g, sp, eps, opts));
    };
    let v = sum_violation::<Eps>(fg, gg, sp, &Eps::constant(eps), &Eps::t(), false);
    if formula::solve(&v.formula).is_none() {
        for k in 0..=30 {
            let delta = eps * &Scalar::pow2(-k);
            if solve_values(&sum_violation(fg, gg, sp, eps, &delta, false)).is_none() {
                return Ok(cert(
                    Verdict::Holds,
                    Some(RateSpec::Value(delta.clone())),
                    WindowSpec::Concrete(window_for(&delta, eps)),
                    Evidence::Exact,
                )
                .with_note(format!("δ = {delta} works for ε = {eps}")));
            }
        }
        return Ok(cert(Verdict::Holds, Some(RateSpec::Tiny), WindowSpec::Concrete(window_for(eps, eps)), Evidence::Infinitesimal)
            .with_note("some δ > 0 works, smaller than ε·2^-30"));
    }
    let mut c = cert(Verdict::Fails, Some(RateSpec::Tiny), WindowSpec::Concrete(window_for(eps, eps)), Evidence::Infinitesimal)
        .with_note(format!("no δ > 0 works for ε = {eps}"));
    if let Some(w) = concrete_witness(fg, gg, sp, eps) {
        c = c.with_witness(w);
    }
    Ok(c)
}

/// Local sum-stability: the property for every `ε > 0`.
pub fn check_local_sum_stability(f: &MapHandle, g: &MapHandle, sp: &SumPoint, opts: &Opts) -> Result<Certificate, TheoremError> {
    validate(f, g, sp)?;
    let (Some(fg), Some(gg)) = (f.solid_graph(), g.solid_graph()) else {
        // Failing for one ε means failing for every smaller one.
        let c = check_sum_stability(f, g, sp, &Scalar::frac(1, 2), opts)?;
        return Ok(match c.verdict {
            Verdict::Holds => Certificate { verdict: Verdict::Inconclusive, ..c }.with_note("holds for ε = 1/2 only"),
            _ => c,
        });
    };
    let v = sum_violation::<Eps>(fg, gg, sp, &Eps::s(), &Eps::t(), false);
    if formula::solve(&v.formula).is_none() {
        return Ok(cert(Verdict::Holds, None, WindowSpec::Every, Evidence::Infinitesimal)
            .with_note("for every ε some δ works"));
    }
    for k in 1..=12 {
        let eps = Scalar::pow2(-k);
        let c = check_sum_stability(f, g, sp, &eps, opts)?;
        if c.fails() {
            return Ok(c);
        }
    }
    Ok(cert(Verdict::Fails, None, WindowSpec::Every, Evidence::Infinitesimal).with_note("fails for all small ε"))
}

/// Candidate sums near `c`: samples plus, in each dense cell, the member with
/// the rational part of `c`.
fn sum_candidates(set: &RSet, c: &Scalar, r: &Scalar) -> Vec<Scalar> {
    let near = set.intersect_cell(&Cell::ball(c, r));
    let mut out = Vec::new();
    for cell in near.cells() {
        if let Density::Dense(off) = &cell.density {
            out.push(Scalar::new(c.rat_part().clone(), off.clone()));
        }
    }
    out.extend(near.sample_members());
    out.retain(|w| near.contains(w));
    let mut seen = std::collections::BTreeSet::new();
    out.retain(|w| seen.insert(w.clone()));
    out
}

fn all_rational(s: &RSet) -> bool {
    s.points().iter().all(|p| p.is_rational())
        && s.cells().iter().all(|c| c.density == Density::rational() || c.is_degenerate() && c.some_member().is_rational())
}

/// A non-decomposable sum at `x`, if one of the candidates is.
#[allow(clippy::too_many_arguments)]
fn sum_witness(
    f: &MapHandle,
    g: &MapHandle,
    sp: &SumPoint,
    x: &Scalar,
    eps: &Scalar,
    delta: &Scalar,
    same_rational_part: bool,
    sum: &MapHandle,
) -> Option<Witness> {
    let wbar = sp.w();
    let (fx, gx) = (f.fiber(std::slice::from_ref(x)), g.fiber(std::slice::from_ref(x)));
    if !fx.exact || !gx.exact {
        return None;
    }
    let total = minkowski(&fx.set, &gx.set, true);
    let fy = fx.set.intersect_cell(&Cell::ball(&sp.y, eps));
    let gz = gx.set.intersect_cell(&Cell::ball(&sp.z, eps));
    let local = minkowski(&fy, &gz, true);
    let w = sum_candidates(&total, &wbar, delta)
        .into_iter()
        .filter(|w| !same_rational_part || w.rat_part() == wbar.rat_part())
        .find(|w| !local.contains(w))?;
    let mut note = String::new();
    if all_rational(&fy) && all_rational(&gz) && !w.is_rational() {
        note = format!(
            "F(x) ∩ B(ȳ, ε) and G(x) ∩ B(z̄, ε) hold only rationals, so y + z is rational; w = {w} is not (is_rational = false)"
        );
    }
    if let Some(n) = RatTailSeq::index_of(x).filter(|_| sum.describe_point(x).is_some()) {
        if w == Scalar::sqrt2().checked_div(&Scalar::int(n as i64)).expect("n > 0") {
            note = format!("x_n = 1 - 1/n, w_n = √2/n with n = {n}; {note}");
        }
    }
    Some(Witness {
        values: vec![("x".into(), x.clone()), ("w".into(), w)],
        rate: delta.clone(),
        window: window_for(delta, eps),
        note: Some(note).filter(|n| !n.is_empty()),
    })
}

/// Witness search for maps without a solid graph; every hit is verified with exact set arithmetic.
fn sampled_sum_stability(f: &MapHandle, g: &MapHandle, sp: &SumPoint, eps: &Scalar, opts: &Opts) -> Certificate {
    let ev = Evidence::Sampled { grid: opts.grid, seed: opts.seed };
    if sp.x.len() != 1 {
        return cert(Verdict::Inconclusive, None, WindowSpec::Concrete(window_for(eps, eps)), ev)
            .with_note("no sampler for parametric sums");
    }
    let Ok(sum) = MapHandle::sum_maps(f, g) else {
        return cert(Verdict::Inconclusive, None, WindowSpec::Concrete(window_for(eps, eps)), ev);
    };
    let s = Sampling { grid: opts.grid, seed: opts.seed };
    let mut found: Vec<Witness> = Vec::new();
    let deltas: Vec<Scalar> = (0..6).map(|k| eps * &Scalar::pow2(-k)).collect();
    for delta in &deltas {
        let mut xs: Vec<Scalar> = (0..3)
            .flat_map(|j| sampled::inputs(&sum, &sp.x[0], &(delta * &Scalar::pow2(-j)), s))
            .filter(|x| (x - &sp.x[0]).abs() < *delta)
            .collect();
        xs.sort();
        xs.dedup();
        // Sums sharing the rational part of ȳ + z̄ first, then any sample.
        let hit = [true, false].into_iter().find_map(|same| {
            xs.iter().find_map(|x| sum_witness(f, g, sp, x, eps, delta, same, &sum))
        });
        match hit {
            Some(w) => found.push(w),
            None => break,
        }
    }
    let window = WindowSpec::Concrete(window_for(eps, eps));
    if found.len() < deltas.len() {
        let c = cert(Verdict::Inconclusive, None, window, ev).with_note("no witness for some δ; nothing is proved");
        return match found.into_iter().next() {
            Some(w) => c.with_witness(w),
            None => c,
        };
    }
    let on_sequence = found.iter().all(|w| w.get("x").and_then(|x| sum.describe_point(x)).is_some());
    let last = found.pop().expect("nonempty");
    if on_sequence && last.note.is_some() {
        cert(
            Verdict::Fails,
            Some(RateSpec::Tiny),
            window,
            Evidence::Bespoke(
                "x_n = 1 - 1/n → x̄, and each w_n = √2/n ∈ (F + G)(x_n) is irrational while every admissible y + z is rational"
                    .into(),
            ),
        )
        .with_witness(last)
        .with_note(format!("no δ > 0 works for ε = {eps}"))
    } else {
        cert(Verdict::Inconclusive, None, window, ev)
            .with_witness(last)
            .with_note("witnesses for every probed δ, but no argument covers all δ")
    }
}

/// Re-verify a sum-stability witness with fiber and set arithmetic only.
pub fn replay_sum_stability(f: &MapHandle, g: &MapHandle, sp: &SumPoint, c: &Certificate) -> bool {
    let Some(wit) = c.witness.as_ref().filter(|_| c.fails()) else { return false };
    let xs: Option<Vec<Scalar>> = sp.input_names().iter().map(|n| wit.get(n).cloned()).collect();
    let (Some(x), Some(w)) = (xs, wit.get("w")) else { return false };
    let (delta, eps) = (&wit.rate, &wit.window.eps);
    let l1 = x.iter().zip(&sp.x).fold(Scalar::zero(), |acc, (a, b)| &acc + &(a - b).abs());
    if l1 >= *delta || (w - &sp.w()).abs() >= *delta {
        return false;
    }
    let (fx, gx) = (f.fiber(&x), g.fiber(&x[..1]));
    if !fx.exact || !gx.exact {
        return false;
    }
    let total = minkowski(&fx.set, &gx.set, true);
    let local = minkowski(
        &fx.set.intersect_cell(&Cell::ball(&sp.y, eps)),
        &gx.set.intersect_cell(&Cell::ball(&sp.z, eps)),
        true,
    );
    total.contains(w) && !local.contains(w)
}

fn lip_bracket(m: &MapHandle, pt: &Point, kind: Kind, w: &Window, opts: &Opts) -> Result<ModulusBracket, TheoremError> {
    Ok(estimate_modulus(m, pt, kind, w, opts)?)
}

fn above(q: &Scalar) -> RateSpec {
    if q.is_positive() {
        RateSpec::Above(q.clone())
    } else {
        RateSpec::Tiny
    }
}

/// `lip(F + G)(x̄, ȳ + z̄) ≤ lip F(x̄, ȳ) + lip G(x̄, z̄)` under local sum-stability.
pub fn verify_lip_sum(f: &MapHandle, g: &MapHandle, sp: &SumPoint, w: &Window, opts: &Opts) -> Result<TheoremReport, TheoremError> {
    validate(f, g, sp)?;
    if sp.x.len() != 1 {
        return Err(TheoremError::Precondition("lip-sum takes one-input maps".into()));
    }
    let x = sp.x[0].clone();
    let bf = lip_bracket(f, &Point::new(x.clone(), sp.y.clone()), Kind::Lip, w, opts)?;
    let bg = lip_bracket(g, &Point::new(x.clone(), sp.z.clone()), Kind::Lip, w, opts)?;
    let stable = check_local_sum_stability(f, g, sp, opts)?;
    let h = MapHandle::sum_maps(f, g)?;
    let hpt = Point::new(x.clone(), sp.w());
    let pred = match (certified_bound(&bf), certified_bound(&bg)) {
        (Some(a), Some(b)) => Some(&a + &b),
        _ => None,
    };
    let conclusion = match &pred {
        Some(p) => check(&h, &hpt, Property::LipschitzLike, None, &above(p), &WindowSpec::Every, opts)?
            .with_note(format!("lip(F + G) ≤ {p}")),
        None => inconclusive("lip F or lip G has no certified finite bound"),
    };
    let mut rep = TheoremReport::new("lip_sum", conclusion);
    rep.hypotheses.push(Hypothesis::bracket("lip F", bf));
    rep.hypotheses.push(Hypothesis::bracket("lip G", bg));
    rep.hypotheses.push(Hypothesis::cert("(F, G) locally sum-stable", stable.clone()));
    if stable.fails() && stable.witness.is_some() {
        rep.checks.push((
            "sum_stability_witness_replays".into(),
            Certificate::claim(replay_sum_stability(f, g, sp, &stable), "the sum-stability witness re-verifies"),
        ));
    }
    let bh = lip_bracket(&h, &hpt, Kind::Lip, w, opts)?;
    if let Some(p) = pred {
        rep.predicted.push(("lip_sum".into(), p.clone()));
        if rep.conclusion.fails() {
            rep.checks.push(("obstruction".into(), lip_obstruction(&h, &hpt)));
        } else {
            rep.checks.push(("bracket_within_prediction".into(), within(&bh, &p)));
        }
        rep.tightness = Some(Tightness { predicted: p, bracket: bh });
    }
    Ok(rep)
}

/// The family `x = x̄`, `u = x̄ - α²`, `y = ȳ - α` with `α = min{1, 1/L}/2`:
/// the value `y` would need `α ≤ Lα²`.
fn lip_obstruction(h: &MapHandle, pt: &Point) -> Certificate {
    let mut ok = true;
    let mut last = None;
    for l in [1i64, 10, 100] {
        let l = Scalar::int(l);
        let alpha = Scalar::min(&Scalar::one(), &l.recip().expect("L > 0")).half();
        let wit = Witness {
            values: vec![
                ("x".into(), pt.x[0].clone()),
                ("u".into(), &pt.x[0] - &(&alpha * &alpha)),
                ("y".into(), &pt.y - &alpha),
            ],
            rate: l.clone(),
            window: Window::uniform(&alpha * &Scalar::int(2)),
            note: Some(format!("α = {alpha}: the value ȳ - α needs α ≤ Lα², false for L = {l}")),
        };
        ok &= replay_witness(h, pt, Property::LipschitzLike, None, &wit);
        last = Some(wit);
    }
    let c = Certificate::claim(ok, "F + G is not Lipschitz-like: for L ∈ {1, 10, 100} the point ȳ - α of (F + G)(x̄) needs α ≤ Lα²");
    match last {
        Some(w) if ok => Certificate { property: Property::LipschitzLike, verdict: Verdict::Fails, ..c }.with_witness(w),
        _ => Certificate { verdict: Verdict::Inconclusive, ..c },
    }
}

fn check_parts(f: &MapHandle, g: &MapHandle, pt: &Point) -> Result<SumPoint, TheoremError> {
    if f.in_dim() != 2 || g.in_dim() != 1 || pt.x.len() != 2 {
        return Err(TheoremError::Precondition("F takes (x, p) and G takes x".into()));
    }
    let sp = SumPoint::param(pt.x[0].clone(), pt.x[1].clone(), pt.y.clone(), -&pt.y);
    validate(f, g, &sp)?;
    Ok(sp)
}

/// `S(p) = {x : 0 ∈ F(x, p) + G(x)}` at `(p̄, x̄)`, its bracket on the unit window and the bound check.
fn solution_map(f: &MapHandle, g: &MapHandle, pt: &Point) -> Result<(MapHandle, Point), TheoremError> {
    let h = MapHandle::sum_maps(f, g)?;
    let s = implicit_map(&h)?.map;
    Ok((s, Point::new(pt.x[1].clone(), pt.x[0].clone())))
}

/// `reg S(p̄, x̄) ≤ reĝ_p F·[lip̂_x F + lip G]` for `S` solving `0 ∈ F(x, p) + G(x)`.
pub fn verify_reg_solution_bound(
    f: &MapHandle,
    g: &MapHandle,
    pt: &Point,
    w: &Window,
    opts: &Opts,
) -> Result<TheoremReport, TheoremError> {
    let sp = check_parts(f, g, pt)?;
    let fg = f.solid_graph().ok_or_else(|| TheoremError::Precondition("F needs a solid graph".into()))?;
    let gpt = Point::new(pt.x[0].clone(), -&pt.y);
    let stable = check_local_sum_stability(f, g, &sp, opts)?;
    let xs = grid_around(&pt.x[0], &w.u_radius.half(), opts.grid.min(8));
    let bad = xs.iter().find(|x| {
        let sl = fg.slice(0, x);
        !isc_holds_exactly(&Problem::new(&sl, vec![pt.x[1].clone()], pt.y.clone(), None))
    });
    let isc = match bad {
        None => Certificate::new(
            Property::InnerSemicontinuous,
            Verdict::Holds,
            None,
            WindowSpec::Every,
            Evidence::Sampled { grid: xs.len(), seed: opts.seed },
        )
        .with_note(format!("F(x, ·) inner semicontinuous at (p̄, ȳ) for {} grid values of x, each exact", xs.len())),
        Some(x) => Certificate::new(Property::InnerSemicontinuous, Verdict::Fails, None, WindowSpec::Every, Evidence::Exact)
            .with_note(format!("F({x}, ·) is not inner semicontinuous at (p̄, ȳ)")),
    };
    let lip_x = estimate_modulus(f, pt, Kind::LipX, w, opts)?;
    let reg_p = estimate_modulus(f, pt, Kind::RegP, w, opts)?;
    let lip_g = estimate_modulus(g, &gpt, Kind::Lip, w, opts)?;
    let (a, b, c) = (certified_bound(&lip_x), certified_bound(&reg_p), certified_bound(&lip_g));
    let hyps = vec![
        Hypothesis::cert("(i) (F, G) locally sum-stable", stable),
        Hypothesis::cert("(ii) F(x, ·) inner semicontinuous", isc),
        Hypothesis::bracket("(iii) lip_x F", lip_x),
        Hypothesis::bracket("(iv) reg_p F", reg_p),
        Hypothesis::bracket("(v) lip G", lip_g),
    ];
    let Some(reg) = b else {
        return Err(TheoremError::Precondition("reg_p F needs a certified finite upper bound".into()));
    };
    let (Some(lx), Some(lg)) = (a, c) else {
        let mut rep = TheoremReport::new("reg_solution", inconclusive("lip_x F or lip G is not certified"));
        rep.hypotheses = hyps;
        return Ok(rep);
    };
    let pred = &reg * &(&lx + &lg);
    let (s, spt) = solution_map(f, g, pt)?;
    let conclusion = check(&s, &spt, Property::MetricRegular, None, &above(&pred), &WindowSpec::Every, opts)?
        .with_note(format!("reg S ≤ {pred}"));
    let mut rep = TheoremReport::new("reg_solution", conclusion);
    rep.hypotheses = hyps;
    rep.predicted.push(("reg_S".into(), pred.clone()));
    let bs = estimate_modulus(&s, &spt, Kind::Reg, &Window::uniform(Scalar::one()), opts)?;
    rep.checks.push(("bracket_within_prediction".into(), within(&bs, &pred)));
    rep.tightness = Some(Tightness { predicted: pred, bracket: bs });
    Ok(rep)
}

/// `lip S(p̄, x̄) ≤ reg G·lip̂_p F / (1 - lip̂_x F·reg G)` when the product is below 1.
pub fn verify_lip_solution_bound(
    f: &MapHandle,
    g: &MapHandle,
    pt: &Point,
    w: &Window,
    opts: &Opts,
) -> Result<TheoremReport, TheoremError> {
    let sp = check_parts(f, g, pt)?;
    let fg = f.solid_graph().ok_or_else(|| TheoremError::Precondition("F needs a solid graph".into()))?;
    let gpt = Point::new(pt.x[0].clone(), -&pt.y);

    let direct = check_local_sum_stability(f, g, &sp, opts)?;
    let mut notes = vec!["(i) is read through the parametric definition: F_p with p near p̄".to_string()];
    let stable = if f.is_single_valued() == Some(true) {
        let calm = check_calm(f, pt, &Scalar::int(1 << 10), w, opts)?;
        if calm.holds() {
            notes.push("F is single-valued and calm, so (F, G) is locally sum-stable".into());
            cert(Verdict::Holds, None, WindowSpec::Every, Evidence::Bespoke("a calm single-valued f makes (f, G) locally sum-stable".into()))
        } else {
            direct.clone()
        }
    } else {
        direct.clone()
    };
    let ps = grid_around(&pt.x[1], &w.p().half(), opts.grid.min(8));
    let slices_closed = ps.iter().all(|p| fg.slice(1, p).is_closed());
    let closed_f = Certificate::claim(slices_closed, format!("Gr F(·, p) closed for {} grid values of p", ps.len()))
        .with_note(format!("graphs of F(·, p) closed for {} grid values of p, each exact", ps.len()));
    let closed_f = if slices_closed {
        Certificate { evidence: Evidence::Sampled { grid: ps.len(), seed: opts.seed }, ..closed_f }
    } else {
        closed_f
    };
    let closed_g = locally_closed(g, &pt.x[0], &-&pt.y, &w.u_radius, &w.v_radius);
    let lip_f = estimate_modulus(f, pt, Kind::Lip, w, opts)?;
    let lip_x = estimate_modulus(f, pt, Kind::LipX, w, opts)?;
    let lip_p = estimate_modulus(f, pt, Kind::LipP, w, opts)?;
    let reg_g = estimate_modulus(g, &gpt, Kind::Reg, w, opts)?;
    let isc_g = match g.solid_graph() {
        Some(gg) => {
            let ok = isc_holds_exactly(&Problem::new(gg, vec![gpt.x[0].clone()], gpt.y.clone(), None));
            Certificate::new(Property::InnerSemicontinuous, if ok { Verdict::Holds } else { Verdict::Fails }, None, WindowSpec::Every, Evidence::Infinitesimal)
        }
        None => inconclusive("G has no solid graph"),
    };
    let (lx, lp, rg) = (certified_bound(&lip_x), certified_bound(&lip_p), certified_bound(&reg_g));
    let mut hyps = vec![
        Hypothesis::cert("(i) (F_p, G) locally sum-stable", stable),
        Hypothesis::cert("(ii) F(·, p) closed near p̄", closed_f),
        Hypothesis::cert("(iii) G closed near (x̄, -ȳ)", closed_g),
        Hypothesis::bracket("(iv) lip F", lip_f),
        Hypothesis::bracket("(iv) lip_x F", lip_x),
        Hypothesis::bracket("(iv) lip_p F", lip_p),
        Hypothesis::bracket("(v) reg G", reg_g),
        Hypothesis::cert("(vi) G inner semicontinuous", isc_g),
    ];
    let (Some(lx), Some(lp), Some(rg)) = (lx, lp, rg) else {
        let mut rep = TheoremReport::new("lip_solution", inconclusive("a modulus of F or G is not certified"));
        rep.hypotheses = hyps;
        rep.notes = notes;
        return Ok(rep);
    };
    let product = &lx * &rg;
    if product >= Scalar::one() {
        return Err(TheoremError::Precondition(format!("lip_x F · reg G < 1 fails: {lx} · {rg} = {product}")));
    }
    hyps.push(Hypothesis::cert("(vii) lip_x F · reg G < 1", Certificate::claim(true, format!("{lx} · {rg} = {product} < 1"))));
    let pred = (&rg * &lp).checked_div(&(Scalar::one() - product)).expect("product < 1");
    let (s, spt) = solution_map(f, g, pt)?;
    let conclusion = check(&s, &spt, Property::LipschitzLike, None, &above(&pred), &WindowSpec::Every, opts)?
        .with_note(format!("lip S ≤ {pred}"));
    let mut rep = TheoremReport::new("lip_solution", conclusion);
    rep.hypotheses = hyps;
    rep.notes = notes;
    rep.predicted.push(("lip_S".into(), pred.clone()));
    rep.checks.push(("sum_stability_direct".into(), direct));
    let bs = estimate_modulus(&s, &spt, Kind::Lip, &Window::uniform(Scalar::one()), opts)?;
    rep.checks.push(("bracket_within_prediction".into(), within(&bs, &pred)));
    rep.tightness = Some(Tightness { predicted: pred, bracket: bs });
    Ok(rep)
}
