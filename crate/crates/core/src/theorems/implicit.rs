//! Implicit multifunctions `S(p) = {x : 0 ∈ H(x, p)}` and `Γ(y, w)`.

use super::{certified_bound, inconclusive, Hypothesis, TheoremError, TheoremReport, Tightness};
use crate::exactnum::{ExtScalar, Scalar};
use crate::mfn::graph::GraphMap;
use crate::mfn::{gamma_map, implicit_map, MapHandle};
use crate::moduli::exact::{isc_holds_exactly, Problem};
use crate::moduli::{
    check, check_full_lipschitz, check_partial, estimate_modulus, Certificate, Evidence, Kind, Opts, Point, Property,
    RateSpec, Verdict, Window, WindowSpec, Witness,
};
use crate::rset::{dilate, distance, Cell, RSet};

/// Which variable `H` is open in.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ImplicitMode {
    /// Open in `x` uniformly in `p`: bounds `lip S`.
    XOpen,
    /// Open in `p` uniformly in `x`: bounds `reg S`.
    POpen,
}

/// `c - r, …, c + r` in `2g + 1` steps.
pub(crate) fn grid_around(c: &Scalar, r: &Scalar, g: usize) -> Vec<Scalar> {
    let g = g.max(1) as i64;
    (-g..=g).map(|k| c + &(r * &Scalar::frac(k, g))).collect()
}

fn ext_le(a: &ExtScalar, b: &ExtScalar) -> bool {
    a <= b
}

/// First grid pair breaking `c·d(·, S) ≤ d(0, H(x, p))`, if any.
fn inequality_violation(
    h: &GraphMap,
    mode: ImplicitMode,
    c: &Scalar,
    x0: &Scalar,
    p0: &Scalar,
    r: &Scalar,
    t: &Scalar,
    grid: usize,
) -> Option<(Scalar, Scalar)> {
    for x in grid_around(x0, r, grid) {
        for p in grid_around(p0, t, grid) {
            let rhs = distance(&Scalar::zero(), &h.fiber(&[x.clone(), p.clone()]));
            let lhs = match mode {
                ImplicitMode::XOpen => distance(&x, &h.section(&[None, Some(p.clone()), Some(Scalar::zero())])),
                ImplicitMode::POpen => distance(&p, &h.section(&[Some(x.clone()), None, Some(Scalar::zero())])),
            };
            let lhs = lhs.mul_scalar(c).expect("c > 0");
            if !ext_le(&lhs, &rhs) {
                return Some((x, p));
            }
        }
    }
    None
}

/// Bounds on `lip S` (x-open) or `reg S` (p-open) from partial openness of `H`
/// at rate `c`, with the pointwise distance inequality checked on a grid.
pub fn verify_implicit_inequalities(
    h: &MapHandle,
    pt: &Point,
    mode: ImplicitMode,
    c: &Scalar,
    w: &Window,
    grid: usize,
    opts: &Opts,
) -> Result<TheoremReport, TheoremError> {
    if !c.is_positive() {
        return Err(TheoremError::Precondition(format!("c must be positive, got {c}")));
    }
    if h.in_dim() != 2 || pt.x.len() != 2 {
        return Err(TheoremError::Precondition("H must take (x, p)".into()));
    }
    if !pt.y.is_zero() || !h.fiber(&pt.x).set.contains(&Scalar::zero()) {
        return Err(TheoremError::Precondition(format!("0 ∈ H({}, {}) fails", pt.x[0], pt.x[1])));
    }
    let graph = h
        .solid_graph()
        .ok_or_else(|| TheoremError::Precondition("H needs a solid graph".into()))?;
    let (x0, p0) = (pt.x[0].clone(), pt.x[1].clone());
    let s = implicit_map(h)?.map;
    let spt = Point::new(p0.clone(), x0.clone());
    let c_inv = c.recip().expect("c > 0");

    let pb = Problem::new(graph, pt.x.clone(), pt.y.clone(), None);
    let isc = Certificate::new(
        Property::InnerSemicontinuous,
        if isc_holds_exactly(&pb) { Verdict::Holds } else { Verdict::Fails },
        None,
        WindowSpec::Every,
        Evidence::Infinitesimal,
    )
    .with_note("for every ε some δ works");
    let (var, other_kind, s_kind, s_prop, name) = match mode {
        ImplicitMode::XOpen => (0, Kind::LipP, Kind::Lip, Property::LipschitzLike, "lip S"),
        ImplicitMode::POpen => (1, Kind::LipX, Kind::Reg, Property::MetricRegular, "reg S"),
    };
    let open = check_partial(h, pt, var, Property::Open, c, w, opts)?;
    let other = estimate_modulus(h, pt, other_kind, w, opts)?;
    let bound = certified_bound(&other);

    let mut hyps = vec![
        Hypothesis::cert("H inner semicontinuous", isc),
        Hypothesis::cert(format!("H open in {} at rate c", ["x", "p"][var]), open),
        Hypothesis::bracket(format!("{other_kind} H"), other),
    ];
    let Some(lip_other) = bound else {
        let mut rep = TheoremReport::new("implicit", inconclusive(format!("{other_kind} H has no certified finite bound")));
        rep.hypotheses.append(&mut hyps);
        return Ok(rep);
    };
    let pred = &c_inv * &lip_other;
    let rate = if pred.is_positive() { RateSpec::Above(pred.clone()) } else { RateSpec::Tiny };
    let conclusion = check(&s, &spt, s_prop, None, &rate, &WindowSpec::Every, opts)?
        .with_note(format!("{name} ≤ {pred}"));
    let mut rep = TheoremReport::new("implicit", conclusion);
    rep.hypotheses = hyps;
    rep.predicted.push((name.replace(' ', "_"), pred.clone()));

    // Pointwise inequality; the radii are halved until the grid passes.
    let mut r = w.u_radius.clone();
    let mut t = w.p();
    let mut last = None;
    let mut ok = None;
    for _ in 0..6 {
        match inequality_violation(graph, mode, c, &x0, &p0, &r, &t, grid) {
            None => {
                ok = Some((r.clone(), t.clone()));
                break;
            }
            Some(v) => last = Some(v),
        }
        r = r.half();
        t = t.half();
    }
    let ineq_name = match mode {
        ImplicitMode::XOpen => "c·d(x, S(p)) ≤ d(0, H(x, p))",
        ImplicitMode::POpen => "c·d(p, S⁻¹(x)) ≤ d(0, H(x, p))",
    };
    let pointwise = match ok {
        Some((r, t)) => {
            rep.predicted.push(("r_bar".into(), r.clone()));
            rep.predicted.push(("t_bar".into(), t.clone()));
            Certificate::new(Property::Claim, Verdict::Holds, None, WindowSpec::Every, Evidence::Sampled { grid, seed: opts.seed })
                .with_note(format!("{ineq_name} on a {0}×{0} grid of B({x0}, {r}) × B({p0}, {t}), exact arithmetic", 2 * grid + 1))
        }
        None => {
            let (x, p) = last.expect("failed");
            Certificate::claim(false, format!("{ineq_name} fails")).with_witness(Witness {
                values: vec![("x".into(), x), ("p".into(), p)],
                rate: c.clone(),
                window: w.clone(),
                note: None,
            })
        }
    };
    rep.checks.push(("pointwise".into(), pointwise));

    let b = estimate_modulus(&s, &spt, s_kind, &Window::uniform(Scalar::one()), opts)?;
    rep.checks.push(("bracket_within_prediction".into(), within(&b, &pred)));
    rep.tightness = Some(Tightness { predicted: pred, bracket: b });
    Ok(rep)
}

/// Whether the certified upper end of a bracket respects `pred`; a wider
/// bracket is per window and only inconclusive.
pub(crate) fn within(b: &crate::moduli::ModulusBracket, pred: &Scalar) -> Certificate {
    let what = format!("independent {b} against the bound {pred}");
    match certified_bound(b) {
        Some(hi) if hi <= *pred => Certificate::claim(true, what),
        _ => inconclusive(what),
    }
}

/// An instance for `Γ(y, w) = {x : 0 ∈ F(x, y) + g(w)}`.
#[derive(Clone, Debug)]
pub struct GammaData {
    pub f: MapHandle,
    pub g: MapHandle,
    pub x: Scalar,
    pub y: Scalar,
    pub w: Scalar,
    pub eta: Scalar,
    pub k: Scalar,
    pub lambda: Scalar,
    pub alpha: Scalar,
    pub grid: usize,
}

/// The Aubin property of `Γ` with `lip Γ ≤ k·max{η, λ}` and the inclusion
/// `Γ(y', w') ∩ D(x̄, α) ⊂ Γ(y, w) + (k + ε)(η|y - y'| + λ|w - w'|)𝔻`.
pub fn verify_gamma_aubin(d: &GammaData, opts: &Opts) -> Result<TheoremReport, TheoremError> {
    for (n, v) in [("k", &d.k), ("alpha", &d.alpha)] {
        if !v.is_positive() {
            return Err(TheoremError::Precondition(format!("{n} must be positive")));
        }
    }
    if d.eta.is_negative() || d.lambda.is_negative() {
        return Err(TheoremError::Precondition("η and λ must be nonnegative".into()));
    }
    let gw = super::single_value(&d.g, std::slice::from_ref(&d.w))
        .ok_or_else(|| TheoremError::Precondition(format!("{} is not single-valued at w̄", d.g.label())))?;
    let z = -&gw;
    let fpt = Point::param(d.x.clone(), d.y.clone(), z.clone());
    if !d.f.fiber(&fpt.x).set.contains(&z) {
        return Err(TheoremError::Precondition("-g(w̄) ∈ F(x̄, ȳ) fails".into()));
    }
    let fg = d
        .f
        .solid_graph()
        .ok_or_else(|| TheoremError::Precondition("F needs a solid graph".into()))?;
    let gamma = gamma_map(&d.f, &d.g)?.map;
    let win = Window::uniform(d.alpha.clone());

    let mut hyps = vec![
        Hypothesis::cert("(i) F Lipschitz-like in y with constant η", lip_or_tiny(&d.f, &fpt, 1, &d.eta, &win, opts)?),
        Hypothesis::cert(
            "(ii) F metrically regular in x with constant k",
            check_partial(&d.f, &fpt, 0, Property::MetricRegular, &d.k, &win, opts)?,
        ),
    ];
    let ys = grid_around(&d.y, &d.alpha.half(), d.grid);
    let bad_y = ys.iter().find(|y| {
        let sl = fg.slice(1, y);
        !isc_holds_exactly(&Problem::new(&sl, vec![d.x.clone()], z.clone(), None))
    });
    let isc = match bad_y {
        None => Certificate::new(
            Property::InnerSemicontinuous,
            Verdict::Holds,
            None,
            WindowSpec::Every,
            Evidence::Sampled { grid: ys.len(), seed: opts.seed },
        )
        .with_note(format!("F(·, y) inner semicontinuous at (x̄, z̄) for {} grid values of y, each exact", ys.len())),
        Some(y) => Certificate::new(Property::InnerSemicontinuous, Verdict::Fails, None, WindowSpec::Every, Evidence::Exact)
            .with_note(format!("F(·, {y}) is not inner semicontinuous at (x̄, z̄)")),
    };
    hyps.push(Hypothesis::cert("(iii) F(·, y) inner semicontinuous near ȳ", isc));
    let gpt = Point::new(d.w.clone(), gw.clone());
    let lip_g = if d.lambda.is_positive() {
        check_full_lipschitz(&d.g, &gpt, &d.lambda, &win, opts)?
    } else {
        check(&d.g, &gpt, Property::FullLipschitz, None, &RateSpec::Tiny, &WindowSpec::Concrete(win.clone()), opts)?
    };
    hyps.push(Hypothesis::cert("(iv) g Lipschitz with constant λ", lip_g));

    let pred = &d.k * &Scalar::max(&d.eta, &d.lambda);
    let gpt_s = Point { x: vec![d.y.clone(), d.w.clone()], y: d.x.clone() };
    let rate = if pred.is_positive() { RateSpec::Above(pred.clone()) } else { RateSpec::Tiny };
    let conclusion = check(&gamma, &gpt_s, Property::LipschitzLike, None, &rate, &WindowSpec::Every, opts)?
        .with_note(format!("lip Γ ≤ k·max{{η, λ}} = {pred} (sum norm on (y, w))"));
    let mut rep = TheoremReport::new("gamma_aubin", conclusion);
    rep.hypotheses = hyps;
    rep.predicted.push(("lip_gamma".into(), pred.clone()));

    for e in [Scalar::one(), Scalar::frac(1, 2), Scalar::frac(1, 4)] {
        rep.checks.push((format!("inclusion_eps_{e}"), inclusion(d, &gamma, &e)));
    }
    let b = estimate_modulus(&gamma, &gpt_s, Kind::Lip, &win, opts)?;
    rep.checks.push(("bracket_within_prediction".into(), within(&b, &pred)));
    rep.tightness = Some(Tightness { predicted: pred, bracket: b });
    Ok(rep)
}

fn lip_or_tiny(f: &MapHandle, pt: &Point, var: usize, l: &Scalar, w: &Window, opts: &Opts) -> Result<Certificate, TheoremError> {
    let rate = if l.is_positive() { RateSpec::Value(l.clone()) } else { RateSpec::Tiny };
    Ok(check(f, pt, Property::LipschitzLike, Some(var), &rate, &WindowSpec::Concrete(w.clone()), opts)?)
}

/// The displayed inclusion on grid pairs of `D(ȳ, α) × D(w̄, α)`.
fn inclusion(d: &GammaData, gamma: &MapHandle, e: &Scalar) -> Certificate {
    let ys = grid_around(&d.y, &d.alpha, d.grid.min(4));
    let ws = grid_around(&d.w, &d.alpha, d.grid.min(4));
    let ball = Cell::closed_ball(&d.x, &d.alpha);
    let k = &d.k + e;
    let mut pairs = 0usize;
    for y in &ys {
        for w in &ws {
            let target = gamma.fiber(&[y.clone(), w.clone()]).set;
            for y2 in &ys {
                for w2 in &ws {
                    pairs += 1;
                    let lhs: RSet = gamma.fiber(&[y2.clone(), w2.clone()]).set.intersect_cell(&ball);
                    let r = &k * &(&(&d.eta * &(y - y2).abs()) + &(&d.lambda * &(w - w2).abs()));
                    let rhs = dilate(&target, &r).expect("nonnegative radius");
                    if !lhs.is_subset(&rhs) {
                        return Certificate::claim(false, format!("inclusion fails for ε = {e}")).with_witness(Witness {
                            values: vec![
                                ("y".into(), y.clone()),
                                ("w".into(), w.clone()),
                                ("y2".into(), y2.clone()),
                                ("w2".into(), w2.clone()),
                            ],
                            rate: k.clone(),
                            window: Window::uniform(d.alpha.clone()),
                            note: None,
                        });
                    }
                }
            }
        }
    }
    Certificate::new(Property::Claim, Verdict::Holds, None, WindowSpec::Every, Evidence::Sampled { grid: pairs, seed: 0 })
        .with_note(format!("inclusion with ε = {e} on {pairs} grid pairs, exact set arithmetic"))
}
