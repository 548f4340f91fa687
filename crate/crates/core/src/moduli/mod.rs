//! Certified checkers for regularity properties and bracketing estimators
//! for their moduli.

pub mod builder;
pub mod estimate;
pub mod exact;
pub mod replay;
pub mod sampled;
pub mod types;

use thiserror::Error;

pub use estimate::{estimate_modulus, verify_link_around, verify_link_at, LinkReport};
pub use types::*;

use crate::exactnum::Scalar;
use crate::linear::OrderedRing;
use crate::mfn::{MapError, MapHandle};
use exact::Problem;
use sampled::Sampling;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CheckError {
    #[error("reference point ({0}) is not on the graph")]
    NotOnGraph(String),
    #[error("window radii must be positive")]
    BadWindow,
    #[error("rate must be positive")]
    BadRate,
    #[error("point has {got} input coordinates, map takes {want}")]
    Dimension { got: usize, want: usize },
    #[error(transparent)]
    Map(#[from] MapError),
}

/// A reference point `(x̄, ȳ)`; `x` has one entry per input.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Point {
    pub x: Vec<Scalar>,
    pub y: Scalar,
}

impl Point {
    pub fn new(x: Scalar, y: Scalar) -> Point {
        Point { x: vec![x], y }
    }

    pub fn param(x: Scalar, p: Scalar, y: Scalar) -> Point {
        Point { x: vec![x, p], y }
    }

    /// The point `(ȳ, x̄)` on the inverse graph.
    pub fn swapped(&self) -> Point {
        assert_eq!(self.x.len(), 1);
        Point { x: vec![self.y.clone()], y: self.x[0].clone() }
    }

    pub fn describe(&self) -> String {
        let xs: Vec<String> = self.x.iter().map(|v| v.to_string()).collect();
        format!("{}; {}", xs.join(", "), self.y)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Opts {
    pub budget: usize,
    pub grid: usize,
    pub seed: u64,
}

impl Default for Opts {
    fn default() -> Self {
        Opts { budget: 40, grid: 16, seed: 0 }
    }
}

impl Opts {
    fn sampling(&self) -> Sampling {
        Sampling { grid: self.grid, seed: self.seed }
    }

    fn sampled(&self) -> Evidence {
        Evidence::Sampled { grid: self.grid, seed: self.seed }
    }
}

fn needs_graph_point(p: Property) -> bool {
    !matches!(p, Property::MetricRegular | Property::FullLipschitz)
}

fn validate(map: &MapHandle, pt: &Point, property: Property) -> Result<(), CheckError> {
    if pt.x.len() != map.in_dim() {
        return Err(CheckError::Dimension { got: pt.x.len(), want: map.in_dim() });
    }
    if needs_graph_point(property) && !map.fiber(&pt.x).set.contains(&pt.y) {
        return Err(CheckError::NotOnGraph(pt.describe()));
    }
    Ok(())
}

/// Rates to try, in order, when turning an infinitesimal failure into a concrete one.
fn concrete_rates(rate: &RateSpec, sup_type: bool) -> Vec<Scalar> {
    let dy = |k: i32| Scalar::pow2(-k);
    match rate {
        RateSpec::Value(q) => vec![q.clone()],
        RateSpec::Above(q) if sup_type => (1..=30).map(|k| q + &dy(k)).collect(),
        RateSpec::Above(q) => vec![q.clone()],
        RateSpec::Below(q) if sup_type => vec![q.clone()],
        RateSpec::Below(q) => (1..=30).map(|k| q * &(Scalar::one() - dy(k))).collect(),
        RateSpec::Tiny if sup_type => vec![Scalar::one()],
        RateSpec::Tiny => (20..=30).map(dy).collect(),
        RateSpec::Huge if sup_type => (1..=30).map(|k| dy(-k)).collect(),
        RateSpec::Huge => vec![Scalar::one()],
    }
}

/// A concrete witness for an infinitesimal failure, if a nearby standard rate also fails.
fn concretize(pb: &Problem, property: Property, rate: &RateSpec, w: &Window) -> Option<Witness> {
    for q in concrete_rates(rate, property.sup_type()) {
        if let Some(values) = exact::find_violation(pb, property, &q, w) {
            return Some(Witness { values, rate: q, window: w.clone(), note: None });
        }
    }
    None
}

/// Check `property` at `rate` on `window`, moving all inputs or only `moving`.
///
/// Failures on every window get their witness on the default window.
pub fn check(
    map: &MapHandle,
    pt: &Point,
    property: Property,
    moving: Option<usize>,
    rate: &RateSpec,
    window: &WindowSpec,
    opts: &Opts,
) -> Result<Certificate, CheckError> {
    validate(map, pt, property)?;
    if let RateSpec::Value(q) = rate {
        if !q.is_positive() {
            return Err(CheckError::BadRate);
        }
    }
    if let WindowSpec::Concrete(w) = window {
        if !w.is_valid() {
            return Err(CheckError::BadWindow);
        }
    }
    let witness_window = match window {
        WindowSpec::Concrete(w) => w.clone(),
        WindowSpec::Every => Window::default(),
    };
    if let Some(g) = map.solid_graph() {
        let pb = Problem::new(g, pt.x.clone(), pt.y.clone(), moving);
        if let (RateSpec::Value(q), WindowSpec::Concrete(w)) = (rate, window) {
            let cert = Certificate::new(property, Verdict::Holds, Some(rate.clone()), window.clone(), Evidence::Exact);
            return Ok(match exact::find_violation(&pb, property, q, w) {
                None => cert,
                Some(values) => Certificate { verdict: Verdict::Fails, ..cert }.with_witness(Witness {
                    values,
                    rate: q.clone(),
                    window: w.clone(),
                    note: None,
                }),
            });
        }
        let violated = exact::violated_eps(&pb, property, rate, window);
        let cert = Certificate::new(
            property,
            if violated { Verdict::Fails } else { Verdict::Holds },
            Some(rate.clone()),
            window.clone(),
            Evidence::Infinitesimal,
        );
        if violated {
            if let Some(w) = concretize(&pb, property, rate, &witness_window) {
                return Ok(cert.with_witness(w));
            }
        }
        return Ok(cert);
    }
    Ok(check_sampled(map, pt, property, rate, window, opts))
}

fn check_sampled(
    map: &MapHandle,
    pt: &Point,
    property: Property,
    rate: &RateSpec,
    window: &WindowSpec,
    opts: &Opts,
) -> Certificate {
    let inconclusive =
        || Certificate::new(property, Verdict::Inconclusive, Some(rate.clone()), window.clone(), opts.sampled());
    if map.in_dim() != 1 {
        return inconclusive().with_note("no exact graph and no sampler for several inputs");
    }
    if let Some(c) = lipschitz_shortcut(map, pt, property, window) {
        return Certificate { rate: Some(rate.clone()), ..c };
    }
    let (RateSpec::Value(l), WindowSpec::Concrete(w)) = (rate, window) else {
        return inconclusive().with_note("sampling needs a concrete rate and window");
    };
    match sampled::search(map, &pt.x[0], &pt.y, property, l, w, opts.sampling()) {
        Some(values) => {
            let note = values.iter().find_map(|(_, v)| map.describe_point(v));
            Certificate::new(property, Verdict::Fails, Some(rate.clone()), window.clone(), opts.sampled()).with_witness(
                Witness { values, rate: l.clone(), window: w.clone(), note },
            )
        }
        None => inconclusive(),
    }
}

/// Exact Lipschitz arguments that do not need a solid graph.
fn lipschitz_shortcut(map: &MapHandle, pt: &Point, property: Property, window: &WindowSpec) -> Option<Certificate> {
    if !matches!(property, Property::LipschitzLike | Property::FullLipschitz) {
        return None;
    }
    let holds = |why: String| {
        Some(Certificate::new(property, Verdict::Holds, Some(RateSpec::Tiny), window.clone(), Evidence::Bespoke(why)))
    };
    if sampled::input_independent(map) {
        return holds("no graph piece depends on x, so F(x) = F(u) for all x, u".into());
    }
    let (Some(b), WindowSpec::Concrete(w)) = (map.bespoke(), window) else { return None };
    match b.full_lipschitz(&pt.x[0], &w.u_radius) {
        Some((true, why)) => holds(why),
        _ => None,
    }
}

/// `check` for the around-point properties with all inputs moving.
pub fn check_around(
    map: &MapHandle,
    pt: &Point,
    property: Property,
    l: &Scalar,
    w: &Window,
    opts: &Opts,
) -> Result<Certificate, CheckError> {
    check(map, pt, property, None, &RateSpec::Value(l.clone()), &WindowSpec::Concrete(w.clone()), opts)
}

/// `check` for open_at, pseudocalm and hemiregular.
pub fn check_at(
    map: &MapHandle,
    pt: &Point,
    property: Property,
    l: &Scalar,
    w: &Window,
    opts: &Opts,
) -> Result<Certificate, CheckError> {
    check_around(map, pt, property, l, w, opts)
}

/// Parametric check: `variable` 0 moves `x`, 1 moves `p`, uniformly in the other.
pub fn check_partial(
    map: &MapHandle,
    pt: &Point,
    variable: usize,
    property: Property,
    l: &Scalar,
    w: &Window,
    opts: &Opts,
) -> Result<Certificate, CheckError> {
    check(map, pt, property, Some(variable), &RateSpec::Value(l.clone()), &WindowSpec::Concrete(w.clone()), opts)
}

pub fn check_full_lipschitz(
    map: &MapHandle,
    pt: &Point,
    l: &Scalar,
    w: &Window,
    opts: &Opts,
) -> Result<Certificate, CheckError> {
    check_around(map, pt, Property::FullLipschitz, l, w, opts)
}

/// Calmness of a single-valued map at `x̄` with constant `l`.
pub fn check_calm(map: &MapHandle, pt: &Point, l: &Scalar, w: &Window, opts: &Opts) -> Result<Certificate, CheckError> {
    if map.is_single_valued() == Some(false) {
        return Err(MapError::NotSingleValued(map.label()).into());
    }
    check_around(map, pt, Property::Calm, l, w, opts)
}

/// Inner semicontinuity at `pt` for the radius `eps`.
///
/// With `delta` the check is for that pair; without it, whether some `δ > 0`
/// works (decided exactly on solid graphs).
pub fn check_isc(
    map: &MapHandle,
    pt: &Point,
    eps: &Scalar,
    delta: Option<&Scalar>,
    opts: &Opts,
) -> Result<Certificate, CheckError> {
    validate(map, pt, Property::InnerSemicontinuous)?;
    if !eps.is_positive() || delta.map(|d| !d.is_positive()).unwrap_or(false) {
        return Err(CheckError::BadWindow);
    }
    let win_for = |d: &Scalar| Window { u_radius: d.clone(), v_radius: eps.clone(), eps: eps.clone(), p_radius: None };
    let prop = Property::InnerSemicontinuous;
    let fail = |values, d: &Scalar, ev: Evidence| {
        Certificate::new(prop, Verdict::Fails, Some(RateSpec::Value(d.clone())), WindowSpec::Concrete(win_for(d)), ev)
            .with_witness(Witness { values, rate: d.clone(), window: win_for(d), note: None })
    };
    if let Some(g) = map.solid_graph() {
        let pb = Problem::new(g, pt.x.clone(), pt.y.clone(), None);
        if let Some(d) = delta {
            return Ok(match exact::isc_violation(&pb, d, eps) {
                Some(v) => fail(v, d, Evidence::Exact).with_note(format!("some x within {d} has no value within {eps}")),
                None => Certificate::new(prop, Verdict::Holds, Some(RateSpec::Value(d.clone())), WindowSpec::Concrete(win_for(d)), Evidence::Exact),
            });
        }
        // δ = t infinitely small: a violation there is a violation for every δ.
        let win = exact::WinR { u: crate::linear::Eps::constant(eps), v: None, eps: crate::linear::Eps::constant(eps), p: crate::linear::Eps::constant(eps) };
        let rate = builder::Rate { num: crate::linear::Eps::t(), den: crate::linear::Eps::one() };
        let v = exact::violation(&pb, prop, &rate, &win);
        let bad = crate::linear::formula::solve(&v.formula).is_some();
        if !bad {
            // Find a concrete δ.
            for k in 0..=40 {
                let d = eps * &Scalar::pow2(-k);
                if exact::isc_violation(&pb, &d, eps).is_none() {
                    return Ok(Certificate::new(prop, Verdict::Holds, Some(RateSpec::Value(d.clone())), WindowSpec::Concrete(win_for(&d)), Evidence::Exact));
                }
            }
            return Ok(Certificate::new(prop, Verdict::Holds, Some(RateSpec::Tiny), WindowSpec::Concrete(win_for(eps)), Evidence::Infinitesimal)
                .with_note("some δ > 0 works, smaller than ε·2^-40"));
        }
        for k in 0..=20 {
            let d = eps * &Scalar::pow2(-k);
            if let Some(v) = exact::isc_violation(&pb, &d, eps) {
                return Ok(Certificate { rate: Some(RateSpec::Tiny), ..fail(v, &d, Evidence::Infinitesimal) }
                    .with_note("every δ > 0 admits such an x"));
            }
        }
        return Ok(Certificate::new(prop, Verdict::Fails, Some(RateSpec::Tiny), WindowSpec::Concrete(win_for(eps)), Evidence::Infinitesimal));
    }
    if map.in_dim() != 1 {
        return Ok(Certificate::new(prop, Verdict::Inconclusive, None, WindowSpec::Concrete(win_for(eps)), opts.sampled()));
    }
    let deltas: Vec<Scalar> = match delta {
        Some(d) => vec![d.clone()],
        None => (0..=10).map(|k| eps * &Scalar::pow2(-k)).collect(),
    };
    let mut last = None;
    for d in &deltas {
        match sampled::isc_search(map, &pt.x[0], &pt.y, d, eps, opts.sampling()) {
            Some(v) if delta.is_some() => return Ok(fail(v, d, opts.sampled())),
            Some(v) => last = Some((v, d.clone())),
            None => {
                return Ok(Certificate::new(prop, Verdict::Inconclusive, Some(RateSpec::Value(d.clone())), WindowSpec::Concrete(win_for(d)), opts.sampled())
                    .with_note("no sampled x violates this δ"))
            }
        }
    }
    let (v, d) = last.expect("nonempty");
    Ok(Certificate::new(prop, Verdict::Inconclusive, Some(RateSpec::Value(d.clone())), WindowSpec::Concrete(win_for(&d)), opts.sampled())
        .with_witness(Witness { values: v, rate: d, window: win_for(eps), note: None })
        .with_note("every sampled δ fails"))
}
