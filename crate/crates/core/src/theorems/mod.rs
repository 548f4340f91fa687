//! Theorem-level verifiers.
//!
//! Each verifier certifies the hypotheses of a result on a concrete instance,
//! evaluates the predicted constants exactly and then checks the conclusion
//! independently. Conclusions are only asserted when every precondition that
//! can be decided exactly holds.

pub mod implicit;
pub mod openness;
pub mod sums;

use serde_json::{json, Map, Value};
use thiserror::Error;

pub use implicit::{verify_gamma_aubin, verify_implicit_inequalities, GammaData, ImplicitMode};
pub use openness::{
    diagonal_lop, verify_difference_openness, verify_graves_corollary, verify_multi_difference_openness,
    verify_partial_openness_bound, DiffRadii,
};
pub use sums::{
    check_local_sum_stability, check_sum_stability, replay_sum_stability, verify_lip_solution_bound, verify_lip_sum,
    verify_reg_solution_bound, SumPoint,
};

use crate::exactnum::{ExtScalar, Scalar};
use crate::linear::fm::{Constraint, Rel};
use crate::mfn::graph::lin;
use crate::mfn::{MapError, MapHandle};
use crate::moduli::{
    check, shown, Certificate, CheckError, ModulusBracket, Opts, Point, Property, RateSpec, Verdict, Window, WindowSpec,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TheoremError {
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error(transparent)]
    Check(#[from] CheckError),
    #[error(transparent)]
    Map(#[from] MapError),
}

/// What backs a named hypothesis.
#[derive(Clone, Debug, PartialEq)]
pub enum Backing {
    Certificate(Certificate),
    Bracket(ModulusBracket),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Hypothesis {
    pub name: String,
    pub backing: Backing,
}

impl Hypothesis {
    pub fn cert(name: impl Into<String>, c: Certificate) -> Hypothesis {
        Hypothesis { name: name.into(), backing: Backing::Certificate(c) }
    }

    pub fn bracket(name: impl Into<String>, b: ModulusBracket) -> Hypothesis {
        Hypothesis { name: name.into(), backing: Backing::Bracket(b) }
    }

    /// A bracket backs its constant when its upper end (lower for openness) is certified.
    pub fn verdict(&self) -> Verdict {
        match &self.backing {
            Backing::Certificate(c) => c.verdict,
            Backing::Bracket(b) => bracket_verdict(b),
        }
    }

    fn to_json(&self) -> Value {
        let mut v = json!({"name": self.name, "verdict": self.verdict().to_string()});
        match &self.backing {
            Backing::Certificate(c) => v["certificate"] = c.to_json(),
            Backing::Bracket(b) => v["bracket"] = b.to_json(),
        }
        v
    }
}

fn bracket_verdict(b: &ModulusBracket) -> Verdict {
    // Brackets are per window, so a bad end never refutes the property itself.
    let certified = if b.kind.sup_type() {
        b.holds.is_some() && b.lo > ExtScalar::Finite(Scalar::zero())
    } else {
        b.holds.is_some() && b.hi.is_finite()
    };
    if certified {
        Verdict::Holds
    } else {
        Verdict::Inconclusive
    }
}

/// Predicted constant against an independent bracket.
#[derive(Clone, Debug, PartialEq)]
pub struct Tightness {
    pub predicted: Scalar,
    pub bracket: ModulusBracket,
}

impl Tightness {
    /// Whether the bracket collapses onto the prediction.
    pub fn tight(&self) -> bool {
        self.bracket.lo == ExtScalar::Finite(self.predicted.clone()) && self.bracket.hi == self.bracket.lo
    }

    fn note(&self) -> String {
        if self.tight() {
            format!("tight: independent {} equals the prediction {}", self.bracket, self.predicted)
        } else {
            format!("prediction {}, independent {}", self.predicted, self.bracket)
        }
    }

    fn to_json(&self) -> Value {
        json!({
            "predicted": shown(&self.predicted),
            "independent_bracket": self.bracket.to_json(),
            "tight": self.tight(),
            "note": self.note(),
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TheoremReport {
    pub theorem: String,
    pub hypotheses: Vec<Hypothesis>,
    pub predicted: Vec<(String, Scalar)>,
    pub conclusion: Certificate,
    /// Further checks of the conclusion (grids, clauses, witnesses).
    pub checks: Vec<(String, Certificate)>,
    pub tightness: Option<Tightness>,
    pub notes: Vec<String>,
}

impl TheoremReport {
    pub fn new(theorem: &str, conclusion: Certificate) -> TheoremReport {
        TheoremReport {
            theorem: theorem.to_string(),
            hypotheses: vec![],
            predicted: vec![],
            conclusion,
            checks: vec![],
            tightness: None,
            notes: vec![],
        }
    }

    pub fn hypotheses_hold(&self) -> bool {
        self.hypotheses.iter().all(|h| h.verdict() == Verdict::Holds)
    }

    /// The soundness invariant: certified hypotheses never come with a refuted conclusion.
    pub fn sound(&self) -> bool {
        !(self.hypotheses_hold()
            && (self.conclusion.fails() || self.checks.iter().any(|(_, c)| c.fails() && c.evidence.is_proof())))
    }

    pub fn predicted(&self, name: &str) -> Option<&Scalar> {
        self.predicted.iter().find(|(n, _)| n == name).map(|(_, v)| v)
    }

    pub fn hypothesis(&self, name: &str) -> Option<&Hypothesis> {
        self.hypotheses.iter().find(|h| h.name == name)
    }

    pub fn check(&self, name: &str) -> Option<&Certificate> {
        self.checks.iter().find(|(n, _)| n == name).map(|(_, c)| c)
    }

    /// Overall verdict: the conclusion's, downgraded when a hypothesis is not certified.
    pub fn verdict(&self) -> Verdict {
        match self.conclusion.verdict {
            Verdict::Holds if !self.hypotheses_hold() => Verdict::Inconclusive,
            v => v,
        }
    }

    pub fn to_json(&self) -> Value {
        let mut predicted = Map::new();
        for (n, v) in &self.predicted {
            predicted.insert(n.clone(), shown(v));
        }
        let checks: Vec<Value> = self.checks.iter().map(|(n, c)| json!({"name": n, "certificate": c.to_json()})).collect();
        let mut v = json!({
            "theorem": self.theorem,
            "hypotheses": self.hypotheses.iter().map(|h| h.to_json()).collect::<Vec<_>>(),
            "predicted": Value::Object(predicted),
            "conclusion": self.conclusion.to_json(),
            "checks": checks,
            "sound": self.sound(),
        });
        if let Some(t) = &self.tightness {
            v["tightness"] = t.to_json();
        }
        if !self.notes.is_empty() {
            v["notes"] = json!(self.notes);
        }
        v
    }
}

/// `lo` of a sup-type bracket or `hi` of an inf-type one, when certified and finite.
pub(crate) fn certified_bound(b: &ModulusBracket) -> Option<Scalar> {
    if bracket_verdict(b) != Verdict::Holds {
        return None;
    }
    let e = if b.kind.sup_type() { &b.lo } else { &b.hi };
    e.finite().cloned()
}

/// `|v_i - c_i| <= r_i` for each listed variable of an `n`-variable space.
pub(crate) fn closed_box(n: usize, sides: &[(usize, &Scalar, &Scalar)]) -> Vec<Constraint<Scalar>> {
    let mut out = Vec::new();
    for (v, c, r) in sides {
        out.push(lin(n, &[(*v, Scalar::one())], -&(*c + *r), Rel::Le));
        out.push(lin(n, &[(*v, Scalar::int(-1))], *c - *r, Rel::Le));
    }
    out
}

/// Local closedness of `Gr F ∩ cl[B(x̄, a) × B(ȳ, b)]` for a one-input map.
pub(crate) fn locally_closed(map: &MapHandle, x: &Scalar, y: &Scalar, a: &Scalar, b: &Scalar) -> Certificate {
    let what = format!("graph ∩ cl[B({x},{a}) × B({y},{b})] is closed");
    match map.graph() {
        Some(g) if g.in_dim == 1 => {
            let ok = g.closed_within(&closed_box(2, &[(0, x, a), (1, y, b)]));
            Certificate::claim(ok, what)
        }
        _ => match map.graph_closed() {
            Some(true) => Certificate::claim(true, format!("{what} (the whole graph is closed)")),
            _ => Certificate::new(
                crate::moduli::Property::Claim,
                Verdict::Inconclusive,
                None,
                crate::moduli::WindowSpec::Every,
                crate::moduli::Evidence::Exact,
            )
            .with_note(format!("{what}: undecided for this representation")),
        },
    }
}

pub(crate) fn inconclusive(note: impl Into<String>) -> Certificate {
    Certificate::new(
        crate::moduli::Property::Claim,
        Verdict::Inconclusive,
        None,
        crate::moduli::WindowSpec::Every,
        crate::moduli::Evidence::Exact,
    )
    .with_note(note)
}

/// Dyadic fractions `eps / 2^k`, `k = 1..=depth`.
pub fn dyadic_grid(eps: &Scalar, depth: u32) -> Vec<Scalar> {
    (1..=depth as i32).map(|k| eps * &Scalar::pow2(-k)).collect()
}

/// A conclusion that promises the property on some window: check `w` first and
/// fall back to arbitrarily small windows before reporting a failure.
pub(crate) fn conclude(
    map: &MapHandle,
    pt: &Point,
    property: Property,
    moving: Option<usize>,
    rate: &RateSpec,
    w: &Window,
    opts: &Opts,
) -> Result<Certificate, CheckError> {
    let c = check(map, pt, property, moving, rate, &WindowSpec::Concrete(w.clone()), opts)?;
    if c.holds() || map.solid_graph().is_none() {
        return Ok(match c.verdict {
            Verdict::Fails => Certificate { verdict: Verdict::Inconclusive, ..c }
                .with_note("violated on the given window; smaller windows were not decided"),
            _ => c,
        });
    }
    let every = check(map, pt, property, moving, rate, &WindowSpec::Every, opts)?;
    if every.holds() {
        return Ok(every.with_note("holds on all sufficiently small windows (the given window is too large)"));
    }
    Ok(c.with_note("violated on every window"))
}

/// `L`-openness at every graph point of `B(x̄, u) × B(ȳ, v)`, certified by
/// openness around `(x̄, ȳ)` on that window for some `ε`.
pub(crate) fn open_near(map: &MapHandle, pt: &Point, l: &Scalar, u: &Scalar, v: &Scalar, opts: &Opts) -> Result<Certificate, CheckError> {
    let base = Scalar::min(u, v);
    let mut last = None;
    for k in 0..8 {
        let w = Window { u_radius: u.clone(), v_radius: v.clone(), eps: &base * &Scalar::pow2(-k), p_radius: None };
        let c = check(map, pt, Property::Open, None, &RateSpec::Value(l.clone()), &WindowSpec::Concrete(w), opts)?;
        if c.holds() {
            return Ok(c);
        }
        last = Some(c);
    }
    let c = last.expect("tried");
    Ok(Certificate { verdict: Verdict::Inconclusive, ..c }
        .with_note("openness around the point was not certified; pointwise openness is undecided"))
}

/// The single value of a fiber.
pub(crate) fn single_value(map: &MapHandle, x: &[Scalar]) -> Option<Scalar> {
    let f = map.fiber(x).set;
    match (f.cells(), f.points()) {
        ([], [p]) => Some(p.clone()),
        _ => None,
    }
}
