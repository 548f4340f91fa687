//! Bisection estimators for moduli and the linkage identities between them.

use serde_json::{json, Value};

use super::{check, CheckError, Opts, Point};
use super::types::*;
use crate::exactnum::{ExtScalar, Scalar};
use crate::mfn::MapHandle;

/// Exponent of the initial bisection span `[2^-k, 2^k]`.
pub const SPAN_EXP: i32 = 20;

struct Search<'a> {
    map: &'a MapHandle,
    pt: &'a Point,
    kind: Kind,
    window: Window,
    opts: &'a Opts,
    /// Certified rates on the low and high side of the modulus.
    lo: Option<(Scalar, Certificate)>,
    hi: Option<(Scalar, Certificate)>,
    /// Rates on the high/low side known only from inconclusive probes.
    tentative_lo: Option<Scalar>,
    tentative_hi: Option<Scalar>,
    probes: usize,
}

enum Side {
    Low,
    High,
    Unknown,
}

impl<'a> Search<'a> {
    fn probe(&mut self, rate: RateSpec) -> Result<Certificate, CheckError> {
        self.probes += 1;
        check(
            self.map,
            self.pt,
            self.kind.property(),
            self.kind.moving(),
            &rate,
            &WindowSpec::Concrete(self.window.clone()),
            self.opts,
        )
    }

    /// Which side of the modulus a verdict at some rate puts that rate on.
    fn side(&self, v: Verdict) -> Side {
        let sup = self.kind.sup_type();
        match (v, sup) {
            (Verdict::Holds, true) | (Verdict::Fails, false) => Side::Low,
            (Verdict::Holds, false) | (Verdict::Fails, true) => Side::High,
            (Verdict::Inconclusive, _) => Side::Unknown,
        }
    }

    fn record(&mut self, q: &Scalar, c: Certificate) {
        match self.side(c.verdict) {
            Side::Low => {
                if self.lo.as_ref().map(|(l, _)| q > l).unwrap_or(true) {
                    self.lo = Some((q.clone(), c));
                }
            }
            Side::High => {
                if self.hi.as_ref().map(|(h, _)| q < h).unwrap_or(true) {
                    self.hi = Some((q.clone(), c));
                }
            }
            Side::Unknown => {
                // No violation found: treat as holding for the search only.
                if self.kind.sup_type() {
                    if self.tentative_lo.as_ref().map(|l| q > l).unwrap_or(true) {
                        self.tentative_lo = Some(q.clone());
                    }
                } else if self.tentative_hi.as_ref().map(|h| q < h).unwrap_or(true) {
                    self.tentative_hi = Some(q.clone());
                }
            }
        }
    }

    fn search_lo(&self) -> Option<Scalar> {
        let a = self.lo.as_ref().map(|(l, _)| l.clone());
        match (a, self.tentative_lo.clone()) {
            (Some(a), Some(b)) => Some(Scalar::max(&a, &b)),
            (a, b) => a.or(b),
        }
    }

    fn search_hi(&self) -> Option<Scalar> {
        let a = self.hi.as_ref().map(|(h, _)| h.clone());
        match (a, self.tentative_hi.clone()) {
            (Some(a), Some(b)) => Some(Scalar::min(&a, &b)),
            (a, b) => a.or(b),
        }
    }

    /// Try to prove the modulus equals `q` exactly after a certified probe at `q`.
    fn exact_hit(&mut self, q: &Scalar, v: Verdict) -> Result<bool, CheckError> {
        if self.map.solid_graph().is_none() {
            return Ok(false);
        }
        let (rate, want) = match (v, self.kind.sup_type()) {
            (Verdict::Holds, true) => (RateSpec::Above(q.clone()), Verdict::Fails),
            (Verdict::Fails, true) => (RateSpec::Below(q.clone()), Verdict::Holds),
            (Verdict::Holds, false) => (RateSpec::Below(q.clone()), Verdict::Fails),
            (Verdict::Fails, false) => (RateSpec::Above(q.clone()), Verdict::Holds),
            _ => return Ok(false),
        };
        let c = self.probe(rate)?;
        if c.verdict != want {
            return Ok(false);
        }
        match self.side(c.verdict) {
            Side::Low => self.lo = Some((q.clone(), c)),
            Side::High => self.hi = Some((q.clone(), c)),
            Side::Unknown => unreachable!(),
        }
        Ok(true)
    }

    fn finish(self, verdict: Verdict, note: Option<String>) -> ModulusBracket {
        let sup = self.kind.sup_type();
        let lo = self.lo.as_ref().map(|(l, _)| ExtScalar::Finite(l.clone())).unwrap_or(ExtScalar::Finite(Scalar::zero()));
        let hi = self.hi.as_ref().map(|(h, _)| ExtScalar::Finite(h.clone())).unwrap_or(ExtScalar::PosInf);
        let (lo_c, hi_c) = (self.lo.map(|p| p.1), self.hi.map(|p| p.1));
        let (holds, fails) = if sup { (lo_c, hi_c) } else { (hi_c, lo_c) };
        ModulusBracket { kind: self.kind, lo, hi, holds, fails, window: self.window, verdict, iterations: self.probes, note }
    }

    fn finish_extreme(self, value: ExtScalar, c: Certificate) -> ModulusBracket {
        let (holds, fails) = if c.verdict == Verdict::Holds { (Some(c), None) } else { (None, Some(c)) };
        ModulusBracket {
            kind: self.kind,
            lo: value.clone(),
            hi: value,
            holds,
            fails,
            window: self.window,
            verdict: Verdict::Holds,
            iterations: self.probes,
            note: None,
        }
    }
}

/// Bracket the modulus `kind` of `map` at `pt` on window `w`.
///
/// Probes alternate between the simplest rational inside the current
/// bracket and its midpoint; a certified probe is followed by an
/// infinitesimal probe that may prove the modulus equals it.
pub fn estimate_modulus(
    map: &MapHandle,
    pt: &Point,
    kind: Kind,
    w: &Window,
    opts: &Opts,
) -> Result<ModulusBracket, CheckError> {
    let mut s = Search {
        map,
        pt,
        kind,
        window: w.clone(),
        opts,
        lo: None,
        hi: None,
        tentative_lo: None,
        tentative_hi: None,
        probes: 0,
    };
    let span_lo = Scalar::pow2(-SPAN_EXP);
    let span_hi = Scalar::pow2(SPAN_EXP);
    if opts.budget == 0 {
        // Validate inputs even when no probe is allowed.
        super::validate(map, pt, kind.property())?;
        let mut b = s.finish(Verdict::Inconclusive, Some("budget 0: initial span only".into()));
        b.lo = ExtScalar::Finite(span_lo);
        b.hi = ExtScalar::Finite(span_hi);
        return Ok(b);
    }
    let sup = kind.sup_type();
    // Zero and infinity.
    let (zero_rate, zero_want, inf_want) =
        if sup { (RateSpec::Tiny, Verdict::Fails, Verdict::Holds) } else { (RateSpec::Tiny, Verdict::Holds, Verdict::Fails) };
    let c = s.probe(zero_rate)?;
    if c.verdict == zero_want {
        return Ok(s.finish_extreme(ExtScalar::Finite(Scalar::zero()), c));
    }
    let c = s.probe(RateSpec::Huge)?;
    if c.verdict == inf_want {
        return Ok(s.finish_extreme(ExtScalar::PosInf, c));
    }
    for q in [span_lo.clone(), span_hi.clone()] {
        let c = s.probe(RateSpec::Value(q.clone()))?;
        s.record(&q, c);
    }
    let mut done_note = None;
    if s.search_hi().map(|h| h <= span_lo).unwrap_or(false) {
        done_note = Some("modulus below the initial span".to_string());
    } else if s.search_lo().map(|l| l >= span_hi).unwrap_or(false) {
        done_note = Some("modulus above the initial span".to_string());
    }
    if done_note.is_none() {
        for _ in 0..opts.budget {
            let (Some(a), Some(b)) = (s.search_lo(), s.search_hi()) else { break };
            if a >= b {
                break;
            }
            let q1 = Scalar::from_rational(Scalar::simplest_between(a.rat_part(), b.rat_part()));
            let c = s.probe(RateSpec::Value(q1.clone()))?;
            let v = c.verdict;
            s.record(&q1, c);
            if v != Verdict::Inconclusive && s.exact_hit(&q1, v)? {
                let mut out = s.finish(Verdict::Holds, Some("exact".into()));
                out.lo = ExtScalar::Finite(q1.clone());
                out.hi = ExtScalar::Finite(q1);
                return Ok(out);
            }
            let (Some(a), Some(b)) = (s.search_lo(), s.search_hi()) else { break };
            let mid = (&a + &b).half();
            if mid != q1 && a < mid && mid < b {
                let c = s.probe(RateSpec::Value(mid.clone()))?;
                s.record(&mid, c);
            }
        }
    }
    let certified = s.search_lo() == s.lo.as_ref().map(|p| p.0.clone())
        && s.search_hi() == s.hi.as_ref().map(|p| p.0.clone());
    let verdict = if certified { Verdict::Holds } else { Verdict::Inconclusive };
    let note = if certified {
        done_note
    } else {
        Some("some probes were inconclusive; the certified bracket is wider than the search bracket".into())
    };
    Ok(s.finish(verdict, note))
}

/// Reciprocal of a bracket: `[1/hi, 1/lo]` with `1/0 = inf`.
pub fn reciprocal(lo: &ExtScalar, hi: &ExtScalar) -> (ExtScalar, ExtScalar) {
    let inv = |e: &ExtScalar| match e {
        ExtScalar::PosInf => ExtScalar::Finite(Scalar::zero()),
        ExtScalar::Finite(s) if s.is_zero() => ExtScalar::PosInf,
        ExtScalar::Finite(s) => ExtScalar::Finite(s.recip().expect("nonzero")),
        ExtScalar::NegInf => ExtScalar::Finite(Scalar::zero()),
    };
    (inv(hi), inv(lo))
}

fn overlap(a: &(ExtScalar, ExtScalar), b: &(ExtScalar, ExtScalar)) -> bool {
    a.0 <= b.1 && b.0 <= a.1
}

/// Three brackets that should agree through `lop⁻¹ = lip F⁻¹ = reg`.
#[derive(Clone, Debug)]
pub struct LinkReport {
    pub identity: &'static str,
    pub opening: ModulusBracket,
    pub inverse: ModulusBracket,
    pub regularity: ModulusBracket,
    pub consistent: bool,
}

impl LinkReport {
    pub fn verdict(&self) -> Verdict {
        if !self.consistent {
            Verdict::Fails
        } else {
            Verdict::Holds
        }
    }

    /// All three brackets are single points.
    pub fn exact(&self) -> bool {
        self.opening.is_exact() && self.inverse.is_exact() && self.regularity.is_exact()
    }

    pub fn to_json(&self) -> Value {
        json!({
            "identity": self.identity,
            "brackets": [self.opening.to_json(), self.inverse.to_json(), self.regularity.to_json()],
            "consistent": self.consistent,
            "exact": self.exact(),
        })
    }
}

fn link(
    map: &MapHandle,
    pt: &Point,
    w: &Window,
    opts: &Opts,
    kinds: (Kind, Kind, Kind),
    identity: &'static str,
) -> Result<LinkReport, CheckError> {
    let opening = estimate_modulus(map, pt, kinds.0, w, opts)?;
    let regularity = estimate_modulus(map, pt, kinds.2, w, opts)?;
    let inv = map.invert()?;
    let wi = Window { u_radius: w.v_radius.clone(), v_radius: w.u_radius.clone(), eps: w.eps.clone(), p_radius: None };
    let inverse = estimate_modulus(&inv, &pt.swapped(), kinds.1, &wi, opts)?;
    let r = reciprocal(&opening.lo, &opening.hi);
    let reg = (regularity.lo.clone(), regularity.hi.clone());
    let lipi = (inverse.lo.clone(), inverse.hi.clone());
    let consistent = overlap(&r, &reg) && overlap(&r, &lipi) && overlap(&reg, &lipi);
    Ok(LinkReport { identity, opening, inverse, regularity, consistent })
}

/// Brackets for `lop F`, `lip F⁻¹` and `reg F` and their mutual consistency.
pub fn verify_link_around(map: &MapHandle, pt: &Point, w: &Window, opts: &Opts) -> Result<LinkReport, CheckError> {
    link(map, pt, w, opts, (Kind::Lop, Kind::Lip, Kind::Reg), "lop^-1 = lip F^-1 = reg")
}

/// Brackets for `plop F`, `psdclm F⁻¹` and `hemreg F` and their mutual consistency.
pub fn verify_link_at(map: &MapHandle, pt: &Point, w: &Window, opts: &Opts) -> Result<LinkReport, CheckError> {
    link(map, pt, w, opts, (Kind::Plop, Kind::Psdclm, Kind::Hemreg), "plop^-1 = psdclm F^-1 = hemreg")
}
