//! Certificates, windows, rates and brackets.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::exactnum::{ExtScalar, Scalar};

/// Neighborhoods `U` (moving inputs), `V` (outputs), the radius cap `eps` and
/// the frozen-input neighborhood.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub u_radius: Scalar,
    pub v_radius: Scalar,
    pub eps: Scalar,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_radius: Option<Scalar>,
}

impl Window {
    pub fn uniform(r: Scalar) -> Window {
        Window { u_radius: r.clone(), v_radius: r.clone(), eps: r.clone(), p_radius: Some(r) }
    }

    pub fn new(u: Scalar, v: Scalar, eps: Scalar) -> Window {
        Window { p_radius: Some(u.clone()), u_radius: u, v_radius: v, eps }
    }

    pub fn p(&self) -> Scalar {
        self.p_radius.clone().unwrap_or_else(|| self.u_radius.clone())
    }

    pub fn is_valid(&self) -> bool {
        self.u_radius.is_positive()
            && self.v_radius.is_positive()
            && self.eps.is_positive()
            && self.p_radius.as_ref().map(|p| p.is_positive()).unwrap_or(true)
    }

    /// All radii multiplied by `k`.
    pub fn scaled(&self, k: &Scalar) -> Window {
        Window {
            u_radius: &self.u_radius * k,
            v_radius: &self.v_radius * k,
            eps: &self.eps * k,
            p_radius: self.p_radius.as_ref().map(|p| p * k),
        }
    }

    pub fn to_json(&self) -> Value {
        let mut v = json!({
            "u_radius": shown(&self.u_radius),
            "v_radius": shown(&self.v_radius),
            "eps": shown(&self.eps),
        });
        if let Some(p) = &self.p_radius {
            v["p_radius"] = shown(p);
        }
        v
    }
}

impl Default for Window {
    fn default() -> Self {
        Window::uniform(Scalar::frac(1, 2))
    }
}

/// The window a verdict refers to: a concrete one, or every window at once
/// (all radii an infinitesimal `t`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum WindowSpec {
    Concrete(Window),
    Every,
}

impl WindowSpec {
    pub fn to_json(&self) -> Value {
        match self {
            WindowSpec::Concrete(w) => w.to_json(),
            WindowSpec::Every => json!("every"),
        }
    }
}

/// A rate `L`, possibly infinitesimally perturbed: `q`, `q+`, `q-`, `0+` or `inf`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RateSpec {
    Value(Scalar),
    Above(Scalar),
    Below(Scalar),
    Tiny,
    Huge,
}

impl RateSpec {
    pub fn value(&self) -> Option<&Scalar> {
        match self {
            RateSpec::Value(q) => Some(q),
            _ => None,
        }
    }

    /// The real number the rate is infinitely close to.
    pub fn standard(&self) -> ExtScalar {
        match self {
            RateSpec::Value(q) | RateSpec::Above(q) | RateSpec::Below(q) => ExtScalar::Finite(q.clone()),
            RateSpec::Tiny => ExtScalar::Finite(Scalar::zero()),
            RateSpec::Huge => ExtScalar::PosInf,
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            RateSpec::Value(q) => shown(q),
            other => json!(other.to_string()),
        }
    }
}

impl FromStr for RateSpec {
    type Err = String;
    /// `q`, `q+`, `q-`, `0+` or `inf`.
    fn from_str(s: &str) -> Result<Self, String> {
        let t = s.trim();
        let bad = |e: crate::exactnum::NumError| format!("bad rate '{s}': {e}");
        match t {
            "0+" => Ok(RateSpec::Tiny),
            "inf" | "+inf" | "∞" => Ok(RateSpec::Huge),
            _ => {
                if let Some(q) = t.strip_suffix('+') {
                    Ok(RateSpec::Above(q.parse().map_err(bad)?))
                } else if let Some(q) = t.strip_suffix('-') {
                    Ok(RateSpec::Below(q.parse().map_err(bad)?))
                } else {
                    Ok(RateSpec::Value(t.parse().map_err(bad)?))
                }
            }
        }
    }
}

impl fmt::Display for RateSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RateSpec::Value(q) => write!(f, "{q}"),
            RateSpec::Above(q) => write!(f, "{q}+"),
            RateSpec::Below(q) => write!(f, "{q}-"),
            RateSpec::Tiny => write!(f, "0+"),
            RateSpec::Huge => write!(f, "inf"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Holds,
    Fails,
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Holds => "holds",
            Verdict::Fails => "fails",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

impl FromStr for Verdict {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "holds" => Ok(Verdict::Holds),
            "fails" => Ok(Verdict::Fails),
            "inconclusive" => Ok(Verdict::Inconclusive),
            other => Err(format!("unknown verdict '{other}'")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Evidence {
    /// Decided by quantifier elimination over the exact graph.
    Exact,
    /// Decided exactly with infinitesimal rate or window parameters.
    Infinitesimal,
    Sampled { grid: usize, seed: u64 },
    /// A registered hand-written argument.
    Bespoke(String),
}

impl Evidence {
    pub fn to_json(&self) -> Value {
        match self {
            Evidence::Exact => json!({"kind": "exact-symbolic"}),
            Evidence::Infinitesimal => json!({"kind": "exact-symbolic", "parameters": "infinitesimal"}),
            Evidence::Sampled { grid, seed } => json!({"kind": "sampled", "grid": grid, "seed": seed.to_string()}),
            Evidence::Bespoke(why) => json!({"kind": "bespoke", "argument": why}),
        }
    }

    pub fn is_proof(&self) -> bool {
        !matches!(self, Evidence::Sampled { .. })
    }
}

/// A concrete violating instance, replayable by re-evaluation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Witness {
    pub values: Vec<(String, Scalar)>,
    pub rate: Scalar,
    pub window: Window,
    pub note: Option<String>,
}

impl Witness {
    pub fn get(&self, name: &str) -> Option<&Scalar> {
        self.values.iter().find(|(n, _)| n == name).map(|(_, v)| v)
    }

    pub fn to_json(&self) -> Value {
        let vals: Vec<Value> = self.values.iter().map(|(n, v)| json!({"name": n, "value": shown(v)})).collect();
        let mut out = json!({"values": vals, "rate": shown(&self.rate), "window": self.window.to_json()});
        if let Some(n) = &self.note {
            out["note"] = json!(n);
        }
        out
    }
}

/// Properties a certificate can speak about.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Property {
    Open,
    LipschitzLike,
    MetricRegular,
    OpenAt,
    Pseudocalm,
    Hemiregular,
    FullLipschitz,
    Calm,
    InnerSemicontinuous,
    SumStable,
    /// A theorem conclusion or side condition.
    Claim,
}

impl Property {
    /// Whether holding at `L` implies holding at every smaller rate.
    pub fn sup_type(self) -> bool {
        matches!(self, Property::Open | Property::OpenAt)
    }

    pub fn name(self) -> &'static str {
        match self {
            Property::Open => "open",
            Property::LipschitzLike => "lipschitz_like",
            Property::MetricRegular => "metric_regular",
            Property::OpenAt => "open_at",
            Property::Pseudocalm => "pseudocalm",
            Property::Hemiregular => "hemiregular",
            Property::FullLipschitz => "full_lipschitz",
            Property::Calm => "calm",
            Property::InnerSemicontinuous => "inner_semicontinuous",
            Property::SumStable => "sum_stable",
            Property::Claim => "claim",
        }
    }
}

impl FromStr for Property {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        serde_json::from_value(json!(s)).map_err(|_| format!("unknown property '{s}'"))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Certificate {
    pub property: Property,
    pub verdict: Verdict,
    pub rate: Option<RateSpec>,
    pub window: WindowSpec,
    pub witness: Option<Witness>,
    pub evidence: Evidence,
    pub note: Option<String>,
}

impl Certificate {
    pub fn new(property: Property, verdict: Verdict, rate: Option<RateSpec>, window: WindowSpec, evidence: Evidence) -> Self {
        Certificate { property, verdict, rate, window, witness: None, evidence, note: None }
    }

    pub fn with_witness(mut self, w: Witness) -> Self {
        self.witness = Some(w);
        self
    }

    pub fn with_note(mut self, n: impl Into<String>) -> Self {
        self.note = Some(n.into());
        self
    }

    /// A side condition checked by exact arithmetic.
    pub fn claim(ok: bool, note: impl Into<String>) -> Certificate {
        let v = if ok { Verdict::Holds } else { Verdict::Fails };
        Certificate::new(Property::Claim, v, None, WindowSpec::Every, Evidence::Exact).with_note(note)
    }

    pub fn holds(&self) -> bool {
        self.verdict == Verdict::Holds
    }

    pub fn fails(&self) -> bool {
        self.verdict == Verdict::Fails
    }

    pub fn to_json(&self) -> Value {
        let mut v = json!({
            "property": self.property.name(),
            "verdict": self.verdict.to_string(),
        });
        if let Some(r) = &self.rate {
            v["rate"] = r.to_json();
        }
        v["window"] = self.window.to_json();
        if let Some(w) = &self.witness {
            v["witness"] = w.to_json();
        }
        v["evidence"] = self.evidence.to_json();
        if let Some(n) = &self.note {
            v["note"] = json!(n);
        }
        v
    }
}

/// The moduli that can be estimated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Lop,
    Lip,
    Reg,
    Plop,
    Psdclm,
    Hemreg,
    LopX,
    LipX,
    RegX,
    LopP,
    LipP,
    RegP,
}

impl Kind {
    pub const ALL: [Kind; 12] = [
        Kind::Lop,
        Kind::Lip,
        Kind::Reg,
        Kind::Plop,
        Kind::Psdclm,
        Kind::Hemreg,
        Kind::LopX,
        Kind::LipX,
        Kind::RegX,
        Kind::LopP,
        Kind::LipP,
        Kind::RegP,
    ];

    pub fn property(self) -> Property {
        match self {
            Kind::Lop | Kind::LopX | Kind::LopP => Property::Open,
            Kind::Lip | Kind::LipX | Kind::LipP => Property::LipschitzLike,
            Kind::Reg | Kind::RegX | Kind::RegP => Property::MetricRegular,
            Kind::Plop => Property::OpenAt,
            Kind::Psdclm => Property::Pseudocalm,
            Kind::Hemreg => Property::Hemiregular,
        }
    }

    /// The moving input coordinate for parametric kinds.
    pub fn moving(self) -> Option<usize> {
        match self {
            Kind::LopX | Kind::LipX | Kind::RegX => Some(0),
            Kind::LopP | Kind::LipP | Kind::RegP => Some(1),
            _ => None,
        }
    }

    pub fn sup_type(self) -> bool {
        self.property().sup_type()
    }

    pub fn name(self) -> &'static str {
        match self {
            Kind::Lop => "lop",
            Kind::Lip => "lip",
            Kind::Reg => "reg",
            Kind::Plop => "plop",
            Kind::Psdclm => "psdclm",
            Kind::Hemreg => "hemreg",
            Kind::LopX => "lop_x",
            Kind::LipX => "lip_x",
            Kind::RegX => "reg_x",
            Kind::LopP => "lop_p",
            Kind::LipP => "lip_p",
            Kind::RegP => "reg_p",
        }
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Kind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let key = s.trim().to_ascii_lowercase().replace('-', "_");
        Kind::ALL.iter().copied().find(|k| k.name() == key).ok_or_else(|| format!("unknown modulus kind '{s}'"))
    }
}

/// An enclosure `lo ≤ m ≤ hi` of the modulus `m` for one window.
///
/// For sup-type kinds `holds` is the certified rate at the `lo` end and
/// `fails` the refuted rate at the `hi` end; inf-type kinds swap the ends.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModulusBracket {
    pub kind: Kind,
    pub lo: ExtScalar,
    pub hi: ExtScalar,
    pub holds: Option<Certificate>,
    pub fails: Option<Certificate>,
    pub window: Window,
    pub verdict: Verdict,
    pub iterations: usize,
    pub note: Option<String>,
}

impl ModulusBracket {
    pub fn is_exact(&self) -> bool {
        self.lo == self.hi && self.verdict == Verdict::Holds
    }

    pub fn width(&self) -> ExtScalar {
        match (&self.lo, &self.hi) {
            (ExtScalar::Finite(a), ExtScalar::Finite(b)) => ExtScalar::Finite(b - a),
            _ => ExtScalar::PosInf,
        }
    }

    pub fn contains(&self, v: &Scalar) -> bool {
        self.lo <= ExtScalar::Finite(v.clone()) && ExtScalar::Finite(v.clone()) <= self.hi
    }

    pub fn to_json(&self) -> Value {
        let mut v = json!({
            "kind": self.kind.name(),
            "lo": shown_ext(&self.lo),
            "hi": shown_ext(&self.hi),
            "exact": self.is_exact(),
            "verdict": self.verdict.to_string(),
            "window": self.window.to_json(),
            "iterations": self.iterations,
        });
        if let Some(c) = &self.holds {
            v["holds_at"] = c.to_json();
        }
        if let Some(c) = &self.fails {
            v["fails_at"] = c.to_json();
        }
        if let Some(n) = &self.note {
            v["note"] = json!(n);
        }
        v
    }
}

impl fmt::Display for ModulusBracket {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ∈ [{}, {}]", self.kind, self.lo, self.hi)?;
        if self.is_exact() {
            write!(f, " (exact)")?;
        }
        if self.verdict == Verdict::Inconclusive {
            write!(f, " (inconclusive)")?;
        }
        Ok(())
    }
}

/// Digits of the decimal approximation shown next to exact values.
pub const APPROX_DIGITS: usize = 12;

/// A scalar as `{exact, approx}`.
pub fn shown(s: &Scalar) -> Value {
    json!({"exact": s.to_string(), "approx": s.approx(APPROX_DIGITS)})
}

pub fn shown_ext(s: &ExtScalar) -> Value {
    json!({"exact": s.to_string(), "approx": s.approx(APPROX_DIGITS)})
}
