//! Scenario runner and command line.
//!
//! A scenario names maps and lists checks; checks run in parallel with seeds
//! derived from the global seed and their index, and the report keeps the
//! scenario order. Exit codes: 0 all as expected, 1 a mismatch or an
//! unexpected failure, 2 something undecided, 64 a usage or parse error.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::io::Write;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::exactnum::Scalar;
use crate::mfn::pamap::MapSpec;
use crate::mfn::{build_map, map_from_text, MapError, MapHandle};
use crate::moduli::{
    check, check_isc, estimate_modulus, verify_link_around, verify_link_at, Certificate, CheckError, Kind,
    LinkReport, ModulusBracket, Opts, Point, Property, RateSpec, Verdict, Window, WindowSpec,
};
use crate::theorems::{
    check_local_sum_stability, check_sum_stability, verify_difference_openness, verify_gamma_aubin,
    verify_graves_corollary, verify_implicit_inequalities, verify_lip_solution_bound, verify_lip_sum,
    verify_multi_difference_openness, verify_partial_openness_bound, verify_reg_solution_bound, DiffRadii, GammaData,
    ImplicitMode, SumPoint, TheoremError, TheoremReport,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_MISMATCH: i32 = 1;
pub const EXIT_INCONCLUSIVE: i32 = 2;
pub const EXIT_USAGE: i32 = 64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("parse error at {path}: {msg}")]
    Parse { path: String, msg: String },
}

impl CliError {
    fn usage(m: impl Into<String>) -> CliError {
        CliError::Usage(m.into())
    }
}

impl From<MapError> for CliError {
    fn from(e: MapError) -> Self {
        CliError::Usage(e.to_string())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, ValueEnum, Default)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Text,
    Json,
}

/// Settings stored in a scenario; command-line flags take precedence.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    pub budget: Option<usize>,
    pub grid: Option<usize>,
    pub seed: Option<u64>,
    pub format: Option<Format>,
    pub expect_strict: Option<bool>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckSpec {
    pub op: String,
    #[serde(default)]
    pub args: Value,
    #[serde(default)]
    pub expect: Option<Verdict>,
    #[serde(default)]
    pub label: Option<String>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub settings: Settings,
    #[serde(default)]
    pub maps: BTreeMap<String, MapSpec>,
    pub checks: Vec<CheckSpec>,
}

fn de_path<T: DeserializeOwned>(text: &str) -> Result<T, CliError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let inner = e.inner();
        CliError::Parse {
            path: e.path().to_string(),
            msg: format!("{inner} (line {}, column {})", inner.line(), inner.column()),
        }
    })
}

pub fn parse_scenario(text: &str) -> Result<Scenario, CliError> {
    de_path(text)
}

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum WindowArg {
    Full(Window),
    Radius(Scalar),
    Word(EveryWord),
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EveryWord {
    Every,
}

impl WindowArg {
    fn spec(&self) -> WindowSpec {
        match self {
            WindowArg::Full(w) => WindowSpec::Concrete(w.clone()),
            WindowArg::Radius(r) => WindowSpec::Concrete(Window::uniform(r.clone())),
            WindowArg::Word(_) => WindowSpec::Every,
        }
    }
}

fn concrete(w: &Option<WindowArg>) -> Result<Window, CliError> {
    match w.as_ref().map(|w| w.spec()) {
        None => Ok(Window::default()),
        Some(WindowSpec::Concrete(w)) if w.is_valid() => Ok(w),
        Some(WindowSpec::Concrete(_)) => Err(CliError::usage("window radii must be positive")),
        Some(WindowSpec::Every) => Err(CliError::usage("this operation needs a concrete window")),
    }
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeArg {
    XOpen,
    POpen,
}

macro_rules! args {
    ($name:ident { $($field:ident : $ty:ty),* $(,)? }) => {
        #[derive(Clone, Debug, Deserialize)]
        #[serde(deny_unknown_fields)]
        pub struct $name { $(pub $field: $ty),* }
    };
}

args!(CheckArgs { map: String, point: Vec<Scalar>, property: String, rate: String, window: Option<WindowArg>, moving: Option<usize> });
args!(IscArgs { map: String, point: Vec<Scalar>, eps: Scalar, delta: Option<Scalar> });
args!(EstimateArgs { map: String, point: Vec<Scalar>, kind: String, window: Option<WindowArg> });
args!(LinkArgs { map: String, point: Vec<Scalar>, window: Option<WindowArg> });
args!(SumArgs { f: String, g: String, point: Vec<Scalar>, eps: Option<Scalar>, window: Option<WindowArg> });
args!(DiffArgs { f: String, g: String, x: Scalar, y: Scalar, z: Scalar, l: Scalar, m: Scalar, radius: Option<Scalar>, depth: Option<u32> });
args!(MultiArgs { f: String, gs: Vec<String>, x: Scalar, y: Scalar, zs: Vec<Scalar>, l: Scalar, ms: Vec<Scalar>, radius: Option<Scalar> });
args!(GravesArgs { f: String, g: String, x: Scalar, z: Scalar, l: Scalar, m: Scalar, lip: Scalar, radius: Option<Scalar> });
args!(PartialArgs { f: String, a: Vec<Scalar>, alpha: Scalar, point: Vec<Scalar>, window: Option<WindowArg> });
args!(ImplicitArgs { h: String, point: Vec<Scalar>, mode: Option<ModeArg>, c: Scalar, window: Option<WindowArg>, grid: Option<usize> });
args!(GammaArgs { f: String, g: String, x: Scalar, y: Scalar, w: Scalar, eta: Scalar, k: Scalar, lambda: Scalar, alpha: Scalar, grid: Option<usize> });

/// A check with typed arguments.
#[derive(Clone, Debug)]
pub enum Op {
    Check(CheckArgs),
    Isc(IscArgs),
    Estimate(EstimateArgs),
    LinkAround(LinkArgs),
    LinkAt(LinkArgs),
    SumStability(SumArgs),
    LocalSumStability(SumArgs),
    LipSum(SumArgs),
    RegSolutionBound(SumArgs),
    LipSolutionBound(SumArgs),
    DifferenceOpenness(DiffArgs),
    MultiDifferenceOpenness(MultiArgs),
    Graves(GravesArgs),
    PartialOpenness(PartialArgs),
    Implicit(ImplicitArgs),
    Gamma(GammaArgs),
}

pub const OPS: [&str; 16] = [
    "check",
    "isc",
    "estimate",
    "link_around",
    "link_at",
    "sum_stability",
    "local_sum_stability",
    "lip_sum",
    "reg_solution_bound",
    "lip_solution_bound",
    "difference_openness",
    "multi_difference_openness",
    "graves",
    "partial_openness",
    "implicit",
    "gamma",
];

impl Op {
    fn parse(name: &str, args: &Value, at: &str) -> Result<Op, CliError> {
        fn a<T: DeserializeOwned>(v: &Value, at: &str) -> Result<T, CliError> {
            serde_path_to_error::deserialize(v.clone()).map_err(|e| CliError::Parse {
                path: format!("{at}.args.{}", e.path()),
                msg: e.inner().to_string(),
            })
        }
        Ok(match name {
            "check" => Op::Check(a(args, at)?),
            "isc" => Op::Isc(a(args, at)?),
            "estimate" => Op::Estimate(a(args, at)?),
            "link_around" => Op::LinkAround(a(args, at)?),
            "link_at" => Op::LinkAt(a(args, at)?),
            "sum_stability" => Op::SumStability(a(args, at)?),
            "local_sum_stability" => Op::LocalSumStability(a(args, at)?),
            "lip_sum" => Op::LipSum(a(args, at)?),
            "reg_solution_bound" => Op::RegSolutionBound(a(args, at)?),
            "lip_solution_bound" => Op::LipSolutionBound(a(args, at)?),
            "difference_openness" => Op::DifferenceOpenness(a(args, at)?),
            "multi_difference_openness" => Op::MultiDifferenceOpenness(a(args, at)?),
            "graves" => Op::Graves(a(args, at)?),
            "partial_openness" => Op::PartialOpenness(a(args, at)?),
            "implicit" => Op::Implicit(a(args, at)?),
            "gamma" => Op::Gamma(a(args, at)?),
            other => {
                return Err(CliError::Parse {
                    path: format!("{at}.op"),
                    msg: format!("unknown operation '{other}' (known: {})", OPS.join(", ")),
                })
            }
        })
    }

    fn maps(&self) -> Vec<&str> {
        match self {
            Op::Check(a) => vec![&a.map],
            Op::Isc(a) => vec![&a.map],
            Op::Estimate(a) => vec![&a.map],
            Op::LinkAround(a) | Op::LinkAt(a) => vec![&a.map],
            Op::SumStability(a)
            | Op::LocalSumStability(a)
            | Op::LipSum(a)
            | Op::RegSolutionBound(a)
            | Op::LipSolutionBound(a) => vec![&a.f, &a.g],
            Op::DifferenceOpenness(a) => vec![&a.f, &a.g],
            Op::MultiDifferenceOpenness(a) => std::iter::once(a.f.as_str()).chain(a.gs.iter().map(|s| s.as_str())).collect(),
            Op::Graves(a) => vec![&a.f, &a.g],
            Op::PartialOpenness(a) => vec![&a.f],
            Op::Implicit(a) => vec![&a.h],
            Op::Gamma(a) => vec![&a.f, &a.g],
        }
    }

    fn describe(&self) -> String {
        match self {
            Op::Check(a) => format!("{} {} at ({})", a.property, a.map, join(&a.point)),
            Op::Isc(a) => format!("isc {} at ({})", a.map, join(&a.point)),
            Op::Estimate(a) => format!("{} {} at ({})", a.kind, a.map, join(&a.point)),
            Op::LinkAround(a) => format!("link around {} at ({})", a.map, join(&a.point)),
            Op::LinkAt(a) => format!("link at {} at ({})", a.map, join(&a.point)),
            Op::SumStability(a) => format!("sum-stability ({}, {}) at ({})", a.f, a.g, join(&a.point)),
            Op::LocalSumStability(a) => format!("local sum-stability ({}, {}) at ({})", a.f, a.g, join(&a.point)),
            Op::LipSum(a) => format!("lip-sum ({}, {}) at ({})", a.f, a.g, join(&a.point)),
            Op::RegSolutionBound(a) => format!("reg S bound ({}, {}) at ({})", a.f, a.g, join(&a.point)),
            Op::LipSolutionBound(a) => format!("lip S bound ({}, {}) at ({})", a.f, a.g, join(&a.point)),
            Op::DifferenceOpenness(a) => format!("openness of {} - inv({})", a.f, a.g),
            Op::MultiDifferenceOpenness(a) => format!("openness of {} - inv({})", a.f, a.gs.join(") - inv(")),
            Op::Graves(a) => format!("graves ({}, {})", a.f, a.g),
            Op::PartialOpenness(a) => format!("partial openness of {}", a.f),
            Op::Implicit(a) => format!("implicit map of {}", a.h),
            Op::Gamma(a) => format!("gamma ({}, {})", a.f, a.g),
        }
    }
}

fn join(v: &[Scalar]) -> String {
    v.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(", ")
}

/// A graph point from coordinates `x..., y`.
fn point(v: &[Scalar]) -> Result<Point, CliError> {
    match v {
        [x, y] => Ok(Point::new(x.clone(), y.clone())),
        [x, p, y] => Ok(Point::param(x.clone(), p.clone(), y.clone())),
        _ => Err(CliError::usage(format!("a point needs 2 or 3 coordinates, got {}", v.len()))),
    }
}

/// A sum point from `x..., y, z`.
fn sum_point(v: &[Scalar]) -> Result<SumPoint, CliError> {
    match v {
        [x, y, z] => Ok(SumPoint::new(x.clone(), y.clone(), z.clone())),
        [x, p, y, z] => Ok(SumPoint::param(x.clone(), p.clone(), y.clone(), z.clone())),
        _ => Err(CliError::usage(format!("a sum point needs 3 or 4 coordinates, got {}", v.len()))),
    }
}

/// Resolves scenario map names, falling back to the library.
struct Resolver<'a> {
    specs: &'a BTreeMap<String, MapSpec>,
    done: HashMap<String, MapHandle>,
    active: BTreeSet<String>,
}

impl<'a> Resolver<'a> {
    fn new(specs: &'a BTreeMap<String, MapSpec>) -> Self {
        Resolver { specs, done: HashMap::new(), active: BTreeSet::new() }
    }

    fn get(&mut self, name: &str) -> Result<MapHandle, MapError> {
        if let Some(m) = self.done.get(name) {
            return Ok(m.clone());
        }
        let Some(spec) = self.specs.get(name) else {
            return MapHandle::builtin(name);
        };
        if !self.active.insert(name.to_string()) {
            return Err(MapError::Invalid(format!("map '{name}' refers to itself")));
        }
        let m = build_map(name, spec, &mut |n| self.get(n));
        self.active.remove(name);
        let m = m.map_err(|e| MapError::Invalid(format!("map '{name}': {e}")))?;
        self.done.insert(name.to_string(), m.clone());
        Ok(m)
    }
}

/// Effective settings of a run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Flags {
    pub budget: usize,
    pub grid: usize,
    pub seed: u64,
    pub format: Format,
    pub expect_strict: bool,
}

impl Default for Flags {
    fn default() -> Self {
        let o = Opts::default();
        Flags { budget: o.budget, grid: o.grid, seed: o.seed, format: Format::Text, expect_strict: false }
    }
}

/// Command-line overrides.
#[derive(Clone, Copy, Debug, Default, Args)]
pub struct FlagArgs {
    /// Probe budget of the bracket searches.
    #[arg(long)]
    pub budget: Option<usize>,
    /// Sampling grid density.
    #[arg(long)]
    pub grid: Option<usize>,
    /// Global seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Treat checks without an expectation as required to hold.
    #[arg(long)]
    pub expect_strict: bool,
}

impl FlagArgs {
    pub fn over(&self, s: &Settings) -> Flags {
        let d = Flags::default();
        Flags {
            budget: self.budget.or(s.budget).unwrap_or(d.budget),
            grid: self.grid.or(s.grid).unwrap_or(d.grid),
            seed: self.seed.or(s.seed).unwrap_or(d.seed),
            format: self.format.or(s.format).unwrap_or(d.format),
            expect_strict: self.expect_strict || s.expect_strict.unwrap_or(false),
        }
    }
}

/// Seed of check `index` under the global `seed`.
pub fn check_seed(seed: u64, index: usize) -> u64 {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(index as u64);
    r.next_u64()
}

/// What a check produced.
#[derive(Clone, Debug)]
pub enum Outcome {
    Certificate(Certificate),
    Bracket(ModulusBracket),
    Link(LinkReport),
    Theorem(TheoremReport),
    /// A theorem whose side conditions rule it out on this instance.
    Precondition(String),
}

impl Outcome {
    pub fn verdict(&self) -> Verdict {
        match self {
            Outcome::Certificate(c) => c.verdict,
            Outcome::Bracket(b) => b.verdict,
            Outcome::Link(l) => l.verdict(),
            Outcome::Theorem(t) => t.verdict(),
            Outcome::Precondition(_) => Verdict::Inconclusive,
        }
    }

    fn to_json(&self) -> Value {
        match self {
            Outcome::Certificate(c) => json!({"certificate": c.to_json()}),
            Outcome::Bracket(b) => json!({"bracket": b.to_json()}),
            Outcome::Link(l) => json!({"link": l.to_json()}),
            Outcome::Theorem(t) => json!({"theorem": t.to_json()}),
            Outcome::Precondition(m) => json!({"precondition": m}),
        }
    }

    fn detail(&self) -> Vec<String> {
        match self {
            Outcome::Certificate(c) => cert_lines(c),
            Outcome::Bracket(b) => bracket_lines(b),
            Outcome::Link(l) => {
                let mut v = vec![format!("{} (consistent: {})", l.identity, l.consistent)];
                for b in [&l.opening, &l.inverse, &l.regularity] {
                    v.extend(bracket_lines(b));
                }
                v
            }
            Outcome::Theorem(t) => {
                let mut v = vec![format!("{}: conclusion {}", t.theorem, t.conclusion.verdict)];
                for h in &t.hypotheses {
                    v.push(format!("hypothesis {}: {}", h.name, h.verdict()));
                }
                for (n, s) in &t.predicted {
                    v.push(format!("predicted {n} = {s} ≈ {}", s.approx(12)));
                }
                for (n, c) in &t.checks {
                    v.push(format!("check {n}: {}", c.verdict));
                }
                if let Some(x) = &t.tightness {
                    v.extend(bracket_lines(&x.bracket));
                    if x.tight() {
                        v.push("tight".into());
                    }
                }
                if let Some(n) = &t.conclusion.note {
                    v.push(n.clone());
                }
                if let Some(w) = &t.conclusion.witness {
                    v.push(witness_line(t.conclusion.property, w));
                }
                v.extend(t.notes.iter().cloned());
                v
            }
            Outcome::Precondition(m) => vec![format!("not applicable: {m}")],
        }
    }
}

fn witness_line(property: Property, w: &crate::moduli::Witness) -> String {
    let vals: Vec<String> = w.values.iter().map(|(n, v)| format!("{n} = {v}")).collect();
    let mut s = format!("witness: {}", vals.join(", "));
    if !matches!(property, Property::SumStable | Property::Claim) {
        let _ = write!(s, " at rate {}", w.rate);
    }
    if let Some(n) = &w.note {
        let _ = write!(s, "; {n}");
    }
    s
}

fn cert_lines(c: &Certificate) -> Vec<String> {
    let mut v = Vec::new();
    if let Some(n) = &c.note {
        v.push(n.clone());
    }
    if let Some(w) = &c.witness {
        v.push(witness_line(c.property, w));
    }
    v
}

fn bracket_lines(b: &ModulusBracket) -> Vec<String> {
    vec![format!("{b}  ≈ [{}, {}]", b.lo.approx(12), b.hi.approx(12))]
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Ok,
    Mismatch,
    Undecided,
}

impl Status {
    fn name(self) -> &'static str {
        match self {
            Status::Ok => "ok",
            Status::Mismatch => "mismatch",
            Status::Undecided => "undecided",
        }
    }
}

#[derive(Clone, Debug)]
pub struct CheckResult {
    pub index: usize,
    pub op: String,
    pub label: String,
    pub seed: u64,
    pub expect: Option<Verdict>,
    pub outcome: Outcome,
    pub status: Status,
}

impl CheckResult {
    pub fn verdict(&self) -> Verdict {
        self.outcome.verdict()
    }

    fn to_json(&self) -> Value {
        json!({
            "index": self.index,
            "op": self.op,
            "label": self.label,
            "seed": self.seed.to_string(),
            "expect": self.expect.map(|e| e.to_string()),
            "verdict": self.verdict().to_string(),
            "status": self.status.name(),
            "result": self.outcome.to_json(),
        })
    }
}

fn status(v: Verdict, expect: Option<Verdict>, strict: bool) -> Status {
    match (expect, v) {
        (Some(e), v) if e == v => Status::Ok,
        (_, Verdict::Inconclusive) if expect.is_some() || !strict => Status::Undecided,
        (None, Verdict::Holds) => Status::Ok,
        _ => Status::Mismatch,
    }
}

#[derive(Clone, Debug)]
pub struct RunReport {
    pub flags: Flags,
    pub results: Vec<CheckResult>,
}

impl RunReport {
    pub fn count(&self, v: Verdict) -> usize {
        self.results.iter().filter(|r| r.verdict() == v).count()
    }

    pub fn exit_code(&self) -> i32 {
        if self.results.iter().any(|r| r.status == Status::Mismatch) {
            EXIT_MISMATCH
        } else if self.results.iter().any(|r| r.status == Status::Undecided) {
            EXIT_INCONCLUSIVE
        } else {
            EXIT_OK
        }
    }

    /// The machine report. Holds no timing, so equal inputs give equal bytes.
    pub fn to_json(&self) -> Value {
        json!({
            "settings": {
                "budget": self.flags.budget,
                "grid": self.flags.grid,
                "seed": self.flags.seed.to_string(),
                "expect_strict": self.flags.expect_strict,
            },
            "results": self.results.iter().map(|r| r.to_json()).collect::<Vec<_>>(),
            "summary": {
                "holds": self.count(Verdict::Holds),
                "fails": self.count(Verdict::Fails),
                "inconclusive": self.count(Verdict::Inconclusive),
                "mismatches": self.results.iter().filter(|r| r.status == Status::Mismatch).count(),
                "exit_code": self.exit_code(),
            },
        })
    }

    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_json()).expect("serializable");
        s.push('\n');
        s
    }

    pub fn to_text(&self) -> String {
        let f = &self.flags;
        let mut s = format!("budget {}, grid {}, seed {}\n", f.budget, f.grid, f.seed);
        for r in &self.results {
            let expect = r.expect.map(|e| format!(" (expected {e})")).unwrap_or_default();
            let _ = writeln!(s, "[{}] {}: {}{} {}", r.index, r.label, r.verdict(), expect, r.status.name());
            for line in r.outcome.detail() {
                let _ = writeln!(s, "    {line}");
            }
        }
        let _ = writeln!(
            s,
            "summary: {} holds, {} fails, {} inconclusive; exit {}",
            self.count(Verdict::Holds),
            self.count(Verdict::Fails),
            self.count(Verdict::Inconclusive),
            self.exit_code()
        );
        s
    }

    pub fn render(&self) -> String {
        match self.flags.format {
            Format::Json => self.to_json_string(),
            Format::Text => self.to_text(),
        }
    }
}

struct Prepared {
    op: Op,
    name: String,
    label: String,
    expect: Option<Verdict>,
    maps: HashMap<String, MapHandle>,
}

/// Parse every check and resolve every map before anything runs.
fn prepare(sc: &Scenario) -> Result<Vec<Prepared>, CliError> {
    let mut res = Resolver::new(&sc.maps);
    for name in sc.maps.keys() {
        res.get(name)?;
    }
    let mut out = Vec::new();
    for (i, c) in sc.checks.iter().enumerate() {
        let at = format!("checks[{i}]");
        let op = Op::parse(&c.op, &c.args, &at)?;
        let mut maps = HashMap::new();
        for n in op.maps() {
            let m = res.get(n).map_err(|e| CliError::usage(format!("{at}: {e}")))?;
            maps.insert(n.to_string(), m);
        }
        let label = c.label.clone().unwrap_or_else(|| op.describe());
        out.push(Prepared { op, name: c.op.clone(), label, expect: c.expect, maps });
    }
    Ok(out)
}

fn theorem(r: Result<TheoremReport, TheoremError>) -> Result<Outcome, CliError> {
    match r {
        Ok(t) => Ok(Outcome::Theorem(t)),
        Err(TheoremError::Precondition(m)) => Ok(Outcome::Precondition(m)),
        Err(e) => Err(CliError::usage(e.to_string())),
    }
}

fn checked<T>(r: Result<T, CheckError>) -> Result<T, CliError> {
    r.map_err(|e| CliError::usage(e.to_string()))
}

fn theorem_cert(r: Result<Certificate, TheoremError>) -> Result<Outcome, CliError> {
    match r {
        Ok(c) => Ok(Outcome::Certificate(c)),
        Err(TheoremError::Precondition(m)) => Ok(Outcome::Precondition(m)),
        Err(e) => Err(CliError::usage(e.to_string())),
    }
}

fn execute(p: &Prepared, opts: &Opts) -> Result<Outcome, CliError> {
    let m = |n: &str| p.maps[n].clone();
    let radius = |r: &Option<Scalar>| r.clone().unwrap_or_else(Scalar::one);
    match &p.op {
        Op::Check(a) => {
            let property: Property = a.property.parse().map_err(CliError::Usage)?;
            let rate: RateSpec = a.rate.parse().map_err(CliError::Usage)?;
            let w = a.window.as_ref().map(|w| w.spec()).unwrap_or(WindowSpec::Concrete(Window::default()));
            checked(check(&m(&a.map), &point(&a.point)?, property, a.moving, &rate, &w, opts)).map(Outcome::Certificate)
        }
        Op::Isc(a) => {
            checked(check_isc(&m(&a.map), &point(&a.point)?, &a.eps, a.delta.as_ref(), opts)).map(Outcome::Certificate)
        }
        Op::Estimate(a) => {
            let kind: Kind = a.kind.parse().map_err(CliError::Usage)?;
            checked(estimate_modulus(&m(&a.map), &point(&a.point)?, kind, &concrete(&a.window)?, opts)).map(Outcome::Bracket)
        }
        Op::LinkAround(a) => {
            checked(verify_link_around(&m(&a.map), &point(&a.point)?, &concrete(&a.window)?, opts)).map(Outcome::Link)
        }
        Op::LinkAt(a) => checked(verify_link_at(&m(&a.map), &point(&a.point)?, &concrete(&a.window)?, opts)).map(Outcome::Link),
        Op::SumStability(a) => {
            let eps = a.eps.clone().unwrap_or_else(|| Scalar::frac(1, 2));
            theorem_cert(check_sum_stability(&m(&a.f), &m(&a.g), &sum_point(&a.point)?, &eps, opts))
        }
        Op::LocalSumStability(a) => theorem_cert(check_local_sum_stability(&m(&a.f), &m(&a.g), &sum_point(&a.point)?, opts)),
        Op::LipSum(a) => theorem(verify_lip_sum(&m(&a.f), &m(&a.g), &sum_point(&a.point)?, &concrete(&a.window)?, opts)),
        Op::RegSolutionBound(a) => {
            theorem(verify_reg_solution_bound(&m(&a.f), &m(&a.g), &point(&a.point)?, &concrete(&a.window)?, opts))
        }
        Op::LipSolutionBound(a) => {
            theorem(verify_lip_solution_bound(&m(&a.f), &m(&a.g), &point(&a.point)?, &concrete(&a.window)?, opts))
        }
        Op::DifferenceOpenness(a) => theorem(verify_difference_openness(
            &m(&a.f),
            &m(&a.g),
            &a.x,
            &a.y,
            &a.z,
            &a.l,
            &a.m,
            &DiffRadii::uniform(radius(&a.radius)),
            a.depth.unwrap_or(6),
            opts,
        )),
        Op::MultiDifferenceOpenness(a) => {
            let gs: Vec<MapHandle> = a.gs.iter().map(|n| m(n)).collect();
            theorem(verify_multi_difference_openness(&m(&a.f), &gs, &a.x, &a.y, &a.zs, &a.l, &a.ms, &radius(&a.radius), opts))
        }
        Op::Graves(a) => theorem(verify_graves_corollary(
            &m(&a.f),
            &m(&a.g),
            &a.x,
            &a.z,
            &a.l,
            &a.m,
            &a.lip,
            &DiffRadii::uniform(radius(&a.radius)),
            opts,
        )),
        Op::PartialOpenness(a) => {
            theorem(verify_partial_openness_bound(&m(&a.f), &a.a, &a.alpha, &point(&a.point)?, &concrete(&a.window)?, opts))
        }
        Op::Implicit(a) => {
            let mode = match a.mode {
                Some(ModeArg::POpen) => ImplicitMode::POpen,
                _ => ImplicitMode::XOpen,
            };
            theorem(verify_implicit_inequalities(
                &m(&a.h),
                &point(&a.point)?,
                mode,
                &a.c,
                &concrete(&a.window)?,
                a.grid.unwrap_or(4),
                opts,
            ))
        }
        Op::Gamma(a) => {
            let d = GammaData {
                f: m(&a.f),
                g: m(&a.g),
                x: a.x.clone(),
                y: a.y.clone(),
                w: a.w.clone(),
                eta: a.eta.clone(),
                k: a.k.clone(),
                lambda: a.lambda.clone(),
                alpha: a.alpha.clone(),
                grid: a.grid.unwrap_or(4),
            };
            theorem(verify_gamma_aubin(&d, opts))
        }
    }
}

/// Run a parsed scenario under the effective `flags`.
pub fn run_scenario(sc: &Scenario, flags: Flags) -> Result<RunReport, CliError> {
    let prepared = prepare(sc)?;
    let results: Vec<Result<CheckResult, CliError>> = prepared
        .par_iter()
        .enumerate()
        .map(|(i, p)| {
            let seed = check_seed(flags.seed, i);
            let opts = Opts { budget: flags.budget, grid: flags.grid, seed };
            let outcome = execute(p, &opts).map_err(|e| match e {
                CliError::Usage(m) => CliError::Usage(format!("checks[{i}]: {m}")),
                e => e,
            })?;
            let status = status(outcome.verdict(), p.expect, flags.expect_strict);
            Ok(CheckResult {
                index: i,
                op: p.name.clone(),
                label: p.label.clone(),
                seed,
                expect: p.expect,
                outcome,
                status,
            })
        })
        .collect();
    let results = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    Ok(RunReport { flags, results })
}

/// Parse and run a scenario document; command-line flags override its settings.
pub fn run_text(text: &str, over: &FlagArgs) -> Result<RunReport, CliError> {
    let sc = parse_scenario(text)?;
    let flags = over.over(&sc.settings);
    run_scenario(&sc, flags)
}

/// Curated scenarios for the library examples.
pub const BUNDLES: [(&str, &str); 4] = [
    ("abs_pair", include_str!("../bundles/abs_pair.json")),
    ("jump_pair", include_str!("../bundles/jump_pair.json")),
    ("rat_tail_pair", include_str!("../bundles/rat_tail_pair.json")),
    ("shelf_pair", include_str!("../bundles/shelf_pair.json")),
];

pub fn bundle(name: &str) -> Option<&'static str> {
    let key = name.replace('-', "_");
    BUNDLES.iter().find(|(n, _)| *n == key).map(|(_, t)| *t)
}

pub fn check_builtin_example(name: &str, over: &FlagArgs) -> Result<RunReport, CliError> {
    let text = bundle(name).ok_or_else(|| {
        let names: Vec<&str> = BUNDLES.iter().map(|(n, _)| *n).collect();
        CliError::usage(format!("unknown bundle '{name}' (known: {})", names.join(", ")))
    })?;
    run_text(text, over)
}

/// Coordinates `s,s[,s]` of a point.
pub fn parse_point(text: &str) -> Result<Vec<Scalar>, CliError> {
    let t = text.trim().trim_start_matches('(').trim_end_matches(')');
    t.split(',')
        .map(|c| c.trim().parse::<Scalar>().map_err(|e| CliError::usage(format!("bad coordinate '{c}': {e}"))))
        .collect()
}

/// Bracket one modulus of a library or inline map.
pub fn estimate(map: &str, pt: &str, kind: &str, radius: Option<&Scalar>, over: &FlagArgs) -> Result<RunReport, CliError> {
    let handle = map_from_text(map)?;
    let coords = parse_point(pt)?;
    let k: Kind = kind.parse().map_err(CliError::Usage)?;
    let window = radius.map(|r| WindowArg::Radius(r.clone()));
    let label = format!("{k} {} at ({})", handle.label(), join(&coords));
    let p = Prepared {
        op: Op::Estimate(EstimateArgs { map: "m".into(), point: coords, kind: k.name().into(), window }),
        name: "estimate".into(),
        label,
        expect: None,
        maps: HashMap::from([("m".to_string(), handle)]),
    };
    let flags = over.over(&Settings::default());
    let seed = check_seed(flags.seed, 0);
    let outcome = execute(&p, &Opts { budget: flags.budget, grid: flags.grid, seed })?;
    let status = status(outcome.verdict(), None, flags.expect_strict);
    let r = CheckResult { index: 0, op: p.name, label: p.label, seed, expect: None, outcome, status };
    Ok(RunReport { flags, results: vec![r] })
}

#[derive(Debug, Parser)]
#[command(name = "regmod", version, about = "Exact regularity moduli of one-dimensional set-valued maps")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a scenario file.
    Run {
        path: std::path::PathBuf,
        #[command(flatten)]
        flags: FlagArgs,
    },
    /// Run a curated example bundle.
    Example {
        bundle: String,
        #[command(flatten)]
        flags: FlagArgs,
    },
    /// Bracket one modulus at one point.
    Estimate {
        /// Library name or inline JSON map.
        #[arg(long)]
        map: String,
        /// Coordinates x,y or x,p,y.
        #[arg(long, allow_hyphen_values = true)]
        point: String,
        /// lop, lip, reg, plop, psdclm, hemreg, lop_x, lip_x, reg_x, lop_p, lip_p or reg_p.
        #[arg(long)]
        kind: String,
        /// Uniform window radius (default 1/2).
        #[arg(long)]
        radius: Option<Scalar>,
        #[command(flatten)]
        flags: FlagArgs,
    },
}

/// Entry point shared by the binary and the tests; returns the exit code.
pub fn main_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return code;
        }
    };
    let report = match &cli.command {
        Command::Run { path, flags } => std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
            .and_then(|t| run_text(&t, flags)),
        Command::Example { bundle, flags } => check_builtin_example(bundle, flags),
        Command::Estimate { map, point, kind, radius, flags } => estimate(map, point, kind, radius.as_ref(), flags),
    };
    match report {
        Ok(r) => {
            let _ = out.write_all(r.render().as_bytes());
            r.exit_code()
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_USAGE
        }
    }
}
