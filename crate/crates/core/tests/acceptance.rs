//! One pass/fail line per acceptance criterion.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use regmod::cli::{run_text, FlagArgs};
use regmod::exactnum::{parse_scalar, ExtScalar, Scalar};
use regmod::mfn::builtin::{all_names, reference_points, RatTailSeq};
use regmod::mfn::pamap::{Affine, Exceptional, FiberMode, PaMap, ParamAffine, ParamMap, ParamPiece, Piece};
use regmod::mfn::MapHandle;
use regmod::moduli::replay::replay_witness;
use regmod::moduli::*;
use regmod::rset::{Cell, RSet};
use regmod::theorems::*;

type Outcome = Result<String, String>;

fn s(t: &str) -> Scalar {
    parse_scalar(t).unwrap()
}

fn fin(t: &str) -> ExtScalar {
    ExtScalar::Finite(s(t))
}

fn map(name: &str) -> MapHandle {
    MapHandle::builtin(name).unwrap()
}

fn pa(ax: &str, ap: &str, b: &str) -> ParamAffine {
    ParamAffine::new(s(ax), s(ap), s(b))
}

fn param(label: &str, lo: ParamAffine, hi: ParamAffine) -> MapHandle {
    MapHandle::from_param(label, &ParamMap::uniform(lo, hi))
}

fn o() -> Opts {
    Opts::default()
}

fn ensure(ok: bool, what: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(what.into())
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn point_of(b: &ModulusBracket, v: &str) -> bool {
    b.lo == fin(v) && b.hi == fin(v)
}

fn linkage(at_point: bool) -> Outcome {
    let w = Window::default();
    let mut n = 0;
    for name in all_names() {
        for (x, y) in reference_points(name) {
            let pt = Point::new(x, y);
            let r = if at_point { verify_link_at(&map(name), &pt, &w, &o()) } else { verify_link_around(&map(name), &pt, &w, &o()) }
                .map_err(err)?;
            ensure(r.consistent, format!("{name} at ({}): {} / {} / {}", pt.describe(), r.opening, r.inverse, r.regularity))?;
            n += 1;
        }
    }
    Ok(format!("{n} library points consistent"))
}

fn criterion_1() -> Outcome {
    let summary = linkage(false)?;
    let w = Window::default();
    let r = verify_link_around(&map("linear_2x"), &Point::new(s("0"), s("0")), &w, &o()).map_err(err)?;
    ensure(
        point_of(&r.opening, "2") && point_of(&r.regularity, "1/2") && point_of(&r.inverse, "1/2"),
        format!("linear_2x: {} {} {}", r.opening, r.regularity, r.inverse),
    )?;
    let r = verify_link_around(&map("abs_interval"), &Point::new(s("1"), s("1")), &w, &o()).map_err(err)?;
    ensure(
        point_of(&r.opening, "1") && point_of(&r.regularity, "1") && point_of(&r.inverse, "1"),
        format!("abs_interval (1,1): {} {} {}", r.opening, r.regularity, r.inverse),
    )?;
    Ok(format!("{summary}; linear_2x lop=2 reg=1/2 lip inv=1/2; abs_interval(1,1) 1,1,1"))
}

fn criterion_2() -> Outcome {
    let summary = linkage(true)?;
    let w = Window::default();
    for (name, a) in [("identity", "1"), ("linear_2x", "2"), ("linear_3x", "3"), ("neg_linear_2x", "2")] {
        let r = verify_link_at(&map(name), &Point::new(s("0"), s("0")), &w, &o()).map_err(err)?;
        let inv = (&Scalar::one()).checked_div(&s(a)).unwrap().to_string();
        ensure(
            point_of(&r.opening, a) && point_of(&r.regularity, &inv) && point_of(&r.inverse, &inv),
            format!("{name}: {} {} {}", r.opening, r.regularity, r.inverse),
        )?;
    }
    Ok(format!("{summary}; exact plop/psdclm/hemreg on four linear maps"))
}

fn criterion_3() -> Outcome {
    let radii = DiffRadii::uniform(s("1"));
    let eps = radii.epsilon(&s("2"), &s("1"));
    ensure(eps == s("1/2"), format!("epsilon {eps}"))?;
    let z = s("0");
    let r = verify_difference_openness(&map("linear_2x"), &map("identity"), &z, &z, &z, &s("2"), &s("1"), &radii, 10, &o())
        .map_err(err)?;
    ensure(r.hypotheses_hold(), "hypotheses not certified")?;
    ensure(r.predicted("rate") == Some(&s("1")), "rate prediction")?;
    ensure(r.predicted("epsilon") == Some(&s("1/2")), "epsilon prediction")?;
    ensure(r.conclusion.holds() && r.conclusion.evidence.is_proof(), "conclusion")?;
    ensure(r.check("rho_grid").map(|c| c.holds()).unwrap_or(false), "rho grid")?;
    ensure(r.check("moreover").map(|c| c.holds()).unwrap_or(false), "moreover clause")?;
    for rho in dyadic_grid(&eps, 10) {
        let c = check(
            &MapHandle::diff_map(&map("linear_2x"), &map("identity")).map_err(err)?,
            &Point::new(z.clone(), z.clone()),
            Property::Open,
            None,
            &RateSpec::Value(s("1")),
            &WindowSpec::Concrete(Window::uniform(rho.clone())),
            &o(),
        )
        .map_err(err)?;
        ensure(c.holds() && c.evidence.is_proof(), format!("rate 1 at rho = {rho}"))?;
    }
    Ok("eps = 1/2, rate 1 certified exactly for rho = 2^-k/2, k = 1..10".into())
}

fn kinked() -> MapHandle {
    let right = ParamPiece::closed(Cell::real_line(), Cell::from(s("0"), false), pa("0", "7/2", "0"), pa("0", "7/2", "0"));
    let left = ParamPiece::closed(Cell::real_line(), Cell::upto(s("0"), true), pa("0", "5/2", "0"), pa("0", "5/2", "0"));
    MapHandle::from_param("kinked", &ParamMap::new(vec![right, left]).unwrap())
}

fn criterion_4() -> Outcome {
    let z = s("0");
    let r = verify_graves_corollary(&map("linear_2x"), &map("identity"), &z, &z, &s("2"), &s("1"), &s("2"), &DiffRadii::uniform(s("1")), &o())
        .map_err(err)?;
    ensure(r.predicted("epsilon") == Some(&s("1/2")), "epsilon")?;
    ensure(r.predicted("gamma") == Some(&s("1/16")), format!("gamma {:?}", r.predicted("gamma").map(|g| g.to_string())))?;
    ensure(r.hypotheses_hold() && r.conclusion.holds(), "graves conclusion")?;
    let pt = Point::param(z.clone(), z.clone(), z.clone());
    let r = verify_partial_openness_bound(&kinked(), &[s("3")], &s("1/2"), &pt, &Window::default(), &o()).map_err(err)?;
    ensure(r.hypotheses_hold() && r.conclusion.holds(), "partial openness conclusion")?;
    ensure(r.predicted("lop_p_lower") == Some(&s("5/2")), "lop_p lower bound")?;
    ensure(r.predicted("reg_p_upper") == Some(&s("2/5")), "reg_p upper bound")?;
    ensure(r.check("reg_p_bound").map(|c| c.holds()).unwrap_or(false), "reg_p bound check")?;
    let b = &r.tightness.as_ref().ok_or("no bracket")?.bracket;
    ensure(b.contains(&s("5/2")) && b.width() <= ExtScalar::Finite(Scalar::pow2(-20)), format!("bracket {b}"))?;
    Ok(format!("gamma = 1/16; lop_p >= 5/2 with {b}; reg_p <= 2/5"))
}

fn criterion_5() -> Outcome {
    let pt = Point::param(s("0"), s("0"), s("0"));
    let w = Window::default();
    let cases = [
        (param("H1", pa("1", "-1", "0"), pa("1", "-1", "0")), ImplicitMode::XOpen, "1", None),
        (param("H2", pa("-1", "1", "-1"), pa("-1", "1", "1")), ImplicitMode::POpen, "1", Some(("reg_S", "1"))),
        (param("H3", pa("-3/2", "1", "0"), pa("-3/2", "1", "1")), ImplicitMode::XOpen, "3/2", Some(("lip_S", "2/3"))),
    ];
    let mut out = Vec::new();
    for (h, mode, c, want) in cases {
        let r = verify_implicit_inequalities(&h, &pt, mode, &s(c), &w, 4, &o()).map_err(err)?;
        ensure(r.hypotheses_hold() && r.conclusion.holds(), format!("{}: conclusion", h.label()))?;
        let pw = r.check("pointwise").ok_or("no pointwise check")?;
        ensure(pw.holds() && matches!(pw.evidence, Evidence::Sampled { .. }), format!("{}: pointwise inequality", h.label()))?;
        if let Some((name, v)) = want {
            ensure(r.predicted(name) == Some(&s(v)), format!("{}: predicted {name}", h.label()))?;
            let t = r.tightness.as_ref().ok_or("no bracket")?;
            ensure(t.tight(), format!("{}: bracket {}", h.label(), t.bracket))?;
            out.push(format!("{name} = {v} <= {v}"));
        }
    }
    Ok(format!("pointwise inequalities exact on three instances; {}", out.join("; ")))
}

fn criterion_6() -> Outcome {
    let (f, g) = (map("jump_two"), map("neg_jump_two"));
    let sp = SumPoint::new(s("1"), s("2"), s("-2"));
    let c = check_sum_stability(&f, &g, &sp, &s("1/2"), &o()).map_err(err)?;
    ensure(c.fails(), "jump pair did not fail")?;
    let w = c.witness.as_ref().ok_or("no jump witness")?;
    ensure(w.get("w") == Some(&s("0")), "jump witness w != 0")?;
    ensure(replay_sum_stability(&f, &g, &sp, &c), "jump witness does not replay")?;

    let (f, g) = (map("rat_tail"), map("rat_tail_seq"));
    let sp = SumPoint::new(s("1"), s("1"), s("-1"));
    let c = check_sum_stability(&f, &g, &sp, &s("1/2"), &o()).map_err(err)?;
    ensure(c.fails(), "rat pair did not fail")?;
    let w = c.witness.as_ref().ok_or("no rat witness")?;
    let n = RatTailSeq::index_of(w.get("x").ok_or("no x")?).ok_or("x is not a sequence point")?;
    let wn = Scalar::sqrt2().checked_div(&Scalar::int(n as i64)).unwrap();
    ensure(w.get("w") == Some(&wn), "w is not sqrt2/n")?;
    ensure(!wn.is_rational(), "w_n rational")?;
    let note = w.note.clone().unwrap_or_default();
    ensure(note.contains("is_rational") && note.contains("√2/n"), format!("note: {note}"))?;
    ensure(replay_sum_stability(&f, &g, &sp, &c), "rat witness does not replay")?;

    let (f, g) = (map("unit_shelf"), map("const_12"));
    let sp = SumPoint::new(s("1"), s("1"), s("1"));
    let r = verify_lip_sum(&f, &g, &sp, &Window::default(), &o()).map_err(err)?;
    ensure(r.hypothesis("(F, G) locally sum-stable").map(|h| h.verdict()) == Some(Verdict::Fails), "shelf hypothesis")?;
    let ob = r.check("obstruction").ok_or("no obstruction check")?;
    ensure(ob.fails() && r.conclusion.fails(), "shelf obstruction")?;
    ensure(ob.note.as_deref().unwrap_or("").contains("α ≤ Lα²"), "obstruction note")?;
    let sum = MapHandle::sum_maps(&f, &g).map_err(err)?;
    let wit = ob.witness.as_ref().ok_or("no obstruction witness")?;
    ensure(replay_witness(&sum, &Point::new(s("1"), s("2")), Property::LipschitzLike, None, wit), "obstruction replay")?;
    ensure(r.sound(), "shelf report unsound")?;
    Ok(format!("jump w = 0; rat w_n = √2/{n} (irrational); shelf alpha <= L alpha^2 obstruction replays"))
}

fn criterion_7() -> Outcome {
    let z = s("0");
    let sp = SumPoint::new(z.clone(), z.clone(), z.clone());
    let r = verify_lip_sum(&map("abs_interval"), &map("abs_interval"), &sp, &Window::default(), &o()).map_err(err)?;
    ensure(r.hypotheses_hold() && r.conclusion.holds(), "lip-sum conclusion")?;
    ensure(r.predicted("lip_sum") == Some(&s("2")), "prediction 1 + 1")?;
    let t = r.tightness.as_ref().ok_or("no bracket")?;
    ensure(t.tight() && point_of(&t.bracket, "2"), format!("bracket {}", t.bracket))?;
    Ok("lip(F + G) in [2, 2] <= 1 + 1".into())
}

fn criterion_8() -> Outcome {
    let pt = Point::param(s("0"), s("0"), s("0"));
    let w = Window::default();
    let g = map("neg_linear_2x");
    let f = param("F", pa("1", "1", "-1"), pa("1", "1", "1"));
    let r = verify_reg_solution_bound(&f, &g, &pt, &w, &o()).map_err(err)?;
    ensure(r.hypotheses_hold() && r.conclusion.holds(), "reg S conclusion")?;
    ensure(r.predicted("reg_S") == Some(&s("3")), "reg S prediction")?;
    let b = &r.tightness.as_ref().ok_or("no bracket")?.bracket;
    ensure(point_of(b, "1"), format!("reg S bracket {b}"))?;

    let f = param("F", pa("1/2", "1", "0"), pa("1/2", "1", "1"));
    let r = verify_lip_solution_bound(&f, &g, &pt, &w, &o()).map_err(err)?;
    ensure(r.hypotheses_hold() && r.conclusion.holds(), "lip S conclusion")?;
    ensure(r.predicted("lip_S") == Some(&s("2/3")), "lip S prediction")?;
    let t = r.tightness.as_ref().ok_or("no bracket")?;
    ensure(t.tight(), format!("lip S bracket {}", t.bracket))?;
    let h = r.hypothesis("(vii) lip_x F · reg G < 1").ok_or("no product hypothesis")?;
    let note = match &h.backing {
        Backing::Certificate(c) => c.note.clone().unwrap_or_default(),
        Backing::Bracket(_) => String::new(),
    };
    ensure(h.verdict() == Verdict::Holds && note.contains("= 1/4 < 1"), format!("product: {note}"))?;
    Ok("reg S in [1, 1] <= 3; lip S in [2/3, 2/3] <= 2/3; 1/2 · 1/2 = 1/4 < 1".into())
}

const SLOPES: [&str; 8] = ["-2", "-1", "-1/2", "0", "1/2", "1", "2", "3"];
const OFFSETS: [&str; 7] = ["-1", "-1/2", "0", "1/4", "1/2", "1", "2"];
const WIDTHS: [&str; 4] = ["0", "0", "1/2", "1"];

fn pick<'a>(rng: &mut ChaCha8Rng, v: &[&'a str]) -> Scalar {
    s(v[rng.gen_range(0..v.len())])
}

/// A random piecewise-affine map with one or two pieces and an optional exceptional fiber.
fn random_pamap(rng: &mut ChaCha8Rng) -> PaMap {
    let k = rng.gen_range(0..2);
    let mut cuts: Vec<Scalar> = (0..k).map(|_| pick(rng, &OFFSETS)).collect();
    cuts.sort();
    cuts.dedup();
    let mut cells = Vec::new();
    let mut closed_left = rng.gen_bool(0.5);
    match cuts.len() {
        0 => cells.push(Cell::real_line()),
        _ => {
            cells.push(Cell::upto(cuts[0].clone(), !closed_left));
            for pair in cuts.windows(2) {
                let hi_closed = rng.gen_bool(0.5);
                let c = match (closed_left, hi_closed) {
                    (true, true) => Cell::closed(pair[0].clone(), pair[1].clone()),
                    (true, false) => Cell::closed_open(pair[0].clone(), pair[1].clone()),
                    (false, true) => Cell::open_closed(pair[0].clone(), pair[1].clone()),
                    (false, false) => Cell::open(pair[0].clone(), pair[1].clone()),
                };
                cells.push(c);
                closed_left = !hi_closed;
            }
            cells.push(Cell::from(cuts.last().unwrap().clone(), closed_left));
        }
    }
    let pieces = cells
        .into_iter()
        .map(|dom| {
            let lower = Affine::new(pick(rng, &SLOPES), pick(rng, &OFFSETS));
            let width = if rng.gen_bool(0.1) { None } else { Some(pick(rng, &WIDTHS)) };
            // A zero-width piece needs both ends closed to be nonempty.
            let upper_closed = width.as_ref().map_or(false, |w| w.is_zero()) || rng.gen_bool(0.8);
            let upper = width.map(|w| Affine::new(lower.a.clone(), &lower.b + &w));
            Piece { dom, lower: Some(lower), upper, lower_closed: true, upper_closed, dense: false }
        })
        .collect();
    let exceptional = if rng.gen_bool(0.25) {
        let mode = if rng.gen_bool(0.5) { FiberMode::Add } else { FiberMode::Replace };
        vec![Exceptional { x: pick(rng, &OFFSETS), set: RSet::point(pick(rng, &OFFSETS)), mode }]
    } else {
        vec![]
    };
    PaMap::new(pieces, exceptional).expect("generated pieces are disjoint")
}

fn member(m: &MapHandle, x: &Scalar) -> Option<Scalar> {
    m.fiber(std::slice::from_ref(x)).set.sample_members().into_iter().next()
}

/// Reports produced and unsound reports, for one random instance.
fn sweep_one(seed: u64) -> (usize, usize, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let f = MapHandle::from_pamap(format!("F{seed}"), &random_pamap(&mut rng));
    let g = MapHandle::from_pamap(format!("G{seed}"), &random_pamap(&mut rng));
    let opts = Opts { budget: 6, grid: 6, seed };
    let mut reports = Vec::new();
    let base = (0..4).find_map(|_| {
        let x = pick(&mut rng, &OFFSETS);
        Some((member(&f, &x)?, member(&g, &x)?, x))
    });
    if let Some((y, z, x)) = base {
        if let Ok(r) = verify_lip_sum(&f, &g, &SumPoint::new(x.clone(), y, z), &Window::default(), &opts) {
            reports.push(r);
        }
    }
    let diff_base = (0..4).find_map(|_| {
        let zb = pick(&mut rng, &OFFSETS);
        let xb = member(&g, &zb)?;
        Some((member(&f, &xb)?, xb, zb))
    });
    if let Some((yb, xb, zb)) = diff_base {
        let l = pick(&mut rng, &["3/2", "2", "3"]);
        let m = pick(&mut rng, &["1", "2"]);
        if let Ok(r) = verify_difference_openness(&f, &g, &xb, &yb, &zb, &l, &m, &DiffRadii::uniform(s("1")), 2, &opts) {
            reports.push(r);
        }
    }
    let certified = reports.iter().filter(|r| r.hypotheses_hold()).count();
    let unsound = reports.iter().filter(|r| !r.sound()).count();
    (reports.len(), certified, unsound)
}

fn criterion_9() -> Outcome {
    let instances = 108u64;
    let results: Vec<(usize, usize, usize)> = (0..instances).into_par_iter().map(sweep_one).collect();
    let reports: usize = results.iter().map(|r| r.0).sum();
    let certified: usize = results.iter().map(|r| r.1).sum();
    let unsound: usize = results.iter().map(|r| r.2).sum();
    let with_report = results.iter().filter(|r| r.0 > 0).count();
    ensure(unsound == 0, format!("{unsound} reports with certified hypotheses and a refuted conclusion"))?;
    ensure(with_report >= 100, format!("only {with_report} instances produced a report"))?;
    Ok(format!("{instances} random instance pairs, {with_report} verified, {reports} reports, {certified} with certified hypotheses, 0 unsound"))
}

fn criterion_10() -> Outcome {
    let scenario = include_str!("../scenarios/sum_stability.json");
    let flags = FlagArgs { seed: Some(42), ..FlagArgs::default() };
    let a = run_text(scenario, &flags).map_err(err)?.to_json_string();
    let b = run_text(scenario, &flags).map_err(err)?.to_json_string();
    ensure(a == b, "sum-stability scenario reports differ")?;
    for (name, text) in regmod::cli::BUNDLES {
        let a = run_text(text, &flags).map_err(err)?.to_json_string();
        let b = run_text(text, &flags).map_err(err)?.to_json_string();
        ensure(a == b, format!("{name} reports differ"))?;
    }
    Ok(format!("identical bytes for 1 scenario and {} bundles under seed 42", regmod::cli::BUNDLES.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("linkage around", criterion_1),
        ("linkage at a point", criterion_2),
        ("difference openness", criterion_3),
        ("graves and partial openness", criterion_4),
        ("implicit multifunction", criterion_5),
        ("sum-stability counterexamples", criterion_6),
        ("lip-sum", criterion_7),
        ("solution-map bounds", criterion_8),
        ("soundness sweep", criterion_9),
        ("determinism", criterion_10),
    ];
    let start = Instant::now();
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let r = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        let secs = t.elapsed().as_secs_f64();
        match r {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail} ({secs:.1}s)", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {why} ({secs:.1}s)", i + 1);
            }
        }
    }
    let total = start.elapsed().as_secs_f64();
    println!("acceptance: {} of {} criteria pass in {total:.1}s", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
