use regmod::exactnum::{parse_scalar, ExtScalar, Scalar};
use regmod::mfn::builtin::RatTailSeq;
use regmod::mfn::pamap::{Affine, PaMap, ParamAffine, ParamMap, ParamPiece, Piece};
use regmod::mfn::MapHandle;
use regmod::moduli::*;
use regmod::rset::Cell;
use regmod::theorems::*;

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

fn line(label: &str, a: &str) -> MapHandle {
    let f = Affine::new(s(a), s("0"));
    MapHandle::from_pamap(label, &PaMap::new(vec![Piece::closed(Cell::real_line(), f.clone(), f)], vec![]).unwrap())
}

fn o() -> Opts {
    Opts::default()
}

fn precondition<T: std::fmt::Debug>(r: Result<T, TheoremError>) -> bool {
    matches!(r, Err(TheoremError::Precondition(_)))
}

#[test]
fn difference_openness_linear() {
    let radii = DiffRadii::uniform(s("1"));
    assert_eq!(radii.epsilon(&s("2"), &s("1")), s("1/2"));
    let z = s("0");
    let r = verify_difference_openness(&map("linear_2x"), &map("identity"), &z, &z, &z, &s("2"), &s("1"), &radii, 8, &o())
        .unwrap();
    assert!(r.hypotheses_hold(), "{:#}", r.to_json());
    assert!(r.conclusion.holds());
    assert!(r.check("rho_grid").unwrap().holds());
    assert!(r.check("moreover").unwrap().holds());
    assert!(r.tightness.as_ref().unwrap().tight());
    assert!(r.sound());
    let bad = verify_difference_openness(&map("linear_2x"), &map("identity"), &z, &z, &z, &s("1"), &s("1"), &radii, 8, &o());
    assert!(precondition(bad));
}

#[test]
fn multi_difference() {
    let z = s("0");
    let ids = [map("identity"), map("identity")];
    let r = verify_multi_difference_openness(&map("linear_3x"), &ids, &z, &z, &[z.clone(), z.clone()], &s("3"), &[s("1"), s("1")], &s("1"), &o())
        .unwrap();
    assert!(r.hypotheses_hold());
    assert!(r.conclusion.holds());
    assert_eq!(r.predicted("rate"), Some(&s("1")));
    let bad = verify_multi_difference_openness(&map("linear_2x"), &ids, &z, &z, &[z.clone(), z.clone()], &s("2"), &[s("1"), s("1")], &s("1"), &o());
    assert!(precondition(bad));
    let one = verify_multi_difference_openness(&map("linear_2x"), &ids[..1], &z, &z, &[z.clone()], &s("2"), &[s("1")], &s("1"), &o())
        .unwrap();
    let two = verify_difference_openness(&map("linear_2x"), &map("identity"), &z, &z, &z, &s("2"), &s("1"), &DiffRadii::uniform(s("1")), 4, &o())
        .unwrap();
    assert_eq!(one.conclusion.verdict, two.conclusion.verdict);
    assert_eq!(one.predicted("rate"), two.predicted("rate"));
}

#[test]
fn graves_gamma() {
    // ε = 1/2 from unit radii, l = 2.
    let z = s("0");
    let radii = DiffRadii::uniform(s("1"));
    let r = verify_graves_corollary(&map("linear_2x"), &map("identity"), &z, &z, &s("2"), &s("1"), &s("2"), &radii, &o()).unwrap();
    assert_eq!(r.predicted("gamma"), Some(&s("1/16")));
    assert!(r.hypotheses_hold(), "{:#}", r.to_json());
    assert!(r.conclusion.holds());
    let bad = verify_graves_corollary(&map("abs_interval"), &map("identity"), &z, &z, &s("2"), &s("1"), &s("2"), &radii, &o());
    assert!(precondition(bad));
}

fn kinked() -> MapHandle {
    // f(x, p) = 3p + |p|/2
    let right = ParamPiece::closed(Cell::real_line(), Cell::from(s("0"), false), pa("0", "7/2", "0"), pa("0", "7/2", "0"));
    let left = ParamPiece::closed(Cell::real_line(), Cell::upto(s("0"), true), pa("0", "5/2", "0"), pa("0", "5/2", "0"));
    MapHandle::from_param("kinked", &ParamMap::new(vec![right, left]).unwrap())
}

#[test]
fn partial_openness() {
    assert_eq!(diagonal_lop(&[s("3"), s("-2")]).unwrap(), s("2"));
    assert!(precondition(diagonal_lop(&[s("3"), s("0")])));
    let pt = Point::param(s("0"), s("0"), s("0"));
    let w = Window::default();
    let r = verify_partial_openness_bound(&kinked(), &[s("3")], &s("1/2"), &pt, &w, &o()).unwrap();
    assert!(r.hypotheses_hold(), "{:#}", r.to_json());
    assert!(r.conclusion.holds());
    assert_eq!(r.predicted("lop_p_lower"), Some(&s("5/2")));
    assert_eq!(r.predicted("reg_p_upper"), Some(&s("2/5")));
    assert!(r.check("reg_p_bound").unwrap().holds());
    let b = &r.tightness.as_ref().unwrap().bracket;
    assert!(b.lo <= fin("5/2") && fin("5/2") <= b.hi, "{b}");
    assert!(b.width() <= fin("1/1048576"), "{b}");
    assert!(precondition(verify_partial_openness_bound(&kinked(), &[s("3")], &s("3"), &pt, &w, &o())));
}

#[test]
fn implicit_instances() {
    let pt = Point::param(s("0"), s("0"), s("0"));
    let w = Window::default();
    let h1 = param("H1", pa("1", "-1", "0"), pa("1", "-1", "0"));
    let r = verify_implicit_inequalities(&h1, &pt, ImplicitMode::XOpen, &s("1"), &w, 4, &o()).unwrap();
    assert!(r.hypotheses_hold() && r.conclusion.holds(), "{:#}", r.to_json());
    assert!(r.check("pointwise").unwrap().holds());

    let h2 = param("H2", pa("-1", "1", "-1"), pa("-1", "1", "1"));
    let r = verify_implicit_inequalities(&h2, &pt, ImplicitMode::POpen, &s("1"), &w, 4, &o()).unwrap();
    assert!(r.hypotheses_hold() && r.conclusion.holds(), "{:#}", r.to_json());
    assert_eq!(r.predicted("reg_S"), Some(&s("1")));
    assert!(r.tightness.as_ref().unwrap().tight(), "{:#}", r.to_json());
    assert!(r.check("pointwise").unwrap().holds());

    let h3 = param("H3", pa("-3/2", "1", "0"), pa("-3/2", "1", "1"));
    let r = verify_implicit_inequalities(&h3, &pt, ImplicitMode::XOpen, &s("3/2"), &w, 4, &o()).unwrap();
    assert!(r.hypotheses_hold() && r.conclusion.holds(), "{:#}", r.to_json());
    assert_eq!(r.predicted("lip_S"), Some(&s("2/3")));
    assert!(r.tightness.as_ref().unwrap().tight(), "{:#}", r.to_json());
    assert!(r.check("pointwise").unwrap().holds());
}

#[test]
fn gamma_instance() {
    let d = GammaData {
        f: param("F", pa("1", "1", "-1"), pa("1", "1", "1")),
        g: map("linear_2x"),
        x: s("0"),
        y: s("0"),
        w: s("0"),
        eta: s("1"),
        k: s("1"),
        lambda: s("2"),
        alpha: s("1/2"),
        grid: 3,
    };
    let r = verify_gamma_aubin(&d, &o()).unwrap();
    assert!(r.hypotheses_hold(), "{:#}", r.to_json());
    assert!(r.conclusion.holds());
    assert_eq!(r.predicted("lip_gamma"), Some(&s("2")));
    assert!(r.tightness.as_ref().unwrap().tight(), "{:#}", r.to_json());
    for e in ["1", "1/2", "1/4"] {
        assert!(r.check(&format!("inclusion_eps_{e}")).unwrap().holds());
    }
    // g ≡ 0 gives the implicit map of F.
    let zero = line("zero", "0");
    let r0 = verify_gamma_aubin(&GammaData { g: zero, lambda: s("0"), ..d.clone() }, &o()).unwrap();
    assert!(r0.conclusion.holds());
    let gm = regmod::mfn::gamma_map(&d.f, &line("zero", "0")).unwrap();
    let sm = regmod::mfn::implicit_map(&d.f).unwrap();
    for y in ["-1", "0", "3/7"] {
        assert_eq!(gm.eval(&[s(y), s("5")]), sm.eval(&[s(y)]));
    }
}

#[test]
fn sum_stability_examples() {
    let z = s("0");
    let c = check_sum_stability(&map("abs_interval"), &map("abs_interval"), &SumPoint::new(z.clone(), z.clone(), z.clone()), &s("1/10"), &o())
        .unwrap();
    assert!(c.holds());

    let (f, g) = (map("jump_two"), map("neg_jump_two"));
    let sp = SumPoint::new(s("1"), s("2"), s("-2"));
    let c = check_sum_stability(&f, &g, &sp, &s("1/2"), &o()).unwrap();
    assert!(c.fails());
    let wit = c.witness.as_ref().unwrap();
    assert_eq!(wit.get("w"), Some(&z));
    assert_ne!(wit.get("x"), Some(&s("1")));
    assert!(replay_sum_stability(&f, &g, &sp, &c));
    assert!(check_local_sum_stability(&f, &g, &sp, &o()).unwrap().fails());

    let (f, g) = (map("rat_tail"), map("rat_tail_seq"));
    let sp = SumPoint::new(s("1"), s("1"), s("-1"));
    let c = check_sum_stability(&f, &g, &sp, &s("1/2"), &o()).unwrap();
    assert!(c.fails(), "{:#}", c.to_json());
    let wit = c.witness.as_ref().unwrap();
    let n = RatTailSeq::index_of(wit.get("x").unwrap()).unwrap();
    assert_eq!(wit.get("w").unwrap(), &Scalar::sqrt2().checked_div(&Scalar::int(n as i64)).unwrap());
    assert!(wit.note.as_ref().unwrap().contains("is_rational"));
    assert!(wit.note.as_ref().unwrap().contains("√2/n"));
    assert!(replay_sum_stability(&f, &g, &sp, &c));
}

#[test]
fn lip_sum_examples() {
    let z = s("0");
    let w = Window::default();
    let r = verify_lip_sum(&map("abs_interval"), &map("abs_interval"), &SumPoint::new(z.clone(), z.clone(), z.clone()), &w, &o()).unwrap();
    assert!(r.hypotheses_hold() && r.conclusion.holds(), "{:#}", r.to_json());
    assert_eq!(r.predicted("lip_sum"), Some(&s("2")));
    assert!(r.tightness.as_ref().unwrap().tight());

    let r = verify_lip_sum(&map("unit_shelf"), &map("const_12"), &SumPoint::new(s("1"), s("1"), s("1")), &w, &o()).unwrap();
    assert!(r.hypothesis("(F, G) locally sum-stable").unwrap().verdict() == Verdict::Fails);
    assert!(r.conclusion.fails());
    assert!(r.check("obstruction").unwrap().fails());
    assert!(r.sound());

    let r = verify_lip_sum(&map("const_12"), &map("const_12"), &SumPoint::new(z.clone(), s("1"), s("1")), &w, &o()).unwrap();
    assert!(r.conclusion.holds());
    assert_eq!(r.predicted("lip_sum"), Some(&s("0")));
}

#[test]
fn solution_bounds() {
    let pt = Point::param(s("0"), s("0"), s("0"));
    let w = Window::default();
    let g = map("neg_linear_2x");
    let f = param("F", pa("1", "1", "-1"), pa("1", "1", "1"));
    let r = verify_reg_solution_bound(&f, &g, &pt, &w, &o()).unwrap();
    assert!(r.hypotheses_hold(), "{:#}", r.to_json());
    assert!(r.conclusion.holds());
    assert_eq!(r.predicted("reg_S"), Some(&s("3")));
    let b = &r.tightness.as_ref().unwrap().bracket;
    assert_eq!((b.lo.clone(), b.hi.clone()), (fin("1"), fin("1")));

    let f = param("F", pa("1/2", "1", "0"), pa("1/2", "1", "1"));
    let r = verify_lip_solution_bound(&f, &g, &pt, &w, &o()).unwrap();
    assert!(r.hypotheses_hold(), "{:#}", r.to_json());
    assert!(r.conclusion.holds());
    assert_eq!(r.predicted("lip_S"), Some(&s("2/3")));
    assert!(r.tightness.as_ref().unwrap().tight());

    let f1 = param("F", pa("1", "1", "0"), pa("1", "1", "1"));
    assert!(precondition(verify_lip_solution_bound(&f1, &line("neg", "-1"), &pt, &w, &o())));

    let calm = param("f", pa("1/2", "1", "0"), pa("1/2", "1", "0"));
    let r = verify_lip_solution_bound(&calm, &g, &pt, &w, &o()).unwrap();
    let h = r.hypothesis("(i) (F_p, G) locally sum-stable").unwrap();
    assert_eq!(h.verdict(), Verdict::Holds);
    assert!(r.sound());
}
