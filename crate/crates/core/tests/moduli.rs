use regmod::exactnum::{parse_scalar, ExtScalar, Scalar};
use regmod::mfn::pamap::{ParamAffine, ParamMap};
use regmod::mfn::MapHandle;
use regmod::moduli::replay::replay;
use regmod::moduli::*;

fn s(t: &str) -> Scalar {
    parse_scalar(t).unwrap()
}

fn fin(t: &str) -> ExtScalar {
    ExtScalar::Finite(s(t))
}

fn map(name: &str) -> MapHandle {
    MapHandle::builtin(name).unwrap()
}

fn at(x: &str, y: &str) -> Point {
    Point::new(s(x), s(y))
}

fn opts() -> Opts {
    Opts::default()
}

#[test]
fn around_examples() {
    let w = Window::default();
    let l2 = map("linear_2x");
    let o = opts();
    assert!(check_around(&l2, &at("0", "0"), Property::Open, &s("2"), &w, &o).unwrap().holds());
    let c = check_around(&l2, &at("0", "0"), Property::Open, &s("21/10"), &w, &o).unwrap();
    assert!(c.fails());
    assert!(replay(&l2, &at("0", "0"), &c, None));
    assert!(check_around(&map("abs_interval"), &at("0", "0"), Property::LipschitzLike, &s("1"), &w, &o).unwrap().holds());
    assert!(check_around(&l2, &at("0", "0"), Property::MetricRegular, &s("1/2"), &w, &o).unwrap().holds());
}

#[test]
fn at_point_examples() {
    let w = Window::default();
    let l2 = map("linear_2x");
    let o = opts();
    assert!(check_at(&l2, &at("0", "0"), Property::OpenAt, &s("2"), &w, &o).unwrap().holds());
    let inv = l2.invert().unwrap();
    assert!(check_at(&inv, &at("0", "0"), Property::Pseudocalm, &s("1/2"), &w, &o).unwrap().holds());
    let c = check_at(&l2, &at("0", "0"), Property::Hemiregular, &s("2/5"), &w, &o).unwrap();
    assert!(c.fails());
    assert!(replay(&l2, &at("0", "0"), &c, None));
}

#[test]
fn partial_examples() {
    let w = Window::default();
    let o = opts();
    let pa = |ax: &str, ap: &str, b: &str| ParamAffine::new(s(ax), s(ap), s(b));
    let f = MapHandle::from_param("F", &ParamMap::uniform(pa("1", "1", "-1"), pa("1", "1", "1")));
    let pt = Point::param(s("0"), s("0"), s("0"));
    assert!(check_partial(&f, &pt, 1, Property::Open, &s("1"), &w, &o).unwrap().holds());
    let h = MapHandle::from_param("H", &ParamMap::uniform(pa("1/2", "1", "0"), pa("1/2", "1", "1")));
    assert!(check_partial(&h, &pt, 0, Property::LipschitzLike, &s("1/2"), &w, &o).unwrap().holds());
    let c = check_partial(&h, &pt, 0, Property::LipschitzLike, &s("2/5"), &w, &o).unwrap();
    assert!(c.fails());
    assert!(replay(&h, &pt, &c, Some(0)));
}

#[test]
fn other_checks() {
    let w = Window::default();
    let o = opts();
    assert!(check_full_lipschitz(&map("rat_tail"), &at("1", "1"), &s("1"), &w, &o).unwrap().holds());
    assert!(check_full_lipschitz(&map("rat_tail_seq"), &at("1", "-1"), &s("1"), &w, &o).unwrap().holds());
    assert!(check_calm(&map("abs"), &at("0", "0"), &s("1"), &w, &o).unwrap().holds());
    let c = check_isc(&map("jump_two"), &at("1", "2"), &s("1/2"), None, &o).unwrap();
    assert!(c.fails());
    assert!(replay(&map("jump_two"), &at("1", "2"), &c, None));
    assert!(check_around(&map("jump_two"), &at("0", "5"), Property::Open, &s("1"), &w, &o).is_err());
}

#[test]
fn estimates() {
    let w = Window::default();
    let o = opts();
    let b = estimate_modulus(&map("linear_2x"), &at("0", "0"), Kind::Lop, &w, &o).unwrap();
    assert_eq!((b.lo.clone(), b.hi.clone()), (fin("2"), fin("2")), "{b}");
    assert!(b.is_exact());
    let b = estimate_modulus(&map("abs_interval"), &at("0", "0"), Kind::Lip, &w, &o).unwrap();
    assert_eq!((b.lo.clone(), b.hi.clone()), (fin("1"), fin("1")), "{b}");
    let b = estimate_modulus(&map("abs_interval"), &at("1", "1"), Kind::Reg, &w, &o).unwrap();
    assert_eq!((b.lo.clone(), b.hi.clone()), (fin("1"), fin("1")), "{b}");
    let b = estimate_modulus(&map("const_12"), &at("0", "1"), Kind::Lip, &w, &o).unwrap();
    assert_eq!((b.lo.clone(), b.hi.clone()), (fin("0"), fin("0")), "{b}");
    let b = estimate_modulus(&map("rat_tail"), &at("1", "1"), Kind::Lop, &w, &o).unwrap();
    assert!(b.hi <= fin("1/1048576"), "{b}");
    let b = estimate_modulus(&map("linear_2x"), &at("0", "0"), Kind::Lop, &w, &Opts { budget: 0, ..o }).unwrap();
    assert_eq!(b.verdict, Verdict::Inconclusive);
}

#[test]
fn bracket_validity() {
    let w = Window::default();
    let o = opts();
    for (name, x, y, kind) in [("abs", "0", "0", Kind::Lop), ("linear_3x", "0", "0", Kind::Reg), ("abs_interval", "1", "1", Kind::Plop)] {
        let m = map(name);
        let pt = at(x, y);
        let b = estimate_modulus(&m, &pt, kind, &w, &o).unwrap();
        if let Some(c) = &b.holds {
            let again = check(&m, &pt, kind.property(), None, c.rate.as_ref().unwrap(), &c.window, &o).unwrap();
            assert!(again.holds(), "{name} {kind}: {b}");
        }
        if let Some(c) = &b.fails {
            let again = check(&m, &pt, kind.property(), None, c.rate.as_ref().unwrap(), &c.window, &o).unwrap();
            assert!(again.fails(), "{name} {kind}: {b}");
            if c.witness.is_some() {
                assert!(replay(&m, &pt, c, None));
            }
        }
    }
}

#[test]
fn linkage_on_library() {
    let w = Window::default();
    let o = opts();
    for name in regmod::mfn::builtin::all_names() {
        for (x, y) in regmod::mfn::builtin::reference_points(name) {
            let pt = Point::new(x, y);
            let m = map(name);
            let r = verify_link_around(&m, &pt, &w, &o).unwrap();
            assert!(r.consistent, "{name} around: {} {} {}", r.opening, r.inverse, r.regularity);
            let r = verify_link_at(&m, &pt, &w, &o).unwrap();
            assert!(r.consistent, "{name} at: {} {} {}", r.opening, r.inverse, r.regularity);
        }
    }
    let r = verify_link_around(&map("linear_2x"), &at("0", "0"), &w, &o).unwrap();
    assert!(r.exact());
    assert_eq!(r.regularity.lo, fin("1/2"));
    assert_eq!(r.inverse.lo, fin("1/2"));
}
