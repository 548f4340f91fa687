//! Openness of differences `F - G⁻¹` and its corollaries.

use super::{
    closed_box, conclude, dyadic_grid, inconclusive, locally_closed, open_near, single_value, Hypothesis, TheoremError,
    TheoremReport, Tightness,
};
use crate::exactnum::Scalar;
use crate::linear::formula::{self, Formula};
use crate::linear::fm;
use crate::mfn::graph::GraphMap;
use crate::mfn::MapHandle;
use crate::moduli::builder::{abs_bound, in_graph, lt, nowhere_in_graph, Lx, Vars};
use crate::moduli::{
    check, check_full_lipschitz, check_partial, estimate_modulus, Certificate, Kind, Opts, Point, Property,
    RateSpec, Window, WindowSpec, Witness,
};
use crate::rset::{Cell, RSet};

/// Radii of the local closedness and openness hypotheses.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DiffRadii {
    pub alpha1: Scalar,
    pub beta1: Scalar,
    pub alpha2: Scalar,
    pub beta2: Scalar,
    pub r1: Scalar,
    pub s1: Scalar,
    pub r2: Scalar,
    pub s2: Scalar,
}

impl DiffRadii {
    pub fn uniform(r: Scalar) -> DiffRadii {
        DiffRadii {
            alpha1: r.clone(),
            beta1: r.clone(),
            alpha2: r.clone(),
            beta2: r.clone(),
            r1: r.clone(),
            s1: r.clone(),
            r2: r.clone(),
            s2: r,
        }
    }

    /// `min{α₁, α₂, β₁/L, Mβ₂, r₁, r₂, s₁/L, Ms₂}`.
    pub fn epsilon(&self, l: &Scalar, m: &Scalar) -> Scalar {
        let over_l = |a: &Scalar| a.checked_div(l).expect("L > 0");
        [
            self.alpha1.clone(),
            self.alpha2.clone(),
            over_l(&self.beta1),
            m * &self.beta2,
            self.r1.clone(),
            self.r2.clone(),
            over_l(&self.s1),
            m * &self.s2,
        ]
        .iter()
        .fold(self.alpha1.clone(), |acc, v| Scalar::min(&acc, v))
    }

    fn all_positive(&self) -> bool {
        [&self.alpha1, &self.beta1, &self.alpha2, &self.beta2, &self.r1, &self.s1, &self.r2, &self.s2]
            .iter()
            .all(|r| r.is_positive())
    }
}

fn positive(name: &str, v: &Scalar) -> Result<(), TheoremError> {
    if v.is_positive() {
        Ok(())
    } else {
        Err(TheoremError::Precondition(format!("{name} must be positive, got {v}")))
    }
}

fn on_graph(map: &MapHandle, x: &Scalar, y: &Scalar, what: &str) -> Result<(), TheoremError> {
    if map.fiber(std::slice::from_ref(x)).set.contains(y) {
        Ok(())
    } else {
        Err(TheoremError::Precondition(format!("{what}: ({x}, {y}) is not on the graph of {}", map.label())))
    }
}

fn recip(m: &Scalar) -> Scalar {
    m.recip().expect("positive")
}

/// Shared hypotheses (i)-(v) of the difference theorem.
fn difference_hypotheses(
    f: &MapHandle,
    g: &MapHandle,
    x: &Scalar,
    y: &Scalar,
    z: &Scalar,
    l: &Scalar,
    m: &Scalar,
    radii: &DiffRadii,
    opts: &Opts,
) -> Result<Vec<Hypothesis>, TheoremError> {
    let lm = l * m;
    Ok(vec![
        Hypothesis::cert("(i) Gr F locally closed", locally_closed(f, x, y, &radii.alpha1, &radii.beta1)),
        Hypothesis::cert("(ii) Gr G locally closed", locally_closed(g, z, x, &radii.beta2, &radii.alpha2)),
        Hypothesis::cert(
            "(iii) F is L-open near (x̄, ȳ)",
            open_near(f, &Point::new(x.clone(), y.clone()), l, &radii.r1, &radii.s1, opts)?,
        ),
        Hypothesis::cert(
            "(iv) G is M-open near (z̄, x̄)",
            open_near(g, &Point::new(z.clone(), x.clone()), m, &radii.s2, &radii.r2, opts)?,
        ),
        Hypothesis::cert("(v) LM > 1", Certificate::claim(lm > Scalar::one(), format!("L·M = {lm}"))),
    ])
}

/// Whether `B(c, r) ⊂ D(B(x, ρ))` for every listed `ρ`, with `r = rate·ρ`.
fn rho_grid(d: &MapHandle, x: &Scalar, c: &Scalar, rate: &Scalar, rhos: &[Scalar]) -> Certificate {
    for rho in rhos {
        let Some(img) = d.image_of_cell(&Cell::ball(x, rho)) else {
            return inconclusive("no exact image rule for the difference map");
        };
        let want = RSet::from_cell(Cell::ball(c, &(rate * rho)));
        if !want.is_subset(&img) {
            return Certificate::claim(false, format!("B({c}, {}) is not inside the image of B({x}, {rho})", rate * rho));
        }
    }
    Certificate::claim(true, format!("ball inclusion verified for {} dyadic radii ρ = ε/2^k", rhos.len()))
}

/// The second clause: openness at every `(x, y - z)` with `(x, y, z)` in the half-window.
fn moreover_clause(f: &GraphMap, g: &GraphMap, d: &GraphMap, x0: &Scalar, y0: &Scalar, z0: &Scalar, rate: &Scalar, eps: &Scalar) -> Certificate {
    let half = eps.half();
    let mut vars = Vars::default();
    let (x, y, z, rho, w, xp) = (vars.one(), vars.one(), vars.one(), vars.one(), vars.one(), vars.one());
    let n = vars.count();
    let v = |i| Lx::<Scalar>::var(n, i);
    let c = |s: &Scalar| Lx::<Scalar>::scalar(n, s);
    let mut cs = Vec::new();
    cs.extend(abs_bound(&v(x).sub(&c(x0)), &c(&half), true));
    cs.extend(abs_bound(&v(y).sub(&c(y0)), &c(&half), true));
    cs.extend(abs_bound(&v(z).sub(&c(z0)), &c(&half), true));
    cs.push(lt(&c(&Scalar::zero()), &v(rho)));
    cs.push(lt(&v(rho), &c(&half)));
    cs.extend(abs_bound(&v(w).sub(&v(y).sub(&v(z))), &v(rho).scale(rate), true));
    let near = abs_bound(&v(xp).sub(&v(x)), &v(rho), true);
    // Only atoms meeting the reachable box matter.
    let reach = eps + &(rate * &half);
    let f = f.localize(&closed_box(2, &[(0, x0, &half), (1, y0, &half)]));
    let g = g.localize(&closed_box(2, &[(0, z0, &half), (1, x0, &half)]));
    let d = d.localize(&closed_box(2, &[(0, x0, eps), (1, &(y0 - z0), &reach)]));
    let phi = Formula::and(vec![
        in_graph(&f, &[x, y], n),
        in_graph(&g, &[z, x], n),
        Formula::conj(cs),
        nowhere_in_graph(&d, &[xp, w], n, &near, &[xp]),
    ]);
    let what = format!("B(y - z, {rate}·ρ) ⊂ (F - G⁻¹)(B(x, ρ)) for ρ < ε/2 and (x, y, z) within ε/2");
    match formula::solve(&phi) {
        None => Certificate::claim(true, what),
        Some(conj) => {
            let vals = fm::witness(&conj, n).expect("witness");
            let names = ["x", "y", "z", "rho", "w"];
            let values = names.iter().enumerate().map(|(i, s)| (s.to_string(), vals[i].clone())).collect();
            Certificate::claim(false, what).with_witness(Witness {
                values,
                rate: rate.clone(),
                window: Window::uniform(half),
                note: Some("w is not reached from B(x, ρ)".into()),
            })
        }
    }
}

/// Openness of `F - G⁻¹` at `(x̄, ȳ - z̄)` with the explicit radius `ε`.
#[allow(clippy::too_many_arguments)]
pub fn verify_difference_openness(
    f: &MapHandle,
    g: &MapHandle,
    x: &Scalar,
    y: &Scalar,
    z: &Scalar,
    l: &Scalar,
    m: &Scalar,
    radii: &DiffRadii,
    depth: u32,
    opts: &Opts,
) -> Result<TheoremReport, TheoremError> {
    positive("L", l)?;
    positive("M", m)?;
    if !radii.all_positive() {
        return Err(TheoremError::Precondition("radii must be positive".into()));
    }
    if l * m <= Scalar::one() {
        return Err(TheoremError::Precondition(format!("LM > 1 fails: L·M = {}", l * m)));
    }
    on_graph(f, x, y, "(x̄, ȳ) ∈ Gr F")?;
    on_graph(g, z, x, "(z̄, x̄) ∈ Gr G")?;
    let rate = l - &recip(m);
    let eps = radii.epsilon(l, m);
    let d = MapHandle::diff_map(f, g)?;
    let c = y - z;
    let pt = Point::new(x.clone(), c.clone());
    let win = Window::uniform(eps.clone());
    let conclusion = check(&d, &pt, Property::OpenAt, None, &RateSpec::Value(rate.clone()), &WindowSpec::Concrete(win.clone()), opts)?;
    let mut rep = TheoremReport::new("difference_openness", conclusion);
    rep.hypotheses = difference_hypotheses(f, g, x, y, z, l, m, radii, opts)?;
    rep.predicted = vec![("rate".into(), rate.clone()), ("epsilon".into(), eps.clone())];
    rep.checks.push(("rho_grid".into(), rho_grid(&d, x, &c, &rate, &dyadic_grid(&eps, depth))));
    let moreover = match (f.solid_graph(), g.solid_graph(), d.solid_graph()) {
        (Some(fg), Some(gg), Some(dg)) => moreover_clause(fg, gg, dg, x, y, z, &rate, &eps),
        _ => inconclusive("the half-window clause needs solid graphs"),
    };
    rep.checks.push(("moreover".into(), moreover));
    let b = estimate_modulus(&d, &pt, Kind::Plop, &win, opts)?;
    rep.tightness = Some(Tightness { predicted: rate, bracket: b });
    Ok(rep)
}

/// Openness of `F - G₁⁻¹ - … - Gₙ⁻¹` at `(x̄, ȳ - Σ z̄ᵢ)` on some window.
#[allow(clippy::too_many_arguments)]
pub fn verify_multi_difference_openness(
    f: &MapHandle,
    gs: &[MapHandle],
    x: &Scalar,
    y: &Scalar,
    zs: &[Scalar],
    l: &Scalar,
    ms: &[Scalar],
    radius: &Scalar,
    opts: &Opts,
) -> Result<TheoremReport, TheoremError> {
    if gs.is_empty() || gs.len() != zs.len() || gs.len() != ms.len() {
        return Err(TheoremError::Precondition("one z̄ᵢ and one Mᵢ per Gᵢ".into()));
    }
    positive("L", l)?;
    positive("radius", radius)?;
    for m in ms {
        positive("Mᵢ", m)?;
    }
    let inv_sum = ms.iter().fold(Scalar::zero(), |acc, m| &acc + &recip(m));
    if *l <= inv_sum {
        return Err(TheoremError::Precondition(format!("L > Σ 1/Mᵢ fails: {l} ≤ {inv_sum}")));
    }
    on_graph(f, x, y, "(x̄, ȳ) ∈ Gr F")?;
    for (g, z) in gs.iter().zip(zs) {
        on_graph(g, z, x, "(z̄ᵢ, x̄) ∈ Gr Gᵢ")?;
    }
    let rate = l - &inv_sum;
    let mut d = f.clone();
    for g in gs {
        d = MapHandle::diff_map(&d, g)?;
    }
    let c = zs.iter().fold(y.clone(), |acc, z| &acc - z);
    let pt = Point::new(x.clone(), c);
    let conclusion = check(&d, &pt, Property::OpenAt, None, &RateSpec::Value(rate.clone()), &WindowSpec::Every, opts)?;
    let mut rep = TheoremReport::new("multi_difference_openness", conclusion);
    rep.hypotheses.push(Hypothesis::cert("Gr F locally closed", locally_closed(f, x, y, radius, radius)));
    rep.hypotheses.push(Hypothesis::cert("F is L-open near (x̄, ȳ)", open_near(f, &Point::new(x.clone(), y.clone()), l, radius, radius, opts)?));
    for (i, ((g, z), m)) in gs.iter().zip(zs).zip(ms).enumerate() {
        let k = i + 1;
        rep.hypotheses.push(Hypothesis::cert(format!("Gr G{k} locally closed"), locally_closed(g, z, x, radius, radius)));
        rep.hypotheses.push(Hypothesis::cert(
            format!("G{k} is M{k}-open near (z̄{k}, x̄)"),
            open_near(g, &Point::new(z.clone(), x.clone()), m, radius, radius, opts)?,
        ));
    }
    rep.hypotheses.push(Hypothesis::cert("L > Σ 1/Mᵢ", Certificate::claim(true, format!("{l} > {inv_sum}"))));
    rep.predicted.push(("rate".into(), rate.clone()));
    if rep.conclusion.holds() && d.solid_graph().is_some() {
        for k in 0..=20 {
            let e = radius * &Scalar::pow2(-k);
            let w = Window::uniform(e.clone());
            let c = check(&d, &pt, Property::OpenAt, None, &RateSpec::Value(rate.clone()), &WindowSpec::Concrete(w), opts)?;
            if c.holds() {
                rep.checks.push(("concrete_window".into(), c.with_note(format!("ε = {e} works"))));
                break;
            }
        }
    }
    let b = estimate_modulus(&d, &pt, Kind::Plop, &Window::uniform(radius.clone()), opts)?;
    rep.tightness = Some(Tightness { predicted: rate, bracket: b });
    Ok(rep)
}

/// Openness around `(x̄, f(x̄) - z̄)` of `f - G⁻¹` for single-valued Lipschitz `f`,
/// on the window of radius `γ = min{ε/4, ε/(4l)}`.
#[allow(clippy::too_many_arguments)]
pub fn verify_graves_corollary(
    f: &MapHandle,
    g: &MapHandle,
    x: &Scalar,
    z: &Scalar,
    l_open: &Scalar,
    m: &Scalar,
    lip: &Scalar,
    radii: &DiffRadii,
    opts: &Opts,
) -> Result<TheoremReport, TheoremError> {
    if f.is_single_valued() != Some(true) {
        return Err(TheoremError::Precondition(format!("{} is not (certifiably) single-valued", f.label())));
    }
    positive("L", l_open)?;
    positive("M", m)?;
    positive("l", lip)?;
    if !radii.all_positive() {
        return Err(TheoremError::Precondition("radii must be positive".into()));
    }
    if l_open * m <= Scalar::one() {
        return Err(TheoremError::Precondition(format!("LM > 1 fails: L·M = {}", l_open * m)));
    }
    let y = single_value(f, std::slice::from_ref(x)).expect("single-valued");
    on_graph(g, z, x, "(z̄, x̄) ∈ Gr G")?;
    let eps = radii.epsilon(l_open, m);
    let quarter = Scalar::frac(1, 4);
    let gamma = Scalar::min(&(&eps * &quarter), &(&eps * &quarter).checked_div(lip).expect("l > 0"));
    let rate = l_open - &recip(m);
    let d = MapHandle::diff_map(f, g)?;
    let pt = Point::new(x.clone(), &y - z);
    let win = Window { u_radius: gamma.clone(), v_radius: gamma.clone(), eps: eps.half(), p_radius: None };
    let conclusion = check(&d, &pt, Property::Open, None, &RateSpec::Value(rate.clone()), &WindowSpec::Concrete(win.clone()), opts)?;
    let mut rep = TheoremReport::new("graves_corollary", conclusion);
    let fpt = Point::new(x.clone(), y.clone());
    rep.hypotheses.push(Hypothesis::cert(
        "(i) f Lipschitz around x̄ with constant l",
        check_full_lipschitz(f, &fpt, lip, &Window::uniform(radii.r1.clone()), opts)?,
    ));
    rep.hypotheses.push(Hypothesis::cert("(ii) Gr G locally closed", locally_closed(g, z, x, &radii.beta2, &radii.alpha2)));
    rep.hypotheses.push(Hypothesis::cert("(iii) f is L-open around (x̄, ȳ)", open_near(f, &fpt, l_open, &radii.r1, &radii.s1, opts)?));
    rep.hypotheses.push(Hypothesis::cert(
        "(iv) G is M-open around (z̄, x̄)",
        open_near(g, &Point::new(z.clone(), x.clone()), m, &radii.s2, &radii.r2, opts)?,
    ));
    rep.hypotheses.push(Hypothesis::cert("(v) LM > 1", Certificate::claim(true, format!("L·M = {}", l_open * m))));
    rep.predicted = vec![("rate".into(), rate.clone()), ("epsilon".into(), eps), ("gamma".into(), gamma)];
    let b = estimate_modulus(&d, &pt, Kind::Lop, &win, opts)?;
    rep.tightness = Some(Tightness { predicted: rate, bracket: b });
    Ok(rep)
}

/// `lop A = min |aᵢᵢ|` for a diagonal operator under the max norm.
pub fn diagonal_lop(a: &[Scalar]) -> Result<Scalar, TheoremError> {
    if a.is_empty() || a.iter().any(|v| v.is_zero()) {
        return Err(TheoremError::Precondition("A must be diagonal with nonzero entries (surjective)".into()));
    }
    Ok(a.iter().skip(1).fold(a[0].abs(), |acc, v| Scalar::min(&acc, &v.abs())))
}

/// Partial openness in `p` of a single-valued `f(x, p)` from a diagonal
/// approximation `A` with perturbation constant `α`.
pub fn verify_partial_openness_bound(
    f: &MapHandle,
    a: &[Scalar],
    alpha: &Scalar,
    pt: &Point,
    w: &Window,
    opts: &Opts,
) -> Result<TheoremReport, TheoremError> {
    let lop_a = diagonal_lop(a)?;
    if alpha.is_negative() || *alpha >= lop_a {
        return Err(TheoremError::Precondition(format!("α < lop A fails: α = {alpha}, lop A = {lop_a}")));
    }
    if a.len() != 1 || f.in_dim() != 2 || pt.x.len() != 2 {
        return Err(TheoremError::Precondition("the parametric map must take (x, p) with one-dimensional p".into()));
    }
    let graph = f
        .solid_graph()
        .ok_or_else(|| TheoremError::Precondition("f needs a solid graph".into()))?;
    if !crate::mfn::is_single_valued(graph) {
        return Err(TheoremError::Precondition(format!("{} is not single-valued", f.label())));
    }
    let reg_a = recip(&lop_a);
    let lop_bound = &lop_a - alpha;
    let reg_bound = reg_a.checked_div(&(Scalar::one() - alpha * &reg_a)).expect("α·reg A < 1");
    let conclusion = super::conclude(f, pt, Property::Open, Some(1), &RateSpec::Value(lop_bound.clone()), w, opts)?;
    let mut rep = TheoremReport::new("partial_openness", conclusion);
    let shear = MapHandle::from_graph(format!("{} - A·p", f.label()), graph.shear(1, &a[0]));
    let spt = Point::param(pt.x[0].clone(), pt.x[1].clone(), &pt.y - &(&a[0] * &pt.x[1]));
    let pert = check_partial(&shear, &spt, 1, Property::FullLipschitz, alpha, w, opts)?
        .with_note(format!("|f(x,p) - f(x,p') - A(p - p')| ≤ {alpha}|p - p'| on the window"));
    rep.hypotheses.push(Hypothesis::cert("perturbation bound", pert));
    rep.hypotheses.push(Hypothesis::cert(
        "α < lop A",
        Certificate::claim(true, format!("lop A = min |aᵢᵢ| = {lop_a} > α = {alpha}")),
    ));
    rep.predicted = vec![
        ("lop_A".into(), lop_a),
        ("lop_p_lower".into(), lop_bound.clone()),
        ("reg_p_upper".into(), reg_bound.clone()),
    ];
    rep.checks.push((
        "reg_p_bound".into(),
        conclude(f, pt, Property::MetricRegular, Some(1), &RateSpec::Value(reg_bound), w, opts)?,
    ));
    let b = estimate_modulus(f, pt, Kind::LopP, w, opts)?;
    rep.tightness = Some(Tightness { predicted: lop_bound, bracket: b });
    Ok(rep)
}
