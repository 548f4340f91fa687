//! Multifunctions `R ⇉ R` and `R × R ⇉ R`: representations, evaluation and calculus.

pub mod builtin;
pub mod graph;
pub mod pamap;

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::exactnum::Scalar;
use crate::linear::fm::Rel;
use crate::linear::formula::{self, Formula};
use crate::rset::{minkowski, Cell, RSet};
use builtin::{Bespoke, RatTailSeq};
use graph::GraphMap;
use pamap::{MapSpec, PaMap, ParamMap};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MapError {
    #[error("invalid map: {0}")]
    Invalid(String),
    #[error("unknown map '{0}'")]
    Unknown(String),
    #[error("unsupported operation: {0}")]
    Unsupported(String),
    #[error("map is not single-valued: {0}")]
    NotSingleValued(String),
}

/// A fiber value. `exact` is false when only the closure of the true set is known.
#[derive(Clone, Debug, PartialEq)]
pub struct Fiber {
    pub set: RSet,
    pub exact: bool,
}

impl Fiber {
    fn exact(set: RSet) -> Fiber {
        Fiber { set, exact: true }
    }
}

#[derive(Clone)]
pub enum MapHandle {
    Graph { label: String, graph: Arc<GraphMap> },
    Bespoke(Arc<dyn Bespoke>),
    /// Inverse of a map that has no finite solid graph.
    Inverse(Box<MapHandle>),
    /// Fiberwise sum, evaluated lazily.
    Sum(Box<MapHandle>, Box<MapHandle>),
    /// `F - G^{-1}`, evaluated lazily.
    Diff(Box<MapHandle>, Box<MapHandle>),
}

impl fmt::Debug for MapHandle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.label())
    }
}

impl MapHandle {
    pub fn from_graph(label: impl Into<String>, graph: GraphMap) -> MapHandle {
        MapHandle::Graph { label: label.into(), graph: Arc::new(graph) }
    }

    pub fn from_pamap(label: impl Into<String>, m: &PaMap) -> MapHandle {
        MapHandle::from_graph(label, m.to_graph())
    }

    pub fn from_param(label: impl Into<String>, m: &ParamMap) -> MapHandle {
        MapHandle::from_graph(label, m.to_graph())
    }

    /// A named library map.
    pub fn builtin(name: &str) -> Result<MapHandle, MapError> {
        let key = name.replace('-', "_");
        if key == "rat_tail_seq" {
            return Ok(MapHandle::Bespoke(Arc::new(RatTailSeq)));
        }
        builtin::library_pamap(&key)
            .map(|m| MapHandle::from_pamap(key.clone(), &m))
            .ok_or_else(|| MapError::Unknown(name.to_string()))
    }

    pub fn label(&self) -> String {
        match self {
            MapHandle::Graph { label, .. } => label.clone(),
            MapHandle::Bespoke(b) => b.name().to_string(),
            MapHandle::Inverse(m) => format!("inv({})", m.label()),
            MapHandle::Sum(a, b) => format!("({} + {})", a.label(), b.label()),
            MapHandle::Diff(a, b) => format!("({} - inv({}))", a.label(), b.label()),
        }
    }

    pub fn in_dim(&self) -> usize {
        match self {
            MapHandle::Graph { graph, .. } => graph.in_dim,
            MapHandle::Sum(a, _) => a.in_dim(),
            _ => 1,
        }
    }

    pub fn graph(&self) -> Option<&GraphMap> {
        match self {
            MapHandle::Graph { graph, .. } => Some(graph),
            _ => None,
        }
    }

    /// The graph, when it is a finite union of solid polyhedra (exact engine applies).
    pub fn solid_graph(&self) -> Option<&GraphMap> {
        self.graph().filter(|g| g.is_solid())
    }

    pub fn fiber(&self, x: &[Scalar]) -> Fiber {
        assert_eq!(x.len(), self.in_dim(), "input dimension");
        match self {
            MapHandle::Graph { graph, .. } => Fiber::exact(graph.fiber(x)),
            MapHandle::Bespoke(b) => Fiber::exact(b.fiber(&x[0])),
            MapHandle::Inverse(m) => m.preimage(&x[0]).expect("inverse built from invertible map"),
            MapHandle::Sum(a, b) => {
                let fa = a.fiber(x);
                let fb = b.fiber(&x[..b.in_dim()]);
                Fiber { set: minkowski(&fa.set, &fb.set, true), exact: fa.exact && fb.exact }
            }
            MapHandle::Diff(f, g) => {
                let fa = f.fiber(x);
                let fb = g.preimage(&x[0]).expect("difference built from invertible map");
                Fiber { set: minkowski(&fa.set, &fb.set, false), exact: fa.exact && fb.exact }
            }
        }
    }

    pub fn eval_fiber(&self, x: &Scalar) -> RSet {
        self.fiber(std::slice::from_ref(x)).set
    }

    /// `F^{-1}(y)` for a one-dimensional input.
    pub fn preimage(&self, y: &Scalar) -> Result<Fiber, MapError> {
        match self {
            MapHandle::Graph { graph, .. } if graph.in_dim == 1 => {
                Ok(Fiber::exact(graph.section(&[None, Some(y.clone())])))
            }
            MapHandle::Bespoke(b) => {
                let (set, exact) = b.preimage(y);
                Ok(Fiber { set, exact })
            }
            MapHandle::Inverse(m) => Ok(m.fiber(std::slice::from_ref(y))),
            _ => Err(MapError::Unsupported(format!("preimage under {}", self.label()))),
        }
    }

    /// `F(I)` for a one-dimensional input, when an exact rule is available.
    pub fn image_of_cell(&self, c: &Cell) -> Option<RSet> {
        match self {
            MapHandle::Graph { graph, .. } if graph.in_dim == 1 => Some(graph.image_of_cell(c)),
            MapHandle::Bespoke(b) => Some(b.image_of_cell(c)),
            _ => None,
        }
    }

    pub fn image_of_set(&self, c: &Cell) -> Option<RSet> {
        self.image_of_cell(c)
    }

    pub fn invert(&self) -> Result<MapHandle, MapError> {
        match self {
            MapHandle::Graph { label, graph } if graph.in_dim == 1 && graph.is_solid() => {
                Ok(MapHandle::from_graph(format!("inv({label})"), graph.transpose()))
            }
            MapHandle::Graph { graph, .. } if graph.in_dim == 1 => Ok(MapHandle::Inverse(Box::new(self.clone()))),
            MapHandle::Bespoke(_) => Ok(MapHandle::Inverse(Box::new(self.clone()))),
            MapHandle::Inverse(m) => Ok((**m).clone()),
            _ => Err(MapError::Unsupported(format!("inverse of {}", self.label()))),
        }
    }

    /// `x -> F(x) + G(x)`; also `(x, p) -> F(x, p) + G(x)` when `F` is parametric.
    pub fn sum_maps(f: &MapHandle, g: &MapHandle) -> Result<MapHandle, MapError> {
        if g.in_dim() != 1 || (f.in_dim() != 1 && f.in_dim() != 2) {
            return Err(MapError::Invalid("sum needs G with one input".into()));
        }
        let label = format!("({} + {})", f.label(), g.label());
        if let (Some(a), Some(b)) = (f.solid_graph(), g.solid_graph()) {
            let gm = if a.in_dim == 1 { a.sum(b) } else { a.param_sum(b) };
            return Ok(MapHandle::from_graph(label, gm));
        }
        Ok(MapHandle::Sum(Box::new(f.clone()), Box::new(g.clone())))
    }

    /// `x -> F(x) - G^{-1}(x)` where `G: Y ⇉ X`.
    pub fn diff_map(f: &MapHandle, g: &MapHandle) -> Result<MapHandle, MapError> {
        if f.in_dim() != 1 || g.in_dim() != 1 {
            return Err(MapError::Invalid("difference needs one-dimensional maps".into()));
        }
        let label = format!("({} - inv({}))", f.label(), g.label());
        if let (Some(a), Some(b)) = (f.solid_graph(), g.solid_graph()) {
            return Ok(MapHandle::from_graph(label, a.diff_inverse(b)));
        }
        g.preimage(&Scalar::zero())?;
        Ok(MapHandle::Diff(Box::new(f.clone()), Box::new(g.clone())))
    }

    pub fn graph_closed(&self) -> Option<bool> {
        match self {
            MapHandle::Graph { graph, .. } => Some(graph.is_closed()),
            MapHandle::Bespoke(b) => Some(b.graph_closed()),
            MapHandle::Inverse(m) => m.graph_closed(),
            _ => None,
        }
    }

    /// Inputs near `center` worth sampling: breakpoints and exceptional points.
    pub fn special_points(&self, center: &Scalar, radius: &Scalar, count: usize) -> Vec<Scalar> {
        let near = |p: &Scalar| (p - center).abs() < *radius;
        let mut out: Vec<Scalar> = match self {
            MapHandle::Graph { graph, .. } => pamap::breakpoints(graph).into_iter().filter(near).collect(),
            MapHandle::Bespoke(b) => b.special_points(center, radius, count),
            MapHandle::Inverse(_) => vec![],
            MapHandle::Sum(a, b) | MapHandle::Diff(a, b) => {
                let mut v = a.special_points(center, radius, count);
                v.extend(b.special_points(center, radius, count));
                v
            }
        };
        out.sort();
        out.dedup();
        out
    }

    pub fn describe_point(&self, x: &Scalar) -> Option<String> {
        match self {
            MapHandle::Bespoke(b) => b.describe_point(x),
            MapHandle::Sum(a, b) | MapHandle::Diff(a, b) => a.describe_point(x).or_else(|| b.describe_point(x)),
            _ => None,
        }
    }

    pub fn bespoke(&self) -> Option<&dyn Bespoke> {
        match self {
            MapHandle::Bespoke(b) => Some(b.as_ref()),
            _ => None,
        }
    }

    /// Whether every fiber is a singleton (exact, solid graphs only).
    pub fn is_single_valued(&self) -> Option<bool> {
        self.solid_graph().map(is_single_valued)
    }
}

/// Exact test that a solid graph is the graph of a total function.
pub fn is_single_valued(g: &GraphMap) -> bool {
    let d = g.in_dim;
    // vars: inputs, y1, y2
    let n = d + 2;
    let mut m1: Vec<usize> = (0..d).collect();
    m1.push(d);
    let mut m2: Vec<usize> = (0..d).collect();
    m2.push(d + 1);
    let a1 = Formula::or(g.atoms.iter().map(|a| Formula::conj(a.embed::<Scalar>(&m1, n))).collect());
    let a2 = Formula::or(g.atoms.iter().map(|a| Formula::conj(a.embed::<Scalar>(&m2, n))).collect());
    let gap = graph::lin(n, &[(d, Scalar::one()), (d + 1, Scalar::int(-1))], Scalar::zero(), Rel::Lt);
    if formula::solve(&Formula::and(vec![a1, a2, Formula::Atom(gap)])).is_some() {
        return false;
    }
    // Totality: no input with an empty fiber.
    let ins: Vec<usize> = (0..d).collect();
    let mut m: Vec<usize> = ins.clone();
    m.push(d);
    let empty = Formula::and(
        g.atoms.iter().map(|a| formula::not_exists(a.embed::<Scalar>(&m, d + 1), &[d])).collect(),
    );
    formula::solve(&empty).is_none()
}

/// `S(p) = {x : 0 ∈ H(x, p)}` together with its source.
#[derive(Clone, Debug)]
pub struct ImplicitMap {
    pub source: MapHandle,
    pub map: MapHandle,
}

impl ImplicitMap {
    pub fn eval(&self, p: &[Scalar]) -> RSet {
        self.map.fiber(p).set
    }
}

pub fn implicit_map(h: &MapHandle) -> Result<ImplicitMap, MapError> {
    let g = h
        .solid_graph()
        .filter(|g| g.in_dim == 2)
        .ok_or_else(|| MapError::Unsupported("implicit map needs a solid parametric graph".into()))?;
    Ok(ImplicitMap { source: h.clone(), map: MapHandle::from_graph(format!("S[{}]", h.label()), g.implicit()) })
}

/// `Γ(y, w) = {x : 0 ∈ F(x, y) + g(w)}` for single-valued `g`.
pub fn gamma_map(f: &MapHandle, g: &MapHandle) -> Result<ImplicitMap, MapError> {
    let fg = f
        .solid_graph()
        .filter(|g| g.in_dim == 2)
        .ok_or_else(|| MapError::Unsupported("Γ needs a solid parametric graph".into()))?;
    let gg = g
        .solid_graph()
        .filter(|g| g.in_dim == 1)
        .ok_or_else(|| MapError::Unsupported("Γ needs a solid one-dimensional g".into()))?;
    if !is_single_valued(gg) {
        return Err(MapError::NotSingleValued(g.label()));
    }
    Ok(ImplicitMap {
        source: f.clone(),
        map: MapHandle::from_graph(format!("Gamma[{}, {}]", f.label(), g.label()), fg.gamma(gg)),
    })
}

/// Build the map described by `spec`, looking other maps up through `resolve`.
pub fn build_map(
    label: &str,
    spec: &MapSpec,
    resolve: &mut dyn FnMut(&str) -> Result<MapHandle, MapError>,
) -> Result<MapHandle, MapError> {
    match spec {
        MapSpec::Pa { pieces, exceptional } => {
            let pieces = pieces.iter().map(|p| p.to_piece()).collect::<Result<Vec<_>, _>>()?;
            let exceptional = exceptional.iter().map(|e| e.to_exceptional()).collect::<Result<Vec<_>, _>>()?;
            Ok(MapHandle::from_pamap(label, &PaMap::new(pieces, exceptional)?))
        }
        MapSpec::Param { pieces } => {
            let pieces = pieces.iter().map(|p| p.to_piece()).collect::<Result<Vec<_>, _>>()?;
            Ok(MapHandle::from_param(label, &ParamMap::new(pieces)?))
        }
        MapSpec::Builtin { name } => MapHandle::builtin(name),
        MapSpec::Inverse { of } => resolve(of)?.invert(),
        MapSpec::Sum { of } => {
            let mut it = of.iter();
            let first = it.next().ok_or_else(|| MapError::Invalid("empty sum".into()))?;
            let mut acc = resolve(first)?;
            for n in it {
                acc = MapHandle::sum_maps(&acc, &resolve(n)?)?;
            }
            Ok(acc)
        }
        MapSpec::Diff { f, g } => MapHandle::diff_map(&resolve(f)?, &resolve(g)?),
        MapSpec::ParamSum { f, g } => MapHandle::sum_maps(&resolve(f)?, &resolve(g)?),
        MapSpec::Implicit { of } => Ok(implicit_map(&resolve(of)?)?.map),
        MapSpec::Gamma { f, g } => Ok(gamma_map(&resolve(f)?, &resolve(g)?)?.map),
    }
}

/// A map given by name (library) or as an inline JSON description over the library.
pub fn map_from_text(text: &str) -> Result<MapHandle, MapError> {
    let t = text.trim();
    if !t.starts_with('{') {
        return MapHandle::builtin(t);
    }
    let spec: MapSpec = serde_json::from_str(t).map_err(|e| MapError::Invalid(e.to_string()))?;
    build_map("inline", &spec, &mut |n| MapHandle::builtin(n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactnum::parse_scalar;
    use crate::mfn::pamap::ParamAffine;

    fn s(t: &str) -> Scalar {
        parse_scalar(t).unwrap()
    }

    #[test]
    fn library_fibers() {
        let abs_i = MapHandle::builtin("abs_interval").unwrap();
        assert_eq!(abs_i.eval_fiber(&s("-2")), RSet::from_cell(Cell::closed(s("0"), s("2"))));
        let jump = MapHandle::builtin("jump_two").unwrap();
        assert_eq!(jump.eval_fiber(&s("1")), RSet::point(s("2")));
        assert_eq!(jump.eval_fiber(&s("0")), RSet::from_cell(Cell::closed(s("-1"), s("1"))));
        let img = jump.image_of_cell(&Cell::ball(&s("1"), &s("1/4"))).unwrap();
        assert_eq!(img, RSet::from_parts(vec![Cell::closed(s("-1"), s("1"))], vec![s("2")]));
        let img = abs_i.image_of_cell(&Cell::ball(&s("1"), &s("1/2"))).unwrap();
        assert_eq!(img, RSet::from_cell(Cell::closed_open(s("0"), s("3/2"))));
    }

    #[test]
    fn calculus() {
        let abs_i = MapHandle::builtin("abs_interval").unwrap();
        let sum = MapHandle::sum_maps(&abs_i, &abs_i).unwrap();
        assert_eq!(sum.eval_fiber(&s("-3/2")), RSet::from_cell(Cell::closed(s("0"), s("3"))));
        let shelf = MapHandle::sum_maps(&MapHandle::builtin("unit_shelf").unwrap(), &MapHandle::builtin("const_12").unwrap())
            .unwrap();
        assert_eq!(shelf.eval_fiber(&s("1")), RSet::from_cell(Cell::closed(s("1"), s("4"))));
        assert_eq!(shelf.eval_fiber(&s("2")), RSet::from_cell(Cell::closed(s("2"), s("4"))));
        let d = MapHandle::diff_map(&MapHandle::builtin("linear_2x").unwrap(), &MapHandle::builtin("identity").unwrap())
            .unwrap();
        assert_eq!(d.eval_fiber(&s("3")), RSet::point(s("3")));
        let inv = abs_i.invert().unwrap();
        assert_eq!(
            inv.eval_fiber(&s("2")),
            RSet::from_parts(vec![Cell::upto(s("-2"), true), Cell::from(s("2"), true)], vec![])
        );
    }

    #[test]
    fn implicit_and_gamma() {
        let h = ParamMap::uniform(
            ParamAffine::new(s("-3/2"), s("1"), s("0")),
            ParamAffine::new(s("-3/2"), s("1"), s("1")),
        );
        let sm = implicit_map(&MapHandle::from_param("H", &h)).unwrap();
        assert_eq!(sm.eval(&[s("3")]), RSet::from_cell(Cell::closed(s("2"), s("8/3"))));
        let f = ParamMap::uniform(ParamAffine::new(s("1"), s("1"), s("-1")), ParamAffine::new(s("1"), s("1"), s("1")));
        let g = MapHandle::builtin("linear_2x").unwrap();
        let gm = gamma_map(&MapHandle::from_param("F", &f), &g).unwrap();
        assert_eq!(gm.eval(&[s("1"), s("1")]), RSet::from_cell(Cell::closed(s("-4"), s("-2"))));
        assert!(gamma_map(&MapHandle::from_param("F", &f), &MapHandle::builtin("abs_interval").unwrap()).is_err());
    }

    #[test]
    fn sequence_sum_fiber_contains_irrational() {
        let f = MapHandle::builtin("rat_tail").unwrap();
        let g = MapHandle::builtin("rat_tail_seq").unwrap();
        let sum = MapHandle::sum_maps(&f, &g).unwrap();
        let w = Scalar::sqrt2().checked_div(&s("5")).unwrap();
        assert!(sum.eval_fiber(&RatTailSeq::point(5)).contains(&w));
        assert!(sum.eval_fiber(&s("1/3")).contains(&w));
        let x2 = RatTailSeq::point(2);
        assert!(!sum.eval_fiber(&x2).contains(&w));
    }
}
