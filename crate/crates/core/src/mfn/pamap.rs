//! Piecewise-affine interval-valued maps and their parametric analogue.

use serde::{Deserialize, Serialize};

use super::graph::{cell_constraints, lin, Atom, GraphMap};
use super::MapError;
use crate::exactnum::Scalar;
use crate::linear::fm::{self, Constraint, Rel};
use crate::rset::{Cell, CellLiteral, Density, RSet, RSetLiteral};

/// `a x + b`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Affine {
    pub a: Scalar,
    pub b: Scalar,
}

impl Affine {
    pub fn new(a: Scalar, b: Scalar) -> Affine {
        Affine { a, b }
    }

    pub fn constant(b: Scalar) -> Affine {
        Affine::new(Scalar::zero(), b)
    }

    pub fn at(&self, x: &Scalar) -> Scalar {
        &(&self.a * x) + &self.b
    }
}

/// `ax x + ap p + b`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamAffine {
    pub ax: Scalar,
    pub ap: Scalar,
    pub b: Scalar,
}

impl ParamAffine {
    pub fn new(ax: Scalar, ap: Scalar, b: Scalar) -> ParamAffine {
        ParamAffine { ax, ap, b }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Piece {
    pub dom: Cell,
    /// `None` is an unbounded end.
    pub lower: Option<Affine>,
    pub upper: Option<Affine>,
    pub lower_closed: bool,
    pub upper_closed: bool,
    pub dense: bool,
}

impl Piece {
    pub fn closed(dom: Cell, lower: Affine, upper: Affine) -> Piece {
        Piece { dom, lower: Some(lower), upper: Some(upper), lower_closed: true, upper_closed: true, dense: false }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FiberMode {
    Add,
    Replace,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Exceptional {
    pub x: Scalar,
    pub set: RSet,
    pub mode: FiberMode,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PaMap {
    pub pieces: Vec<Piece>,
    pub exceptional: Vec<Exceptional>,
}

/// `lo (rel) expr` constraints for the fiber bounds of a piece over vars `[ins.., y]`.
fn bound_constraints(
    n: usize,
    lower: Option<(&[(usize, Scalar)], &Scalar)>,
    upper: Option<(&[(usize, Scalar)], &Scalar)>,
    lower_closed: bool,
    upper_closed: bool,
    y: usize,
) -> Vec<Constraint<Scalar>> {
    let mut out = Vec::new();
    if let Some(lower) = lower {
        // lower(x) - y (rel) 0
        let mut lt: Vec<(usize, Scalar)> = lower.0.to_vec();
        lt.push((y, Scalar::int(-1)));
        out.push(lin(n, &lt, lower.1.clone(), if lower_closed { Rel::Le } else { Rel::Lt }));
    }
    if let Some(upper) = upper {
        let mut ut: Vec<(usize, Scalar)> = upper.0.iter().map(|(i, a)| (*i, -a)).collect();
        ut.push((y, Scalar::one()));
        out.push(lin(n, &ut, -upper.1, if upper_closed { Rel::Le } else { Rel::Lt }));
    }
    out
}

fn set_atoms(x0: &Scalar, set: &RSet) -> Result<Vec<Atom>, MapError> {
    let mut atoms = Vec::new();
    let at_x0 = lin(2, &[(0, Scalar::one())], -x0, Rel::Eq);
    for c in set.cells() {
        let dense = match &c.density {
            Density::Solid => false,
            Density::Dense(o) if num_traits::Zero::is_zero(o) => true,
            Density::Dense(_) => {
                return Err(MapError::Invalid("exceptional fibers support rational dense cells only".into()))
            }
        };
        let mut cs = cell_constraints(c, 1, 2);
        cs.push(at_x0.clone());
        atoms.push(Atom::new(cs, dense));
    }
    for p in set.points() {
        atoms.push(Atom::new(vec![at_x0.clone(), lin(2, &[(1, Scalar::one())], -p, Rel::Eq)], false));
    }
    Ok(atoms)
}

impl PaMap {
    pub fn new(pieces: Vec<Piece>, exceptional: Vec<Exceptional>) -> Result<PaMap, MapError> {
        let m = PaMap { pieces, exceptional };
        m.validate()?;
        Ok(m)
    }

    fn piece_atom(p: &Piece) -> Atom {
        let lo = p.lower.as_ref().map(|l| [(0, l.a.clone())]);
        let hi = p.upper.as_ref().map(|u| [(0, u.a.clone())]);
        let mut cs = cell_constraints(&p.dom, 0, 2);
        cs.extend(bound_constraints(
            2,
            lo.as_ref().map(|t| (&t[..], &p.lower.as_ref().expect("some").b)),
            hi.as_ref().map(|t| (&t[..], &p.upper.as_ref().expect("some").b)),
            p.lower_closed,
            p.upper_closed,
            1,
        ));
        Atom::new(cs, p.dense)
    }

    fn validate(&self) -> Result<(), MapError> {
        for (i, p) in self.pieces.iter().enumerate() {
            if p.dom.density != Density::Solid {
                return Err(MapError::Invalid(format!("piece {i}: domain must be solid")));
            }
            // lower(x) > upper(x) somewhere on the domain?
            if let (Some(lo), Some(hi)) = (&p.lower, &p.upper) {
                let mut cs = cell_constraints(&p.dom, 0, 1);
                cs.push(lin(1, &[(0, &hi.a - &lo.a)], &hi.b - &lo.b, Rel::Lt));
                if fm::feasible(&cs) {
                    return Err(MapError::Invalid(format!("piece {i}: lower bound exceeds upper bound")));
                }
            }
            for (j, q) in self.pieces.iter().enumerate().skip(i + 1) {
                let mut both = cell_constraints(&p.dom, 0, 1);
                both.extend(cell_constraints(&q.dom, 0, 1));
                if fm::feasible(&both) {
                    return Err(MapError::Invalid(format!("pieces {i} and {j} have overlapping domains")));
                }
            }
        }
        for e in &self.exceptional {
            set_atoms(&e.x, &e.set)?;
        }
        Ok(())
    }

    pub fn to_graph(&self) -> GraphMap {
        let mut atoms = Vec::new();
        for p in &self.pieces {
            let base = PaMap::piece_atom(p);
            let mut cuts: Vec<&Scalar> =
                self.exceptional.iter().filter(|e| e.mode == FiberMode::Replace).map(|e| &e.x).collect();
            cuts.sort();
            cuts.dedup();
            // Remove the replaced abscissae from the piece: split into open slabs.
            let mut slabs: Vec<Vec<Constraint<Scalar>>> = vec![vec![]];
            for x0 in cuts {
                let mut next = Vec::new();
                for s in slabs {
                    let mut left = s.clone();
                    left.push(lin(2, &[(0, Scalar::one())], -x0, Rel::Lt));
                    let mut right = s;
                    right.push(lin(2, &[(0, Scalar::int(-1))], x0.clone(), Rel::Lt));
                    next.push(left);
                    next.push(right);
                }
                slabs = next;
            }
            for s in slabs {
                let mut cs = base.cons.clone();
                cs.extend(s);
                atoms.push(Atom::new(cs, base.dense));
            }
        }
        for e in &self.exceptional {
            atoms.extend(set_atoms(&e.x, &e.set).expect("validated"));
        }
        GraphMap::new(1, atoms)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParamPiece {
    pub dom_x: Cell,
    pub dom_p: Cell,
    pub lower: ParamAffine,
    pub upper: ParamAffine,
    pub lower_closed: bool,
    pub upper_closed: bool,
    pub dense: bool,
}

impl ParamPiece {
    pub fn closed(dom_x: Cell, dom_p: Cell, lower: ParamAffine, upper: ParamAffine) -> ParamPiece {
        ParamPiece { dom_x, dom_p, lower, upper, lower_closed: true, upper_closed: true, dense: false }
    }
}

/// A map `(x, p) -> [lower(x,p), upper(x,p)]` jointly piecewise-affine over rectangles.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamMap {
    pub pieces: Vec<ParamPiece>,
}

impl ParamMap {
    pub fn new(pieces: Vec<ParamPiece>) -> Result<ParamMap, MapError> {
        let m = ParamMap { pieces };
        for (i, p) in m.pieces.iter().enumerate() {
            let mut cs = cell_constraints(&p.dom_x, 0, 2);
            cs.extend(cell_constraints(&p.dom_p, 1, 2));
            let mut bad = cs.clone();
            bad.push(lin(
                2,
                &[(0, &p.upper.ax - &p.lower.ax), (1, &p.upper.ap - &p.lower.ap)],
                &p.upper.b - &p.lower.b,
                Rel::Lt,
            ));
            if fm::feasible(&bad) {
                return Err(MapError::Invalid(format!("piece {i}: lower bound exceeds upper bound")));
            }
            for (j, q) in m.pieces.iter().enumerate().skip(i + 1) {
                let mut both = cs.clone();
                both.extend(cell_constraints(&q.dom_x, 0, 2));
                both.extend(cell_constraints(&q.dom_p, 1, 2));
                if fm::feasible(&both) {
                    return Err(MapError::Invalid(format!("pieces {i} and {j} have overlapping domains")));
                }
            }
        }
        Ok(m)
    }

    /// A single affine piece over the whole plane.
    pub fn uniform(lower: ParamAffine, upper: ParamAffine) -> ParamMap {
        ParamMap::new(vec![ParamPiece::closed(Cell::real_line(), Cell::real_line(), lower, upper)])
            .expect("valid uniform map")
    }

    pub fn to_graph(&self) -> GraphMap {
        let atoms = self
            .pieces
            .iter()
            .map(|p| {
                let mut cs = cell_constraints(&p.dom_x, 0, 3);
                cs.extend(cell_constraints(&p.dom_p, 1, 3));
                cs.extend(bound_constraints(
                    3,
                    Some((&[(0, p.lower.ax.clone()), (1, p.lower.ap.clone())], &p.lower.b)),
                    Some((&[(0, p.upper.ax.clone()), (1, p.upper.ap.clone())], &p.upper.b)),
                    p.lower_closed,
                    p.upper_closed,
                    2,
                ));
                Atom::new(cs, p.dense)
            })
            .collect();
        GraphMap::new(2, atoms)
    }
}

/// JSON description of a map.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MapSpec {
    Pa {
        pieces: Vec<PieceSpec>,
        #[serde(default)]
        exceptional: Vec<ExceptionalSpec>,
    },
    Param {
        pieces: Vec<ParamPieceSpec>,
    },
    Builtin {
        name: String,
    },
    Inverse {
        of: String,
    },
    Sum {
        of: Vec<String>,
    },
    Diff {
        f: String,
        g: String,
    },
    ParamSum {
        f: String,
        g: String,
    },
    Implicit {
        of: String,
    },
    Gamma {
        f: String,
        g: String,
    },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PieceSpec {
    pub dom: CellLiteral,
    #[serde(default)]
    pub lower: Option<Affine>,
    #[serde(default)]
    pub upper: Option<Affine>,
    #[serde(default)]
    pub lower_open: bool,
    #[serde(default)]
    pub upper_open: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density: Option<crate::rset::DensityTag>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamPieceSpec {
    pub dom_x: CellLiteral,
    pub dom_p: CellLiteral,
    pub lower: ParamAffine,
    pub upper: ParamAffine,
    #[serde(default)]
    pub lower_open: bool,
    #[serde(default)]
    pub upper_open: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density: Option<crate::rset::DensityTag>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExceptionalSpec {
    pub x: Scalar,
    pub set: RSetLiteral,
    pub mode: FiberMode,
}

fn is_dense(d: &Option<crate::rset::DensityTag>) -> bool {
    matches!(d, Some(crate::rset::DensityTag::Dense))
}

impl PieceSpec {
    pub fn to_piece(&self) -> Result<Piece, MapError> {
        Ok(Piece {
            dom: self.dom.to_cell().map_err(|e| MapError::Invalid(e.to_string()))?,
            lower: self.lower.clone(),
            upper: self.upper.clone(),
            lower_closed: !self.lower_open,
            upper_closed: !self.upper_open,
            dense: is_dense(&self.density),
        })
    }
}

impl ParamPieceSpec {
    pub fn to_piece(&self) -> Result<ParamPiece, MapError> {
        Ok(ParamPiece {
            dom_x: self.dom_x.to_cell().map_err(|e| MapError::Invalid(e.to_string()))?,
            dom_p: self.dom_p.to_cell().map_err(|e| MapError::Invalid(e.to_string()))?,
            lower: self.lower.clone(),
            upper: self.upper.clone(),
            lower_closed: !self.lower_open,
            upper_closed: !self.upper_open,
            dense: is_dense(&self.density),
        })
    }
}

impl ExceptionalSpec {
    pub fn to_exceptional(&self) -> Result<Exceptional, MapError> {
        Ok(Exceptional {
            x: self.x.clone(),
            set: self.set.to_rset().map_err(|e| MapError::Invalid(e.to_string()))?,
            mode: self.mode,
        })
    }
}

/// Finite endpoints of the piece domains (breakpoints), used by samplers.
pub fn breakpoints(g: &GraphMap) -> Vec<Scalar> {
    let mut out = Vec::new();
    for a in &g.atoms {
        for c in &a.cons {
            // constraints of the form a x + k (rel) 0 with only the first input
            let only_first = c.coef.iter().enumerate().all(|(i, v)| i == 0 || v.is_zero());
            if only_first && !c.coef[0].is_zero() {
                out.push((-&c.konst).checked_div(&c.coef[0]).expect("nonzero"));
            }
        }
    }
    out.sort();
    out.dedup();
    out
}
