//! Exact linear arithmetic: ordered rings, Fourier-Motzkin elimination, and
//! a small solver for existential formulas over linear constraints.

pub mod fm;
pub mod formula;
pub mod ring;

pub use fm::{Constraint, Rel};
pub use formula::Formula;
pub use ring::{Eps, OrderedRing};
