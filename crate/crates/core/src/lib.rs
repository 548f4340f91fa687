pub mod exactnum;
pub mod rset;
pub mod linear;
pub mod mfn;
pub mod moduli;
pub mod theorems;
#[cfg(feature = "cli")]
pub mod cli;
