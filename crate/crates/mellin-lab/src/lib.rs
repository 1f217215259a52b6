//! Numerical laboratory for edge and Mellin pseudo-differential calculus.

pub mod asympt;
pub mod conormal;
pub mod kco;
pub mod mellin;
pub mod merosym;
pub mod numerics;
pub mod opsym;
pub mod scales;
pub mod twisted;

pub use numerics::{CMat, CVec, C64};
