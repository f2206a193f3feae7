//! Group inverses of complex matrices, additive group-inverse formulas for
//! sums `a + b`, and group-invertibility checks for 2x2 block matrices.

pub mod error;
pub mod ginv;
pub mod linalg;

pub use error::{Error, Result};
pub mod additive;
pub mod blockmat;
pub mod gen;
pub mod harness;
pub mod theorem;
