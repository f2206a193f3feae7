//! Dense complex matrix arithmetic, SVD-based rank decisions and seeded
//! random matrix synthesis.

mod decomp;
mod matrix;
mod random;

pub(crate) use decomp::scale_columns;
pub use decomp::{condition_number, identity_minus, invert, rank_with_tol, solve, svd, SvdResult, Tolerance};
pub use matrix::{ComplexMatrix, ONE, ZERO};
pub use random::{
    mix_seed, random_general, random_general_with, random_invertible, random_invertible_with, random_unit_scalar,
    random_unitary_with, rng_from_seed, MatrixRng,
};
