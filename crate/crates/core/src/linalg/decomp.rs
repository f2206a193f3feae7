use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::matrix::{ComplexMatrix, ZERO};
use crate::error::{Error, Result};

/// Numerical tolerances shared by rank decisions and verification.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerance {
    /// Relative rank cutoff applied to the largest singular value.
    /// `None` selects `max(rows, cols) * f64::EPSILON` per call.
    pub rank_rtol: Option<f64>,
    /// Relative Frobenius residual accepted by verification checks.
    pub residual: f64,
    /// Upper bound on the condition number of the invertible core `GF`.
    pub max_core_condition: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            rank_rtol: None,
            residual: 1e-8,
            max_core_condition: 1e12,
        }
    }
}

impl Tolerance {
    pub fn new(rank_rtol: Option<f64>, residual: f64) -> Result<Self> {
        let tol = Tolerance {
            rank_rtol,
            residual,
            ..Tolerance::default()
        };
        tol.validate()?;
        Ok(tol)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |x: f64| x.is_finite() && x > 0.0;
        if let Some(r) = self.rank_rtol {
            if !positive(r) {
                return Err(Error::InvalidTolerance(format!("rank_rtol must be > 0, got {r}")));
            }
        }
        if !positive(self.residual) {
            return Err(Error::InvalidTolerance(format!(
                "residual tolerance must be > 0, got {}",
                self.residual
            )));
        }
        if self.max_core_condition.is_nan() || self.max_core_condition <= 1.0 {
            return Err(Error::InvalidTolerance(format!(
                "max_core_condition must be > 1, got {}",
                self.max_core_condition
            )));
        }
        Ok(())
    }

    pub fn rank_factor(&self, rows: usize, cols: usize) -> f64 {
        self.rank_rtol.unwrap_or(rows.max(cols) as f64 * f64::EPSILON)
    }

    /// Absolute singular-value threshold for a `rows x cols` matrix whose
    /// largest singular value is `sigma_max`.
    pub fn rank_cutoff(&self, rows: usize, cols: usize, sigma_max: f64) -> f64 {
        self.rank_factor(rows, cols) * sigma_max
    }
}

/// Thin singular value decomposition `A = U diag(s) V*`.
///
/// `u` is `m x k` and `v` is `n x k` with `k = min(m, n)`; both have
/// orthonormal columns. Singular values are sorted non-increasing.
#[derive(Debug, Clone)]
pub struct SvdResult {
    pub u: ComplexMatrix,
    pub singular_values: Vec<f64>,
    pub v: ComplexMatrix,
}

impl SvdResult {
    pub fn reconstruct(&self) -> ComplexMatrix {
        let us = scale_columns(&self.u, &self.singular_values);
        &us * &self.v.conj_transpose()
    }

    pub fn sigma_max(&self) -> f64 {
        self.singular_values.first().copied().unwrap_or(0.0)
    }

    /// Number of singular values strictly above the cutoff.
    pub fn rank(&self, cutoff: f64) -> usize {
        self.singular_values.iter().filter(|&&s| s > cutoff).count()
    }
}

pub(crate) fn scale_columns(m: &ComplexMatrix, s: &[f64]) -> ComplexMatrix {
    ComplexMatrix::from_fn(m.rows(), m.cols(), |i, j| m.get(i, j) * s[j])
}

pub fn svd(a: &ComplexMatrix) -> Result<SvdResult> {
    let fa = a.to_faer();
    let decomp = fa.thin_svd().map_err(|_| Error::SvdNonConvergence {
        input: Box::new(a.clone()),
    })?;
    let (u, v) = (decomp.U(), decomp.V());
    let sd = decomp.S().column_vector();
    let sv: Vec<f64> = (0..sd.nrows()).map(|i| sd[i].re).collect();
    if sv.iter().any(|s| !s.is_finite()) {
        return Err(Error::SvdNonConvergence {
            input: Box::new(a.clone()),
        });
    }

    let mut order: Vec<usize> = (0..sv.len()).collect();
    order.sort_by(|&i, &j| sv[j].total_cmp(&sv[i]));

    let k = sv.len();
    let u_sorted = ComplexMatrix::from_fn(a.rows(), k, |i, j| u[(i, order[j])]);
    let v_sorted = ComplexMatrix::from_fn(a.cols(), k, |i, j| v[(i, order[j])]);
    let s_sorted = order.iter().map(|&i| sv[i]).collect();
    Ok(SvdResult {
        u: u_sorted,
        singular_values: s_sorted,
        v: v_sorted,
    })
}

pub fn rank_with_tol(a: &ComplexMatrix, tol: &Tolerance) -> Result<usize> {
    let s = svd(a)?;
    Ok(s.rank(tol.rank_cutoff(a.rows(), a.cols(), s.sigma_max())))
}

/// `sigma_max / sigma_min`; infinite for singular or empty spectra.
pub fn condition_number(a: &ComplexMatrix) -> Result<f64> {
    let s = svd(a)?;
    let min = s.singular_values.last().copied().unwrap_or(0.0);
    Ok(if min > 0.0 { s.sigma_max() / min } else { f64::INFINITY })
}

pub fn invert(a: &ComplexMatrix, tol: &Tolerance) -> Result<ComplexMatrix> {
    let n = a.ensure_square()?;
    let s = svd(a)?;
    let cutoff = tol.rank_cutoff(n, n, s.sigma_max());
    let rank = s.rank(cutoff);
    if rank < n {
        return Err(Error::Singular { rank, n });
    }
    let inv_s: Vec<f64> = s.singular_values.iter().map(|x| 1.0 / x).collect();
    Ok(&scale_columns(&s.v, &inv_s) * &s.u.conj_transpose())
}

/// Solves `a x = b` for square nonsingular `a`.
pub fn solve(a: &ComplexMatrix, b: &ComplexMatrix, tol: &Tolerance) -> Result<ComplexMatrix> {
    if a.rows() != b.rows() {
        return Err(Error::DimensionMismatch {
            op: "solve",
            left: a.shape(),
            right: b.shape(),
        });
    }
    Ok(&invert(a, tol)? * b)
}

/// `I - p` for a square `p`.
pub fn identity_minus(p: &ComplexMatrix) -> ComplexMatrix {
    ComplexMatrix::from_fn(p.rows(), p.cols(), |i, j| {
        let delta = if i == j { Complex64::new(1.0, 0.0) } else { ZERO };
        delta - p.get(i, j)
    })
}
