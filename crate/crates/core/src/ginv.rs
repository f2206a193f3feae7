//! Group inverse, Moore-Penrose pseudoinverse and related projectors.
//!
//! A square `a` has a group inverse `a#` (the unique `x` with `axa = a`,
//! `xax = x`, `ax = xa`) iff `rank(a) = rank(a^2)`. The primary algorithm
//! uses the full-rank factorization read off the SVD: with `a = F G`,
//! `F = U_r S_r` and `G = V_r*`, the group inverse exists iff the `r x r`
//! core `GF` is invertible, and then `a# = F (GF)^-2 G`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    condition_number, identity_minus, invert, scale_columns, svd, ComplexMatrix, SvdResult, Tolerance,
};

/// Outcome of the `rank(a) = rank(a^2)` test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupInvertibility {
    pub invertible: bool,
    pub rank: usize,
    pub rank_sq: usize,
    /// Some singular value of `a` or `a^2` sits within 10x of the rank cutoff.
    pub marginal: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroupInverseResult {
    pub ginv: ComplexMatrix,
    pub rank: usize,
    /// `a a#`
    pub group_projector: ComplexMatrix,
    /// `a^pi = I - a a#`
    pub spectral_projector: ComplexMatrix,
    /// Condition number of the invertible core `GF` (1 for the zero matrix).
    pub core_condition: f64,
    pub marginal: bool,
}

fn near_cutoff(s: &SvdResult, cutoff: f64) -> bool {
    cutoff > 0.0
        && s.singular_values
            .iter()
            .any(|&x| x > cutoff / 10.0 && x <= cutoff * 10.0)
}

struct RankProbe {
    svd: SvdResult,
    info: GroupInvertibility,
}

fn probe(a: &ComplexMatrix, tol: &Tolerance) -> Result<RankProbe> {
    let n = a.ensure_square()?;
    let s1 = svd(a)?;
    let c1 = tol.rank_cutoff(n, n, s1.sigma_max());
    let rank = s1.rank(c1);
    let s2 = svd(&(a * a))?;
    // Rounding in the product scales with |a|^2, not |a^2|.
    let c2 = tol.rank_cutoff(n, n, s1.sigma_max().powi(2));
    let rank_sq = s2.rank(c2);
    let info = GroupInvertibility {
        invertible: rank == rank_sq,
        rank,
        rank_sq,
        marginal: near_cutoff(&s1, c1) || near_cutoff(&s2, c2),
    };
    Ok(RankProbe { svd: s1, info })
}

pub fn is_group_invertible(a: &ComplexMatrix, tol: &Tolerance) -> Result<GroupInvertibility> {
    Ok(probe(a, tol)?.info)
}

fn not_group_invertible(info: &GroupInvertibility) -> Error {
    Error::NotGroupInvertible {
        rank: info.rank,
        rank_sq: info.rank_sq,
        marginal: info.marginal,
    }
}

pub fn group_inverse(a: &ComplexMatrix, tol: &Tolerance) -> Result<GroupInverseResult> {
    let RankProbe { svd: s, info } = probe(a, tol)?;
    if !info.invertible {
        return Err(not_group_invertible(&info));
    }
    let n = a.rows();
    let r = info.rank;
    let (ginv, core_condition) = if r == 0 {
        (ComplexMatrix::zeros(n, n), 1.0)
    } else {
        let f = scale_columns(&s.u.sub_block(0, 0, n, r), &s.singular_values[..r]);
        let g = s.v.sub_block(0, 0, n, r).conj_transpose();
        let core = &g * &f;
        let cond = condition_number(&core)?;
        if cond.is_nan() || cond > tol.max_core_condition {
            return Err(Error::IllConditionedCore {
                condition: cond,
                bound: tol.max_core_condition,
            });
        }
        let core_inv = invert(&core, tol)?;
        (&(&(&f * &core_inv) * &core_inv) * &g, cond)
    };
    let group_projector = a * &ginv;
    let spectral_projector = identity_minus(&group_projector);
    Ok(GroupInverseResult {
        ginv,
        rank: r,
        group_projector,
        spectral_projector,
        core_condition,
        marginal: info.marginal,
    })
}

/// Cline's formula `a (a^3)+ a`, kept as an oracle independent of the
/// factorization path. The pseudoinverse of `a^3` is truncated to `rank(a)`.
pub fn group_inverse_cline(a: &ComplexMatrix, tol: &Tolerance) -> Result<ComplexMatrix> {
    let info = is_group_invertible(a, tol)?;
    if !info.invertible {
        return Err(not_group_invertible(&info));
    }
    let cube = &(a * a) * a;
    let pinv = truncated_pinv(&svd(&cube)?, info.rank);
    Ok(&(a * &pinv) * a)
}

fn truncated_pinv(s: &SvdResult, r: usize) -> ComplexMatrix {
    let (m, n) = (s.u.rows(), s.v.rows());
    if r == 0 {
        return ComplexMatrix::zeros(n, m);
    }
    let inv: Vec<f64> = s.singular_values[..r].iter().map(|x| 1.0 / x).collect();
    let v_r = scale_columns(&s.v.sub_block(0, 0, n, r), &inv);
    &v_r * &s.u.sub_block(0, 0, m, r).conj_transpose()
}

pub fn moore_penrose(a: &ComplexMatrix, tol: &Tolerance) -> Result<ComplexMatrix> {
    let s = svd(a)?;
    let r = s.rank(tol.rank_cutoff(a.rows(), a.cols(), s.sigma_max()));
    Ok(truncated_pinv(&s, r))
}

pub fn spectral_projector(r: &GroupInverseResult) -> ComplexMatrix {
    identity_minus(&r.group_projector)
}

/// Group inverse of the upper block-triangular `[[x, y], [0, w]]`.
///
/// Requires `x^pi y w^pi = 0`; the off-diagonal block is
/// `z = (x#)^2 y w^pi + x^pi y (w#)^2 - x# y w#`.
pub fn triangular_block_ginv(
    x: &ComplexMatrix,
    y: &ComplexMatrix,
    w: &ComplexMatrix,
    tol: &Tolerance,
) -> Result<ComplexMatrix> {
    let p = x.ensure_square()?;
    let q = w.ensure_square()?;
    if y.shape() != (p, q) {
        return Err(Error::DimensionMismatch {
            op: "triangular_block_ginv",
            left: (p, q),
            right: y.shape(),
        });
    }
    let xr = group_inverse(x, tol)?;
    let wr = group_inverse(w, tol)?;
    let (xg, xpi) = (&xr.ginv, &xr.spectral_projector);
    let (wg, wpi) = (&wr.ginv, &wr.spectral_projector);

    let defect = &(xpi * y) * wpi;
    let scale = (xpi.frobenius_norm() * y.frobenius_norm() * wpi.frobenius_norm()).max(1.0);
    let residual = defect.frobenius_norm() / scale;
    if residual > tol.residual {
        return Err(Error::ConditionViolated { residual });
    }

    let z = &(&(&(&(xg * xg) * y) * wpi) + &(&(xpi * y) * &(wg * wg))) - &(&(xg * y) * wg);
    ComplexMatrix::block2x2(xg, &z, &ComplexMatrix::zeros(q, p), wg)
}

/// Relative residuals of the three group-inverse identities for a candidate `x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxiomReport {
    /// `‖a x a − a‖ / ‖a‖`
    pub axiom_1: f64,
    /// `‖x a x − x‖ / max(‖x‖, eps)`
    pub axiom_2: f64,
    /// `‖a x − x a‖ / (‖a‖ ‖x‖)`
    pub axiom_3: f64,
    pub tol: f64,
    pub pass: bool,
}

impl AxiomReport {
    pub fn worst(&self) -> f64 {
        self.axiom_1.max(self.axiom_2).max(self.axiom_3)
    }
}

/// Replaces NaN and infinities by `f64::MAX` so reports stay serializable.
pub(crate) fn sanitize(x: f64) -> f64 {
    if x.is_finite() {
        x.abs()
    } else {
        f64::MAX
    }
}

pub fn verify_group_axioms(a: &ComplexMatrix, x: &ComplexMatrix, tol: &Tolerance) -> Result<AxiomReport> {
    a.ensure_square()?;
    if a.shape() != x.shape() {
        return Err(Error::DimensionMismatch {
            op: "verify_group_axioms",
            left: a.shape(),
            right: x.shape(),
        });
    }
    let eps = f64::EPSILON;
    let na = a.frobenius_norm();
    let nx = x.frobenius_norm();
    let ax = a * x;
    let xa = x * a;
    let axiom_1 = sanitize((&(&ax * a) - a).frobenius_norm() / na.max(eps));
    let axiom_2 = sanitize((&(&xa * x) - x).frobenius_norm() / nx.max(eps));
    let axiom_3 = sanitize((&ax - &xa).frobenius_norm() / (na * nx).max(eps));
    let pass = axiom_1 <= tol.residual && axiom_2 <= tol.residual && axiom_3 <= tol.residual;
    Ok(AxiomReport {
        axiom_1,
        axiom_2,
        axiom_3,
        tol: tol.residual,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::ONE;

    fn tol() -> Tolerance {
        Tolerance::default()
    }

    fn m(rows: &[[f64; 2]]) -> ComplexMatrix {
        ComplexMatrix::from_real(rows)
    }

    fn assert_close(a: &ComplexMatrix, b: &ComplexMatrix, t: f64) {
        let d = a.max_abs_diff(b);
        assert!(d <= t, "max diff {d:e} > {t:e}\n{a:?}\n{b:?}");
    }

    #[test]
    fn group_invertibility_decisions() {
        let b = is_group_invertible(&m(&[[0.0, 1.0], [0.0, 1.0]]), &tol()).unwrap();
        assert!(b.invertible && b.rank == 1 && b.rank_sq == 1);
        let n = is_group_invertible(&m(&[[0.0, 1.0], [0.0, 0.0]]), &tol()).unwrap();
        assert!(!n.invertible && n.rank == 1 && n.rank_sq == 0);
        assert!(
            is_group_invertible(&ComplexMatrix::identity(3), &tol())
                .unwrap()
                .invertible
        );
        assert!(matches!(
            is_group_invertible(&ComplexMatrix::zeros(2, 3), &tol()),
            Err(Error::NotSquare { .. })
        ));
    }

    #[test]
    fn marginal_flag_near_cutoff() {
        let cut = 2.0 * f64::EPSILON;
        let a = ComplexMatrix::from_real_diag(&[1.0, 3.0 * cut]);
        assert!(is_group_invertible(&a, &tol()).unwrap().marginal);
        assert!(
            !is_group_invertible(&ComplexMatrix::identity(2), &tol())
                .unwrap()
                .marginal
        );
    }

    #[test]
    fn example_matrices() {
        let a = m(&[[-1.0, -1.0], [1.0, -3.0]]);
        let r = group_inverse(&a, &tol()).unwrap();
        assert_close(&r.ginv, &m(&[[-0.75, 0.25], [-0.25, -0.25]]), 1e-15);
        assert_eq!(r.rank, 2);

        let b = m(&[[0.0, 1.0], [0.0, 1.0]]);
        let rb = group_inverse(&b, &tol()).unwrap();
        assert_close(&rb.ginv, &b, 1e-15);
        assert_close(&spectral_projector(&rb), &m(&[[1.0, -1.0], [0.0, 0.0]]), 1e-15);
    }

    #[test]
    fn diagonal_and_nilpotent() {
        let d = ComplexMatrix::from_real_diag(&[2.0, 0.0]);
        let r = group_inverse(&d, &tol()).unwrap();
        assert_close(&r.ginv, &ComplexMatrix::from_real_diag(&[0.5, 0.0]), 1e-15);
        assert_close(
            &r.spectral_projector,
            &ComplexMatrix::from_real_diag(&[0.0, 1.0]),
            1e-15,
        );

        let err = group_inverse(&m(&[[0.0, 1.0], [0.0, 0.0]]), &tol()).unwrap_err();
        assert!(matches!(
            err,
            Error::NotGroupInvertible {
                rank: 1,
                rank_sq: 0,
                ..
            }
        ));
    }

    #[test]
    fn zero_matrix_and_invertible_projector() {
        let r = group_inverse(&ComplexMatrix::zeros(3, 3), &tol()).unwrap();
        assert_eq!(r.ginv, ComplexMatrix::zeros(3, 3));
        assert_eq!(r.spectral_projector, ComplexMatrix::identity(3));

        let a = m(&[[2.0, 1.0], [0.0, 3.0]]);
        let r = group_inverse(&a, &tol()).unwrap();
        assert_close(&r.spectral_projector, &ComplexMatrix::zeros(2, 2), 1e-15);
    }

    #[test]
    fn projectors_sum_to_identity() {
        let a = m(&[[1.0, 2.0], [0.5, 1.0]]);
        let r = group_inverse(&a, &tol()).unwrap();
        let sum = &r.group_projector + &r.spectral_projector;
        assert_close(&sum, &ComplexMatrix::identity(2), 2.0 * f64::EPSILON);
    }

    #[test]
    fn ill_conditioned_core_is_reported() {
        let a = ComplexMatrix::from_real_diag(&[1.0, 1e-7]);
        let strict = Tolerance {
            max_core_condition: 1e6,
            ..Tolerance::default()
        };
        assert!(matches!(
            group_inverse(&a, &strict),
            Err(Error::IllConditionedCore { .. })
        ));
        assert!(group_inverse(&a, &tol()).is_ok());
    }

    #[test]
    fn cline_oracle_on_examples() {
        let a = m(&[[-1.0, -1.0], [1.0, -3.0]]);
        assert_close(
            &group_inverse_cline(&a, &tol()).unwrap(),
            &m(&[[-0.75, 0.25], [-0.25, -0.25]]),
            1e-14,
        );
        let p = m(&[[1.0, 1.0], [0.0, 0.0]]);
        assert_close(&group_inverse_cline(&p, &tol()).unwrap(), &p, 1e-14);
        assert!(group_inverse_cline(&m(&[[0.0, 1.0], [0.0, 0.0]]), &tol()).is_err());
    }

    #[test]
    fn moore_penrose_basics() {
        assert_close(
            &moore_penrose(&ComplexMatrix::identity(3), &tol()).unwrap(),
            &ComplexMatrix::identity(3),
            1e-15,
        );
        assert_eq!(
            moore_penrose(&ComplexMatrix::zeros(2, 3), &tol()).unwrap(),
            ComplexMatrix::zeros(3, 2)
        );
        assert_close(
            &moore_penrose(&ComplexMatrix::from_real_diag(&[2.0, 0.0]), &tol()).unwrap(),
            &ComplexMatrix::from_real_diag(&[0.5, 0.0]),
            1e-15,
        );
    }

    #[test]
    fn triangular_with_zero_coupling_is_block_diagonal() {
        let x = m(&[[2.0, 1.0], [0.0, 0.0]]);
        let w = ComplexMatrix::from_real_diag(&[4.0, 0.0]);
        let y = ComplexMatrix::zeros(2, 2);
        let t = triangular_block_ginv(&x, &y, &w, &tol()).unwrap();
        let xg = group_inverse(&x, &tol()).unwrap().ginv;
        let wg = group_inverse(&w, &tol()).unwrap().ginv;
        let expected =
            ComplexMatrix::block2x2(&xg, &ComplexMatrix::zeros(2, 2), &ComplexMatrix::zeros(2, 2), &wg).unwrap();
        assert_close(&t, &expected, 1e-15);
    }

    #[test]
    fn triangular_invertible_over_zero() {
        // [[2, 3], [0, 0]]: z = x^-2 y = 3/4. Axioms checked by hand:
        // M X = X M = [[1, 3/2], [0, 0]] and M X M = M.
        let x = ComplexMatrix::from_real(&[[2.0]]);
        let y = ComplexMatrix::from_real(&[[3.0]]);
        let w = ComplexMatrix::zeros(1, 1);
        let t = triangular_block_ginv(&x, &y, &w, &tol()).unwrap();
        assert_close(&t, &m(&[[0.5, 0.75], [0.0, 0.0]]), 1e-15);
        let full = m(&[[2.0, 3.0], [0.0, 0.0]]);
        assert!(verify_group_axioms(&full, &t, &tol()).unwrap().pass);
    }

    #[test]
    fn triangular_condition_violation() {
        // x = w = 0 and y != 0 gives the nilpotent [[0, 1], [0, 0]].
        let z = ComplexMatrix::zeros(1, 1);
        let y = ComplexMatrix::from_real(&[[1.0]]);
        assert!(matches!(
            triangular_block_ginv(&z, &y, &z, &tol()),
            Err(Error::ConditionViolated { .. })
        ));
        let nil = m(&[[0.0, 1.0], [0.0, 0.0]]);
        assert!(matches!(
            triangular_block_ginv(&nil, &ComplexMatrix::zeros(2, 1), &z, &tol()),
            Err(Error::NotGroupInvertible { .. })
        ));
    }

    #[test]
    fn axioms_on_example_sum() {
        let sum = m(&[[-1.0, 0.0], [1.0, -2.0]]);
        let x = m(&[[-1.0, 0.0], [-0.5, -0.5]]);
        let rep = verify_group_axioms(&sum, &x, &tol()).unwrap();
        assert!(rep.pass, "{rep:?}");
        assert!(rep.worst() < 1e-15);
    }

    #[test]
    fn axioms_for_inverse_pair() {
        let a = m(&[[4.0, 1.0], [2.0, 3.0]]);
        let ai = invert(&a, &tol()).unwrap();
        assert!(verify_group_axioms(&a, &ai, &tol()).unwrap().pass);
    }

    #[test]
    fn nilpotent_never_passes() {
        // Exhaustive over x with entries in {-1, 0, 1}. If axiom 3 held, then
        // N = N x N = x N^2 = 0, so axioms 1 and 3 cannot both pass.
        let n = m(&[[0.0, 1.0], [0.0, 0.0]]);
        let vals = [-1.0, 0.0, 1.0];
        let mut axiom1_failures = 0;
        for code in 0..81usize {
            let e = |k: usize| vals[(code / 3usize.pow(k as u32)) % 3];
            let x = m(&[[e(0), e(1)], [e(2), e(3)]]);
            let rep = verify_group_axioms(&n, &x, &tol()).unwrap();
            assert!(!rep.pass, "x = {x:?}");
            assert!(rep.axiom_1 > 0.5 || rep.axiom_3 > 0.5);
            if rep.axiom_1 > 0.5 {
                axiom1_failures += 1;
            }
        }
        // x = [[0,0],[1,0]] satisfies N x N = N, so axiom 1 alone does not always fail.
        assert!(axiom1_failures < 81);
        let x = m(&[[0.0, 0.0], [1.0, 0.0]]);
        let rep = verify_group_axioms(&n, &x, &tol()).unwrap();
        assert!(rep.axiom_1 < 1e-15 && rep.axiom_3 > 0.5);
    }

    #[test]
    fn complex_scalar_case() {
        let a = ComplexMatrix::from_diag(&[num_complex::Complex64::new(0.0, 2.0)]);
        let r = group_inverse(&a, &tol()).unwrap();
        assert!((r.ginv.get(0, 0) - num_complex::Complex64::new(0.0, -0.5)).norm() < 1e-15);
        assert!((r.group_projector.get(0, 0) - ONE).norm() < 1e-15);
    }
}
