//! Group invertibility of `M = [[A, C], [B, D]]` with square `n x n` blocks.
//!
//! Each theorem writes `M = P + Q` and reduces to an additive statement;
//! the corresponding corollary applies the theorem to the dual scenario
//! `(Dᵀ, Cᵀ, Bᵀ, Aᵀ)`, whose assembled matrix is
//! `[[Dᵀ, Bᵀ], [Cᵀ, Aᵀ]]`. The corollary's conclusion is therefore about the
//! transpose of that matrix, `[[D, C], [B, A]]` (see [`BlockScenario::target`]).
//!
//! `M#` is always computed directly with [`group_inverse`]; the `P + Q`
//! route is reported as a cross-check.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ginv::{group_inverse, is_group_invertible, verify_group_axioms, AxiomReport};
use crate::linalg::{identity_minus, rank_with_tol, ComplexMatrix, Tolerance};
use crate::theorem::{lambda_serde, normalized_defect, Family, NamedResidual, Theorem};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockScenario {
    pub theorem: Theorem,
    #[serde(with = "lambda_serde")]
    pub lambda: Complex64,
    #[serde(rename = "A")]
    pub a: ComplexMatrix,
    #[serde(rename = "B")]
    pub b: ComplexMatrix,
    #[serde(rename = "C")]
    pub c: ComplexMatrix,
    #[serde(rename = "D")]
    pub d: ComplexMatrix,
}

/// The four blocks of `M = [[A, C], [B, D]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Blocks {
    pub a: ComplexMatrix,
    pub b: ComplexMatrix,
    pub c: ComplexMatrix,
    pub d: ComplexMatrix,
}

pub fn assemble(a: &ComplexMatrix, b: &ComplexMatrix, c: &ComplexMatrix, d: &ComplexMatrix) -> Result<ComplexMatrix> {
    ComplexMatrix::block2x2(a, c, b, d)
}

/// Inverse of [`assemble`] for `n x n` blocks.
pub fn split(m: &ComplexMatrix, n: usize) -> Result<Blocks> {
    if n == 0 || m.shape() != (2 * n, 2 * n) {
        return Err(Error::DimensionMismatch {
            op: "split",
            left: m.shape(),
            right: (2 * n, 2 * n),
        });
    }
    Ok(Blocks {
        a: m.sub_block(0, 0, n, n),
        c: m.sub_block(0, n, n, n),
        b: m.sub_block(n, 0, n, n),
        d: m.sub_block(n, n, n, n),
    })
}

impl BlockScenario {
    pub fn new(
        theorem: Theorem,
        lambda: Complex64,
        a: ComplexMatrix,
        b: ComplexMatrix,
        c: ComplexMatrix,
        d: ComplexMatrix,
    ) -> Result<Self> {
        let s = BlockScenario {
            theorem,
            lambda,
            a,
            b,
            c,
            d,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.theorem.family() != Family::Block {
            return Err(Error::UnknownTheorem(format!(
                "{} is not a block statement",
                self.theorem
            )));
        }
        let n = self.a.ensure_square()?;
        for m in [&self.b, &self.c, &self.d] {
            if m.shape() != (n, n) {
                return Err(Error::DimensionMismatch {
                    op: "block scenario (square blocks required)",
                    left: (n, n),
                    right: m.shape(),
                });
            }
        }
        if !self.lambda.is_finite() {
            return Err(Error::UnsupportedLambda {
                theorem: self.theorem.tag().into(),
                lambda: self.lambda,
                reason: "lambda must be finite".into(),
            });
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.a.rows()
    }

    /// `[[A, C], [B, D]]`
    pub fn assemble(&self) -> ComplexMatrix {
        assemble(&self.a, &self.b, &self.c, &self.d).expect("validated block shapes")
    }

    pub fn blocks(&self) -> Blocks {
        Blocks {
            a: self.a.clone(),
            b: self.b.clone(),
            c: self.c.clone(),
            d: self.d.clone(),
        }
    }

    /// `(A, B, C, D) -> (Dᵀ, Cᵀ, Bᵀ, Aᵀ)`, swapping theorem and corollary
    /// tags. An involution.
    pub fn dual(&self) -> BlockScenario {
        let theorem = self
            .theorem
            .dual_parent()
            .or_else(|| self.theorem.dual_child())
            .expect("every block statement has a dual partner");
        BlockScenario {
            theorem,
            lambda: self.lambda,
            a: self.d.transpose(),
            b: self.c.transpose(),
            c: self.b.transpose(),
            d: self.a.transpose(),
        }
    }

    /// The matrix whose group invertibility the statement asserts:
    /// `[[A, C], [B, D]]` for theorems and `[[D, C], [B, A]]` for corollaries.
    pub fn target(&self) -> ComplexMatrix {
        if self.theorem.dual_parent().is_some() {
            assemble(&self.d, &self.b, &self.c, &self.a).expect("validated block shapes")
        } else {
            self.assemble()
        }
    }
}

/// Hypothesis residuals of one block scenario.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BlockCheck {
    pub theorem: Theorem,
    #[serde(with = "lambda_serde")]
    pub lambda: Complex64,
    pub residuals: Vec<NamedResidual>,
    /// `[rank B, rank C, rank BC, rank CB]` (T3.5 / C3.6 only).
    pub ranks: Option<[usize; 4]>,
    pub tol: f64,
    pub pass: bool,
}

impl BlockCheck {
    pub fn rank_pattern_holds(&self) -> bool {
        self.ranks.is_none_or(|r| r.iter().all(|&x| x == r[0]))
    }

    pub fn worst(&self) -> f64 {
        self.residuals.iter().map(|r| r.value).fold(0.0, f64::max)
    }
}

/// Rank diagnostic for `K = [[0, C], [B, 0]]`, `K^2 = diag(CB, BC)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct KDiagnostic {
    pub rank_k: usize,
    pub rank_k_sq: usize,
    pub rank_cb_plus_bc: usize,
    pub rank_b_plus_c: usize,
}

impl KDiagnostic {
    pub fn consistent(&self) -> bool {
        self.rank_k == self.rank_b_plus_c && self.rank_k_sq == self.rank_cb_plus_bc && self.rank_k == self.rank_k_sq
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MSharpOutput {
    pub theorem: Theorem,
    pub check: BlockCheck,
    /// Matrix whose group inverse was computed (see [`BlockScenario::target`]).
    pub target: ComplexMatrix,
    pub msharp: ComplexMatrix,
    pub rank: usize,
    pub rank_sq: usize,
    pub axioms: AxiomReport,
    /// Residuals of the `P + Q` decomposition used by the proof.
    pub cross_checks: Vec<NamedResidual>,
    /// Tolerance factor the cross-check residuals are held to.
    pub cross_check_tol: f64,
    pub k_diagnostic: Option<KDiagnostic>,
    /// For corollaries: whether `[[A, C], [B, D]]` itself passes the rank test.
    pub literal_layout_group_invertible: Option<bool>,
}

/// Cross-check tolerance (times the product-of-norms scale) for each parent theorem.
pub fn cross_check_tol(theorem: Theorem) -> f64 {
    match theorem.dual_parent().unwrap_or(theorem) {
        Theorem::T3_5 => 1e-12,
        _ => 1e-10,
    }
}

fn fro(m: &ComplexMatrix) -> f64 {
    m.frobenius_norm()
}

fn zero_defect(m: &ComplexMatrix, scale: f64) -> f64 {
    fro(m) / scale.max(1.0)
}

fn projectors(x: &ComplexMatrix, tol: &Tolerance) -> Result<(ComplexMatrix, ComplexMatrix)> {
    let r = group_inverse(x, tol)?;
    Ok((r.ginv, r.spectral_projector))
}

fn residuals_t31(s: &Blocks, lambda: Complex64, tol: &Tolerance) -> Result<Vec<NamedResidual>> {
    let (_, api) = projectors(&s.a, tol)?;
    let (dg, dpi) = projectors(&s.d, tol)?;
    let cdg = &s.c * &dg;
    let l = lambda.norm();
    Ok(vec![
        NamedResidual::new("A^pi B", zero_defect(&(&api * &s.b), fro(&api) * fro(&s.b))),
        NamedResidual::new("D^pi C", zero_defect(&(&dpi * &s.c), fro(&dpi) * fro(&s.c))),
        NamedResidual::new(
            "A C D# - lambda C",
            normalized_defect(
                &(&s.a * &cdg),
                &s.c.scale(lambda),
                (fro(&s.a) * fro(&s.c) * fro(&dg)).max(l * fro(&s.c)),
            ),
        ),
        NamedResidual::new(
            "B C D# - lambda D",
            normalized_defect(
                &(&s.b * &cdg),
                &s.d.scale(lambda),
                (fro(&s.b) * fro(&s.c) * fro(&dg)).max(l * fro(&s.d)),
            ),
        ),
    ])
}

fn residuals_t33(s: &Blocks, lambda: Complex64, tol: &Tolerance) -> Result<Vec<NamedResidual>> {
    let (ag, api) = projectors(&s.a, tol)?;
    let (_, dpi) = projectors(&s.d, tol)?;
    let aga = &ag * &s.a;
    let l = lambda.norm();
    let base = fro(&ag) * fro(&s.a);
    Ok(vec![
        NamedResidual::new("A^pi C", zero_defect(&(&api * &s.c), fro(&api) * fro(&s.c))),
        NamedResidual::new("D^pi B", zero_defect(&(&dpi * &s.b), fro(&dpi) * fro(&s.b))),
        NamedResidual::new(
            "A# A B - lambda A",
            normalized_defect(
                &(&aga * &s.b),
                &s.a.scale(lambda),
                (base * fro(&s.b)).max(l * fro(&s.a)),
            ),
        ),
        NamedResidual::new(
            "A# A D - lambda C",
            normalized_defect(
                &(&aga * &s.d),
                &s.c.scale(lambda),
                (base * fro(&s.d)).max(l * fro(&s.c)),
            ),
        ),
    ])
}

fn ranks_t35(s: &Blocks, tol: &Tolerance) -> Result<[usize; 4]> {
    Ok([
        rank_with_tol(&s.b, tol)?,
        rank_with_tol(&s.c, tol)?,
        rank_with_tol(&(&s.b * &s.c), tol)?,
        rank_with_tol(&(&s.c * &s.b), tol)?,
    ])
}

fn residuals_t35(s: &Blocks, lambda: Complex64) -> Vec<NamedResidual> {
    let n = s.a.rows();
    // A and D are assumed idempotent, so A^pi = I - A and D^pi = I - D.
    let api = identity_minus(&s.a);
    let cb = &s.c * &s.b;
    let l = lambda.norm();
    vec![
        NamedResidual::new("A^2 - A", normalized_defect(&(&s.a * &s.a), &s.a, fro(&s.a))),
        NamedResidual::new("D^2 - D", normalized_defect(&(&s.d * &s.d), &s.d, fro(&s.d))),
        NamedResidual::new(
            "AD - lambda AC",
            normalized_defect(
                &(&s.a * &s.d),
                &(&s.a * &s.c).scale(lambda),
                (fro(&s.a) * fro(&s.d)).max(l * fro(&s.a) * fro(&s.c)),
            ),
        ),
        NamedResidual::new(
            "A(I - CB)",
            zero_defect(
                &(&s.a * &identity_minus(&cb)),
                fro(&s.a) * (n as f64).sqrt().max(fro(&s.c) * fro(&s.b)),
            ),
        ),
        NamedResidual::new(
            "D B A^pi C",
            zero_defect(
                &(&(&(&s.d * &s.b) * &api) * &s.c),
                fro(&s.d) * fro(&s.b) * fro(&api) * fro(&s.c),
            ),
        ),
    ]
}

const C32_NAMES: [&str; 4] = ["C D^pi", "B A^pi", "A# B D - lambda B", "A# B C - lambda A"];
const C34_NAMES: [&str; 4] = ["B D^pi", "C A^pi", "C D D# - lambda D", "A D D# - lambda B"];
const C36_NAMES: [&str; 5] = ["D^2 - D", "A^2 - A", "AD - lambda BD", "(I - CB)D", "B D^pi C A"];

/// Residuals and ranks computed in the parent theorem's own terms.
fn parent_check(
    theorem: Theorem,
    s: &Blocks,
    lambda: Complex64,
    tol: &Tolerance,
) -> Result<(Vec<NamedResidual>, Option<[usize; 4]>)> {
    match theorem {
        Theorem::T3_1 => Ok((residuals_t31(s, lambda, tol)?, None)),
        Theorem::T3_3 => Ok((residuals_t33(s, lambda, tol)?, None)),
        Theorem::T3_5 => Ok((residuals_t35(s, lambda), Some(ranks_t35(s, tol)?))),
        _ => unreachable!("parent theorem"),
    }
}

/// Hypothesis residuals for any §3-type scenario. Corollaries are evaluated
/// on the dual scenario and reported under their own hypothesis names.
pub fn check(s: &BlockScenario, tol: &Tolerance) -> Result<BlockCheck> {
    s.validate()?;
    let (residuals, ranks) = match s.theorem.dual_parent() {
        None => parent_check(s.theorem, &s.blocks(), s.lambda, tol)?,
        Some(parent) => {
            let dual = s.dual();
            let (res, ranks) = parent_check(parent, &dual.blocks(), s.lambda, tol)?;
            let names: &[&str] = match s.theorem {
                Theorem::C3_2 => &C32_NAMES,
                Theorem::C3_4 => &C34_NAMES,
                _ => &C36_NAMES,
            };
            let renamed = res
                .into_iter()
                .zip(names)
                .map(|(r, name)| NamedResidual::new(*name, r.value))
                .collect();
            // Dual ranks are [rank Cᵀ, rank Bᵀ, rank CᵀBᵀ, rank BᵀCᵀ].
            (renamed, ranks.map(|r| [r[1], r[0], r[2], r[3]]))
        }
    };
    let mut out = BlockCheck {
        theorem: s.theorem,
        lambda: s.lambda,
        residuals,
        ranks,
        tol: tol.residual,
        pass: false,
    };
    out.pass = out.rank_pattern_holds() && out.worst() <= tol.residual;
    Ok(out)
}

fn expect_theorem(s: &BlockScenario, t: Theorem) -> Result<()> {
    if s.theorem != t {
        return Err(Error::UnknownTheorem(format!(
            "scenario is tagged {}, expected {}",
            s.theorem, t
        )));
    }
    Ok(())
}

pub fn check_t31(s: &BlockScenario, tol: &Tolerance) -> Result<BlockCheck> {
    expect_theorem(s, Theorem::T3_1)?;
    check(s, tol)
}

pub fn check_c32(s: &BlockScenario, tol: &Tolerance) -> Result<BlockCheck> {
    expect_theorem(s, Theorem::C3_2)?;
    check(s, tol)
}

pub fn check_t33(s: &BlockScenario, tol: &Tolerance) -> Result<BlockCheck> {
    expect_theorem(s, Theorem::T3_3)?;
    check(s, tol)
}

pub fn check_c34(s: &BlockScenario, tol: &Tolerance) -> Result<BlockCheck> {
    expect_theorem(s, Theorem::C3_4)?;
    check(s, tol)
}

pub fn check_t35(s: &BlockScenario, tol: &Tolerance) -> Result<BlockCheck> {
    expect_theorem(s, Theorem::T3_5)?;
    check(s, tol)
}

pub fn check_c36(s: &BlockScenario, tol: &Tolerance) -> Result<BlockCheck> {
    expect_theorem(s, Theorem::C3_6)?;
    check(s, tol)
}

fn zeros_like(m: &ComplexMatrix) -> ComplexMatrix {
    ComplexMatrix::zeros(m.rows(), m.cols())
}

/// `P + Q` residuals from the parent theorem's proof.
fn parent_cross_checks(theorem: Theorem, s: &Blocks, lambda: Complex64, tol: &Tolerance) -> Result<Vec<NamedResidual>> {
    let z = zeros_like(&s.a);
    let l = lambda.norm();
    match theorem {
        Theorem::T3_1 => {
            let p = assemble(&s.a, &s.b, &z, &z)?;
            let q = assemble(&z, &z, &s.c, &s.d)?;
            let qg = group_inverse(&q, tol)?.ginv;
            let scale = (fro(&p) * fro(&q) * fro(&qg)).max(l * fro(&q));
            Ok(vec![NamedResidual::new(
                "P Q Q# - lambda Q",
                normalized_defect(&(&(&p * &q) * &qg), &q.scale(lambda), scale),
            )])
        }
        Theorem::T3_3 => {
            let p = assemble(&s.a, &z, &s.c, &z)?;
            let q = assemble(&z, &s.b, &z, &s.d)?;
            let pg = group_inverse(&p, tol)?.ginv;
            let scale = (fro(&p) * fro(&pg) * fro(&q)).max(l * fro(&p));
            Ok(vec![NamedResidual::new(
                "P P# Q - lambda P",
                normalized_defect(&(&(&p * &pg) * &q), &p.scale(lambda), scale),
            )])
        }
        Theorem::T3_5 => {
            let api = identity_minus(&s.a);
            let dpi = identity_minus(&s.d);
            let p = assemble(&s.a, &(&s.d * &s.b), &(&s.a * &s.c), &s.d)?;
            let q = assemble(&z, &(&dpi * &s.b), &(&api * &s.c), &z)?;
            let m = assemble(&s.a, &s.b, &s.c, &s.d)?;
            Ok(vec![
                NamedResidual::new("P Q", zero_defect(&(&p * &q), fro(&p) * fro(&q))),
                NamedResidual::new("P + Q - M", zero_defect(&(&(&p + &q) - &m), fro(&m))),
            ])
        }
        _ => unreachable!("parent theorem"),
    }
}

fn k_diagnostic(s: &Blocks, tol: &Tolerance) -> Result<KDiagnostic> {
    let z = zeros_like(&s.a);
    let k = assemble(&z, &s.b, &s.c, &z)?;
    Ok(KDiagnostic {
        rank_k: rank_with_tol(&k, tol)?,
        rank_k_sq: rank_with_tol(&(&k * &k), tol)?,
        rank_cb_plus_bc: rank_with_tol(&(&s.c * &s.b), tol)? + rank_with_tol(&(&s.b * &s.c), tol)?,
        rank_b_plus_c: rank_with_tol(&s.b, tol)? + rank_with_tol(&s.c, tol)?,
    })
}

/// Gate on hypotheses, then compute and verify the group inverse of the
/// statement's target matrix.
pub fn msharp(s: &BlockScenario, tol: &Tolerance) -> Result<MSharpOutput> {
    s.validate()?;
    s.theorem.check_lambda(s.lambda)?;
    let chk = check(s, tol)?;

    let parent = s.theorem.dual_parent().unwrap_or(s.theorem);
    if parent == Theorem::T3_5 {
        for r in chk
            .residuals
            .iter()
            .filter(|r| r.name.ends_with("^2 - A") || r.name.ends_with("^2 - D"))
        {
            if r.value > tol.residual {
                return Err(Error::NotIdempotent {
                    which: r.name[..1].to_string(),
                    residual: r.value,
                });
            }
        }
        if !chk.rank_pattern_holds() {
            return Err(Error::RankPatternViolated {
                ranks: chk.ranks.expect("T3.5 reports ranks"),
            });
        }
    }
    if let Some(r) = chk.residuals.iter().find(|r| r.value > tol.residual) {
        return Err(Error::HypothesisViolated {
            theorem: s.theorem.tag().into(),
            name: r.name.clone(),
            residual: r.value,
            tol: tol.residual,
        });
    }
    msharp_unchecked(s, chk, tol)
}

/// Computes `M#` and diagnostics for an already-checked scenario.
pub fn msharp_unchecked(s: &BlockScenario, chk: BlockCheck, tol: &Tolerance) -> Result<MSharpOutput> {
    let parent = s.theorem.dual_parent().unwrap_or(s.theorem);
    let is_corollary = parent != s.theorem;
    let parent_blocks = if is_corollary { s.dual().blocks() } else { s.blocks() };

    let target = s.target();
    let gi = group_inverse(&target, tol)?;
    let info = is_group_invertible(&target, tol)?;
    let axioms = verify_group_axioms(&target, &gi.ginv, tol)?;
    let cross_checks = parent_cross_checks(parent, &parent_blocks, s.lambda, tol)?;
    let k_diagnostic = if parent == Theorem::T3_5 {
        Some(k_diagnostic(&s.blocks(), tol)?)
    } else {
        None
    };
    let literal_layout_group_invertible = if is_corollary {
        Some(is_group_invertible(&s.assemble(), tol)?.invertible)
    } else {
        None
    };
    Ok(MSharpOutput {
        theorem: s.theorem,
        check: chk,
        target,
        msharp: gi.ginv,
        rank: info.rank,
        rank_sq: info.rank_sq,
        axioms,
        cross_checks,
        cross_check_tol: cross_check_tol(s.theorem),
        k_diagnostic,
        literal_layout_group_invertible,
    })
}

macro_rules! msharp_for {
    ($name:ident, $t:expr) => {
        pub fn $name(s: &BlockScenario, tol: &Tolerance) -> Result<MSharpOutput> {
            expect_theorem(s, $t)?;
            msharp(s, tol)
        }
    };
}

msharp_for!(msharp_t31, Theorem::T3_1);
msharp_for!(msharp_c32, Theorem::C3_2);
msharp_for!(msharp_t33, Theorem::T3_3);
msharp_for!(msharp_c34, Theorem::C3_4);
msharp_for!(msharp_t35, Theorem::T3_5);
msharp_for!(msharp_c36, Theorem::C3_6);
