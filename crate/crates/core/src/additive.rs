//! Group inverse of a sum `a + b` under the additive hypotheses.
//!
//! | statement | hypothesis              | lambda excluded |
//! |-----------|-------------------------|-----------------|
//! | T2.1      | `a b b# = λ b a a#`     | 0               |
//! | C2.2      | `a a# b = λ b b# a`     | 0               |
//! | C2.3      | idempotents, `ab = λ ba`| 0               |
//! | T2.4      | `a b b# = λ b`          | -1              |
//! | C2.5      | `a a# b = λ a`          | -1              |
//!
//! Every evaluation recomputes `a#`, `b#` through [`crate::ginv`]; callers
//! never pass inverses in.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ginv::{group_inverse, verify_group_axioms, AxiomReport};
use crate::linalg::{ComplexMatrix, Tolerance};
use crate::theorem::{is_minus_one, lambda_serde, normalized_defect, Family, NamedResidual, Theorem, NEAR_BRANCH_TOL};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdditiveScenario {
    pub theorem: Theorem,
    #[serde(with = "lambda_serde")]
    pub lambda: Complex64,
    pub a: ComplexMatrix,
    pub b: ComplexMatrix,
}

impl AdditiveScenario {
    pub fn new(theorem: Theorem, lambda: Complex64, a: ComplexMatrix, b: ComplexMatrix) -> Result<Self> {
        let s = AdditiveScenario { theorem, lambda, a, b };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.theorem.family() != Family::Additive {
            return Err(Error::UnknownTheorem(format!(
                "{} is not an additive statement",
                self.theorem
            )));
        }
        self.a.ensure_square()?;
        self.b.ensure_square()?;
        if self.a.shape() != self.b.shape() {
            return Err(Error::DimensionMismatch {
                op: "additive scenario",
                left: self.a.shape(),
                right: self.b.shape(),
            });
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

    pub fn sum(&self) -> ComplexMatrix {
        &self.a + &self.b
    }

    /// Transpose dual: C2.2 on `(a, b)` is T2.1 on `(bᵀ, aᵀ)` and C2.5 on
    /// `(a, b)` is T2.4 on `(bᵀ, aᵀ)`, and conversely. Returns `None` for
    /// C2.3, which has no transpose partner.
    pub fn dual(&self) -> Option<AdditiveScenario> {
        let theorem = match self.theorem {
            Theorem::T2_1 => Theorem::C2_2,
            Theorem::C2_2 => Theorem::T2_1,
            Theorem::T2_4 => Theorem::C2_5,
            Theorem::C2_5 => Theorem::T2_4,
            _ => return None,
        };
        Some(AdditiveScenario {
            theorem,
            lambda: self.lambda,
            a: self.b.transpose(),
            b: self.a.transpose(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    LambdaMinusOne,
    Generic,
}

impl Branch {
    pub fn of(lambda: Complex64) -> Branch {
        if is_minus_one(lambda) {
            Branch::LambdaMinusOne
        } else {
            Branch::Generic
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FormulaOutput {
    /// The formula's value for `(a + b)#`.
    pub candidate: ComplexMatrix,
    pub branch: Branch,
    /// Generic branch evaluated with `|λ + 1| < 1e-6`.
    pub near_branch: bool,
    pub hypothesis_residuals: Vec<NamedResidual>,
    /// Axioms of `candidate` against `a + b`.
    pub axiom_report: AxiomReport,
    /// Relative distance to `group_inverse(a + b)`, when that exists.
    pub oracle_distance: Option<f64>,
    /// T2.1/C2.2 generic branch only: oracle distance of [`repaired_candidate`].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub repaired_oracle_distance: Option<f64>,
}

struct Operands<'s> {
    a: &'s ComplexMatrix,
    b: &'s ComplexMatrix,
    ag: ComplexMatrix,
    bg: ComplexMatrix,
    api: ComplexMatrix,
    bpi: ComplexMatrix,
}

impl<'s> Operands<'s> {
    fn new(a: &'s ComplexMatrix, b: &'s ComplexMatrix, tol: &Tolerance) -> Result<Self> {
        let ra = group_inverse(a, tol)?;
        let rb = group_inverse(b, tol)?;
        Ok(Operands {
            a,
            b,
            ag: ra.ginv,
            bg: rb.ginv,
            api: ra.spectral_projector,
            bpi: rb.spectral_projector,
        })
    }

    fn scale(&self) -> f64 {
        self.a.frobenius_norm() * self.b.frobenius_norm()
    }
}

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// `‖a b b# − λ b a a#‖_F / max(1, ‖a‖‖b‖)`.
pub fn residual_t21(a: &ComplexMatrix, b: &ComplexMatrix, lambda: Complex64, tol: &Tolerance) -> Result<f64> {
    let o = Operands::new(a, b, tol)?;
    Ok(residual_t21_of(&o, lambda))
}

fn residual_t21_of(o: &Operands, lambda: Complex64) -> f64 {
    let lhs = &(o.a * o.b) * &o.bg;
    let rhs = (&(o.b * o.a) * &o.ag).scale(lambda);
    normalized_defect(&lhs, &rhs, o.scale())
}

/// `‖a a# b − λ b b# a‖_F / max(1, ‖a‖‖b‖)`.
pub fn residual_c22(a: &ComplexMatrix, b: &ComplexMatrix, lambda: Complex64, tol: &Tolerance) -> Result<f64> {
    let o = Operands::new(a, b, tol)?;
    Ok(residual_c22_of(&o, lambda))
}

fn residual_c22_of(o: &Operands, lambda: Complex64) -> f64 {
    let lhs = &(o.a * &o.ag) * o.b;
    let rhs = (&(o.b * &o.bg) * o.a).scale(lambda);
    normalized_defect(&lhs, &rhs, o.scale())
}

/// `‖a b b# − λ b‖_F / max(1, ‖a‖‖b‖)`.
pub fn residual_t24(a: &ComplexMatrix, b: &ComplexMatrix, lambda: Complex64, tol: &Tolerance) -> Result<f64> {
    let o = Operands::new(a, b, tol)?;
    Ok(residual_t24_of(&o, lambda))
}

fn residual_t24_of(o: &Operands, lambda: Complex64) -> f64 {
    let lhs = &(o.a * o.b) * &o.bg;
    normalized_defect(&lhs, &o.b.scale(lambda), o.scale())
}

/// `‖a a# b − λ a‖_F / max(1, ‖a‖‖b‖)`.
pub fn residual_c25(a: &ComplexMatrix, b: &ComplexMatrix, lambda: Complex64, tol: &Tolerance) -> Result<f64> {
    let o = Operands::new(a, b, tol)?;
    Ok(residual_c25_of(&o, lambda))
}

fn residual_c25_of(o: &Operands, lambda: Complex64) -> f64 {
    let lhs = &(o.a * &o.ag) * o.b;
    normalized_defect(&lhs, &o.a.scale(lambda), o.scale())
}

/// `‖x² − x‖_F / max(1, ‖x‖)`.
pub fn idempotency_residual(x: &ComplexMatrix) -> f64 {
    normalized_defect(&(x * x), x, x.frobenius_norm())
}

/// `‖ab − λ ba‖_F / max(1, ‖a‖‖b‖)`.
pub fn residual_c23(a: &ComplexMatrix, b: &ComplexMatrix, lambda: Complex64) -> f64 {
    let scale = a.frobenius_norm() * b.frobenius_norm();
    normalized_defect(&(a * b), &(b * a).scale(lambda), scale)
}

/// Every hypothesis residual of the scenario. Group invertibility of `a`
/// and `b` is a precondition and surfaces as `NotGroupInvertible`.
pub fn hypothesis_residuals(s: &AdditiveScenario, tol: &Tolerance) -> Result<Vec<NamedResidual>> {
    s.validate()?;
    let lambda = s.lambda;
    if s.theorem == Theorem::C2_3 {
        return Ok(vec![
            NamedResidual::new("a^2 - a", idempotency_residual(&s.a)),
            NamedResidual::new("b^2 - b", idempotency_residual(&s.b)),
            NamedResidual::new("ab - lambda ba", residual_c23(&s.a, &s.b, lambda)),
        ]);
    }
    let o = Operands::new(&s.a, &s.b, tol)?;
    let r = match s.theorem {
        Theorem::T2_1 => NamedResidual::new("a b b# - lambda b a a#", residual_t21_of(&o, lambda)),
        Theorem::C2_2 => NamedResidual::new("a a# b - lambda b b# a", residual_c22_of(&o, lambda)),
        Theorem::T2_4 => NamedResidual::new("a b b# - lambda b", residual_t24_of(&o, lambda)),
        Theorem::C2_5 => NamedResidual::new("a a# b - lambda a", residual_c25_of(&o, lambda)),
        _ => unreachable!("validated additive theorem"),
    };
    Ok(vec![r])
}

/// Evaluates the statement's closed form without checking lambda support
/// or hypotheses. T2.4/C2.5 still refuse lambda = -1, where the formula
/// divides by zero.
pub fn formula_candidate(s: &AdditiveScenario, tol: &Tolerance) -> Result<(ComplexMatrix, Branch)> {
    s.validate()?;
    let lambda = s.lambda;
    let branch = Branch::of(lambda);
    let candidate = match s.theorem {
        Theorem::C2_3 => idempotent_formula(&s.a, &s.b, lambda, branch),
        Theorem::T2_1 => t21_formula(&Operands::new(&s.a, &s.b, tol)?, lambda, branch),
        Theorem::C2_2 => c22_formula(&Operands::new(&s.a, &s.b, tol)?, lambda, branch),
        Theorem::T2_4 | Theorem::C2_5 => {
            if branch == Branch::LambdaMinusOne {
                return Err(Error::LambdaIsMinusOne {
                    theorem: s.theorem.tag().into(),
                });
            }
            let o = Operands::new(&s.a, &s.b, tol)?;
            if s.theorem == Theorem::T2_4 {
                t24_formula(&o, lambda)
            } else {
                c25_formula(&o, lambda)
            }
        }
        _ => unreachable!("validated additive theorem"),
    };
    Ok((candidate, branch))
}

fn t21_formula(o: &Operands, lambda: Complex64, branch: Branch) -> ComplexMatrix {
    match branch {
        Branch::LambdaMinusOne => {
            // (a + b)(a# + b#)^2
            let sum = o.a + o.b;
            let g = &o.ag + &o.bg;
            &(&sum * &g) * &g
        }
        Branch::Generic => {
            // 1/(1+λ)[a# + b# − a# b b#] + λ/(1+λ)[b^π a# + a^π b#]
            let first = &(&o.ag + &o.bg) - &(&(&o.ag * o.b) * &o.bg);
            let second = &(&o.bpi * &o.ag) + &(&o.api * &o.bg);
            let inv = (c(1.0) + lambda).inv();
            &first.scale(inv) + &second.scale(lambda * inv)
        }
    }
}

/// T2.1 and C2.2 generic branch with the missing term restored.
///
/// In the Peirce frame of the proof the stated formula gets the `(1,2)`
/// block as `-(1+λ)^-1 λ^-1 b1^-1 a2 a4^-1` instead of
/// `-(1+λ)^-1 b1^-1 a2 a4^-1`, so it is only right when `λ = 1` or that
/// block vanishes. The correction is `(λ-1)/(1+λ) b b# a# b^π` for T2.1 and
/// its transpose dual `(λ-1)/(1+λ) a^π b# a a#` for C2.2.
///
/// Returns `None` for other statements and for the lambda = -1 branch,
/// whose formula is correct as stated.
pub fn repaired_candidate(s: &AdditiveScenario, tol: &Tolerance) -> Result<Option<ComplexMatrix>> {
    s.validate()?;
    let branch = Branch::of(s.lambda);
    if branch == Branch::LambdaMinusOne || !matches!(s.theorem, Theorem::T2_1 | Theorem::C2_2) {
        return Ok(None);
    }
    let o = Operands::new(&s.a, &s.b, tol)?;
    let k = (s.lambda - c(1.0)) / (c(1.0) + s.lambda);
    let (base, extra) = if s.theorem == Theorem::T2_1 {
        let bbg = o.b * &o.bg;
        (t21_formula(&o, s.lambda, branch), &(&bbg * &o.ag) * &o.bpi)
    } else {
        let aag = o.a * &o.ag;
        (c22_formula(&o, s.lambda, branch), &(&o.api * &o.bg) * &aag)
    };
    Ok(Some(&base + &extra.scale(k)))
}

fn c22_formula(o: &Operands, lambda: Complex64, branch: Branch) -> ComplexMatrix {
    match branch {
        Branch::LambdaMinusOne => {
            // (a# + b#)^2 (a + b)
            let sum = o.a + o.b;
            let g = &o.ag + &o.bg;
            &(&g * &g) * &sum
        }
        Branch::Generic => {
            // 1/(1+λ)[a# + b# − a a# b#] + λ/(1+λ)[a# b^π + b# a^π]
            let first = &(&o.ag + &o.bg) - &(&(o.a * &o.ag) * &o.bg);
            let second = &(&o.ag * &o.bpi) + &(&o.bg * &o.api);
            let inv = (c(1.0) + lambda).inv();
            &first.scale(inv) + &second.scale(lambda * inv)
        }
    }
}

fn idempotent_formula(a: &ComplexMatrix, b: &ComplexMatrix, lambda: Complex64, branch: Branch) -> ComplexMatrix {
    let sum = a + b;
    match branch {
        Branch::LambdaMinusOne => sum.pow(3),
        Branch::Generic => {
            // a + b − (2+λ)/(1+λ) ab
            let k = (c(2.0) + lambda) / (c(1.0) + lambda);
            &sum - &(a * b).scale(k)
        }
    }
}

fn t24_formula(o: &Operands, lambda: Complex64) -> ComplexMatrix {
    // (1+λ)^-1 b# + b^π a# b^π + λ(1+λ)^-2 b# a a# b^π − (1+λ)^-1 b# a b^π a# b^π
    let inv = (c(1.0) + lambda).inv();
    let t1 = o.bg.scale(inv);
    let t2 = &(&o.bpi * &o.ag) * &o.bpi;
    let t3 = (&(&(&o.bg * o.a) * &o.ag) * &o.bpi).scale(lambda * inv * inv);
    let t4 = (&(&(&(&o.bg * o.a) * &o.bpi) * &o.ag) * &o.bpi).scale(inv);
    &(&(&t1 + &t2) + &t3) - &t4
}

fn c25_formula(o: &Operands, lambda: Complex64) -> ComplexMatrix {
    // (1+λ)^-1 a# + a^π b# a^π + λ(1+λ)^-2 a^π b b# a# − (1+λ)^-1 a^π b# a^π b a#
    let inv = (c(1.0) + lambda).inv();
    let t1 = o.ag.scale(inv);
    let t2 = &(&o.api * &o.bg) * &o.api;
    let t3 = (&(&(&o.api * o.b) * &o.bg) * &o.ag).scale(lambda * inv * inv);
    let t4 = (&(&(&(&o.api * &o.bg) * &o.api) * o.b) * &o.ag).scale(inv);
    &(&(&t1 + &t2) + &t3) - &t4
}

/// Candidate plus axiom and oracle diagnostics, with no support or
/// hypothesis gating. Used by the fuzzer to probe unsupported lambdas.
pub fn evaluate_unchecked(s: &AdditiveScenario, tol: &Tolerance) -> Result<FormulaOutput> {
    let hypothesis_residuals = hypothesis_residuals(s, tol)?;
    let (candidate, branch) = formula_candidate(s, tol)?;
    let sum = s.sum();
    let axiom_report = verify_group_axioms(&sum, &candidate, tol)?;
    let oracle = group_inverse(&sum, tol).ok().map(|r| r.ginv);
    let oracle_distance = oracle
        .as_ref()
        .map(|g| crate::ginv::sanitize(candidate.relative_distance(g)));
    let repaired_oracle_distance = match (&oracle, repaired_candidate(s, tol)?) {
        (Some(g), Some(r)) => Some(crate::ginv::sanitize(r.relative_distance(g))),
        _ => None,
    };
    let near_branch = branch == Branch::Generic && (s.lambda + 1.0).norm() < NEAR_BRANCH_TOL;
    Ok(FormulaOutput {
        candidate,
        branch,
        near_branch,
        hypothesis_residuals,
        axiom_report,
        oracle_distance,
        repaired_oracle_distance,
    })
}

fn checked(s: &AdditiveScenario, expected: Theorem, tol: &Tolerance) -> Result<FormulaOutput> {
    s.validate()?;
    if s.theorem != expected {
        return Err(Error::UnknownTheorem(format!(
            "scenario is tagged {}, expected {}",
            s.theorem, expected
        )));
    }
    s.theorem.check_lambda(s.lambda)?;
    let residuals = hypothesis_residuals(s, tol)?;
    if s.theorem == Theorem::C2_3 {
        for (r, which) in residuals.iter().zip(["a", "b"]) {
            if r.value > tol.residual {
                return Err(Error::NotIdempotent {
                    which: which.into(),
                    residual: r.value,
                });
            }
        }
    }
    if let Some(r) = residuals.iter().find(|r| r.value > tol.residual) {
        return Err(Error::HypothesisViolated {
            theorem: s.theorem.tag().into(),
            name: r.name.clone(),
            residual: r.value,
            tol: tol.residual,
        });
    }
    evaluate_unchecked(s, tol)
}

pub fn sum_ginv_t21(s: &AdditiveScenario, tol: &Tolerance) -> Result<FormulaOutput> {
    checked(s, Theorem::T2_1, tol)
}

pub fn sum_ginv_c22(s: &AdditiveScenario, tol: &Tolerance) -> Result<FormulaOutput> {
    checked(s, Theorem::C2_2, tol)
}

pub fn idempotent_sum_c23(s: &AdditiveScenario, tol: &Tolerance) -> Result<FormulaOutput> {
    checked(s, Theorem::C2_3, tol)
}

pub fn sum_ginv_t24(s: &AdditiveScenario, tol: &Tolerance) -> Result<FormulaOutput> {
    checked(s, Theorem::T2_4, tol)
}

pub fn sum_ginv_c25(s: &AdditiveScenario, tol: &Tolerance) -> Result<FormulaOutput> {
    checked(s, Theorem::C2_5, tol)
}

/// Dispatches on the scenario's theorem tag.
pub fn sum_ginv(s: &AdditiveScenario, tol: &Tolerance) -> Result<FormulaOutput> {
    checked(s, s.theorem, tol)
}
