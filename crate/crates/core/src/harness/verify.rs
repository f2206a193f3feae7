//! Single-instance verification: hypotheses, conclusion, and cross-checks.

use std::collections::BTreeMap;
use std::time::Instant;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::additive::{self, AdditiveScenario};
use crate::blockmat::{self, BlockScenario};
use crate::error::{Error, Result};
use crate::gen::Provenance;
use crate::ginv::{group_inverse, is_group_invertible, sanitize, verify_group_axioms, AxiomReport};
use crate::linalg::{ComplexMatrix, Tolerance};
use crate::theorem::{lambda_serde, NamedResidual, Theorem};

use super::instance::{Instance, InstanceFile};

/// Relative tolerance of the formula against the direct group inverse.
pub const ORACLE_TOL: f64 = 1e-8;
/// Tolerance of the transpose-duality identities.
pub const DUALITY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Verdict {
    Pass,
    HypothesisFail,
    ConclusionFail,
    Unsupported,
}

impl Verdict {
    pub const ALL: [Verdict; 4] = [
        Verdict::Pass,
        Verdict::HypothesisFail,
        Verdict::ConclusionFail,
        Verdict::Unsupported,
    ];

    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::Pass => 0,
            Verdict::HypothesisFail => 3,
            Verdict::ConclusionFail => 4,
            Verdict::Unsupported => 5,
        }
    }
}

/// One residual against its tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub value: f64,
    pub tol: f64,
    pub pass: bool,
}

impl Check {
    pub fn new(value: f64, tol: f64) -> Self {
        let value = sanitize(value);
        Check {
            value,
            tol,
            pass: value <= tol,
        }
    }
}

pub type CheckMap = BTreeMap<String, Check>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub id: String,
    pub theorem: Theorem,
    #[serde(with = "lambda_serde")]
    pub lambda: Complex64,
    pub n: usize,
    pub verdict: Verdict,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    pub hypothesis_residuals: CheckMap,
    /// Group-inverse axioms of the result plus, for additive statements,
    /// the formula-vs-oracle distance.
    pub conclusion_residuals: CheckMap,
    /// Duality identity and proof-decomposition checks. Reported with their
    /// own pass flags; they do not enter the verdict.
    pub cross_checks: CheckMap,
    pub diagnostics: BTreeMap<String, Value>,
    pub tolerances: Tolerance,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timing_ms: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
}

impl VerificationReport {
    fn new(id: &str, inst: &Instance, tol: &Tolerance) -> Self {
        VerificationReport {
            id: id.to_string(),
            theorem: inst.theorem(),
            lambda: inst.lambda(),
            n: inst.n(),
            verdict: Verdict::Pass,
            message: None,
            hypothesis_residuals: CheckMap::new(),
            conclusion_residuals: CheckMap::new(),
            cross_checks: CheckMap::new(),
            diagnostics: BTreeMap::new(),
            tolerances: *tol,
            timing_ms: None,
            provenance: None,
        }
    }

    fn finish(mut self, verdict: Verdict, message: Option<String>) -> Self {
        self.verdict = verdict;
        self.message = message;
        self
    }

    /// Verdict implied by the residual maps alone.
    fn residual_verdict(&self) -> Verdict {
        if self.hypothesis_residuals.values().any(|c| !c.pass) {
            Verdict::HypothesisFail
        } else if self.conclusion_residuals.values().any(|c| !c.pass) {
            Verdict::ConclusionFail
        } else {
            Verdict::Pass
        }
    }

    pub fn cross_checks_pass(&self) -> bool {
        self.cross_checks.values().all(|c| c.pass)
    }

    pub fn worst_hypothesis(&self) -> f64 {
        worst(&self.hypothesis_residuals)
    }

    pub fn worst_conclusion(&self) -> f64 {
        worst(&self.conclusion_residuals)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_text(&self) -> String {
        let mut out = format!(
            "{} {} lambda={} n={}: {:?}\n",
            self.id,
            self.theorem,
            fmt_lambda(self.lambda),
            self.n,
            self.verdict
        );
        if let Some(m) = &self.message {
            out.push_str(&format!("  message: {m}\n"));
        }
        for (title, map) in [
            ("hypothesis", &self.hypothesis_residuals),
            ("conclusion", &self.conclusion_residuals),
            ("cross-check", &self.cross_checks),
        ] {
            for (name, c) in map {
                let mark = if c.pass { "ok  " } else { "FAIL" };
                out.push_str(&format!(
                    "  [{mark}] {title:<11} {name:<28} {:.3e} (tol {:.1e})\n",
                    c.value, c.tol
                ));
            }
        }
        for (k, v) in &self.diagnostics {
            out.push_str(&format!("  {k}: {v}\n"));
        }
        out
    }
}

fn worst(m: &CheckMap) -> f64 {
    m.values().map(|c| c.value).fold(0.0, f64::max)
}

pub fn fmt_lambda(z: Complex64) -> String {
    if z.im == 0.0 {
        format!("{}", z.re)
    } else {
        format!("{}{:+}i", z.re, z.im)
    }
}

#[derive(Debug, Clone)]
pub struct VerifyOptions {
    pub tol: Tolerance,
    /// Report unsupported lambdas as `Unsupported` instead of evaluating them.
    pub enforce_support: bool,
    /// Record wall-clock time (off for byte-reproducible output).
    pub timing: bool,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            tol: Tolerance::default(),
            enforce_support: true,
            timing: false,
        }
    }
}

pub fn verify_file(file: &InstanceFile, id: &str, opts: &VerifyOptions) -> Result<VerificationReport> {
    let mut r = verify(&file.instance, id, opts)?;
    r.provenance = file.provenance.clone();
    Ok(r)
}

/// Verifies one instance. Only malformed input is an `Err`; every
/// mathematical outcome is a verdict.
pub fn verify(inst: &Instance, id: &str, opts: &VerifyOptions) -> Result<VerificationReport> {
    inst.validate()?;
    opts.tol.validate()?;
    let start = Instant::now();
    let mut report = VerificationReport::new(id, inst, &opts.tol);
    let lambda_ok = inst.theorem().check_lambda(inst.lambda());
    if let Err(e) = &lambda_ok {
        report
            .diagnostics
            .insert("unsupported_reason".into(), json!(e.to_string()));
        if let Error::LambdaIsMinusOne { .. } = e {
            report.diagnostics.insert(
                "inherited_restriction".into(),
                json!(inst.theorem().minus_one_is_inherited()),
            );
        }
    }
    let mut report = match (lambda_ok, opts.enforce_support) {
        (Err(e), true) => report.finish(Verdict::Unsupported, Some(e.to_string())),
        _ => match inst {
            Instance::Additive(s) => verify_additive(s, report, &opts.tol)?,
            Instance::Block(s) => verify_block(s, report, &opts.tol)?,
        },
    };
    if opts.timing {
        report.timing_ms = Some(start.elapsed().as_secs_f64() * 1e3);
    }
    Ok(report)
}

fn put_residuals(map: &mut CheckMap, rs: &[NamedResidual], tol: f64) {
    for r in rs {
        map.insert(r.name.clone(), Check::new(r.value, tol));
    }
}

fn put_axioms(map: &mut CheckMap, ax: &AxiomReport) {
    map.insert("axiom 1: a x a = a".into(), Check::new(ax.axiom_1, ax.tol));
    map.insert("axiom 2: x a x = x".into(), Check::new(ax.axiom_2, ax.tol));
    map.insert("axiom 3: a x = x a".into(), Check::new(ax.axiom_3, ax.tol));
}

/// Errors that mean an operand lacks a group inverse or a usable core.
fn is_invertibility_failure(e: &Error) -> bool {
    matches!(
        e,
        Error::NotGroupInvertible { .. } | Error::IllConditionedCore { .. } | Error::Singular { .. }
    )
}

fn verify_additive(
    s: &AdditiveScenario,
    mut report: VerificationReport,
    tol: &Tolerance,
) -> Result<VerificationReport> {
    let hyp = match additive::hypothesis_residuals(s, tol) {
        Ok(h) => h,
        Err(e) if is_invertibility_failure(&e) => {
            let msg = format!("operand without group inverse: {e}");
            return Ok(report.finish(Verdict::HypothesisFail, Some(msg)));
        }
        Err(e) => return Err(e),
    };
    put_residuals(&mut report.hypothesis_residuals, &hyp, tol.residual);
    if report.residual_verdict() == Verdict::HypothesisFail {
        return Ok(report.finish(
            Verdict::HypothesisFail,
            Some("hypothesis residual above tolerance".into()),
        ));
    }

    let out = additive::evaluate_unchecked(s, tol)?;
    report.diagnostics.insert("branch".into(), json!(out.branch));
    report.diagnostics.insert("near_branch".into(), json!(out.near_branch));
    if let Some(d) = out.repaired_oracle_distance {
        report.diagnostics.insert("repaired_oracle_distance".into(), json!(d));
    }

    let sum = s.sum();
    let info = is_group_invertible(&sum, tol)?;
    report.diagnostics.insert("rank(a+b)".into(), json!(info.rank));
    report.diagnostics.insert("rank((a+b)^2)".into(), json!(info.rank_sq));
    report.diagnostics.insert("marginal_rank".into(), json!(info.marginal));
    report.conclusion_residuals.insert(
        "rank gap of a+b".into(),
        Check::new(info.rank.abs_diff(info.rank_sq) as f64, 0.0),
    );
    put_axioms(&mut report.conclusion_residuals, &out.axiom_report);
    let oracle = out.oracle_distance.unwrap_or(f64::MAX);
    report
        .conclusion_residuals
        .insert("formula vs oracle".into(), Check::new(oracle, ORACLE_TOL));

    if let Some(dual) = s.dual() {
        let d = additive::formula_candidate(&dual, tol)
            .map(|(c, _)| sanitize(out.candidate.relative_distance(&c.transpose())))
            .unwrap_or(f64::MAX);
        report
            .cross_checks
            .insert(format!("duality vs {}", dual.theorem), Check::new(d, DUALITY_TOL));
    }

    let verdict = report.residual_verdict();
    let msg = (verdict == Verdict::ConclusionFail).then(|| conclusion_message(&report));
    Ok(report.finish(verdict, msg))
}

fn verify_block(s: &BlockScenario, mut report: VerificationReport, tol: &Tolerance) -> Result<VerificationReport> {
    let chk = match blockmat::check(s, tol) {
        Ok(c) => c,
        Err(e) if is_invertibility_failure(&e) => {
            let msg = format!("block without group inverse: {e}");
            return Ok(report.finish(Verdict::HypothesisFail, Some(msg)));
        }
        Err(e) => return Err(e),
    };
    put_residuals(&mut report.hypothesis_residuals, &chk.residuals, tol.residual);
    if let Some(ranks) = chk.ranks {
        report.diagnostics.insert("ranks [B, C, BC, CB]".into(), json!(ranks));
        let spread = ranks.iter().max().unwrap() - ranks.iter().min().unwrap();
        report
            .hypothesis_residuals
            .insert("rank pattern spread".into(), Check::new(spread as f64, 0.0));
    }
    if report.residual_verdict() == Verdict::HypothesisFail {
        return Ok(report.finish(
            Verdict::HypothesisFail,
            Some("hypothesis residual above tolerance".into()),
        ));
    }

    let target = s.target();
    let info = is_group_invertible(&target, tol)?;
    report.diagnostics.insert("rank(M)".into(), json!(info.rank));
    report.diagnostics.insert("rank(M^2)".into(), json!(info.rank_sq));
    report.diagnostics.insert("marginal_rank".into(), json!(info.marginal));
    report.conclusion_residuals.insert(
        "rank gap of M".into(),
        Check::new(info.rank.abs_diff(info.rank_sq) as f64, 0.0),
    );
    if !info.invertible {
        let msg = format!(
            "hypotheses hold but M is not group invertible: rank(M) = {}, rank(M^2) = {}",
            info.rank, info.rank_sq
        );
        return Ok(report.finish(Verdict::ConclusionFail, Some(msg)));
    }

    let out = match blockmat::msharp_unchecked(s, chk, tol) {
        Ok(o) => o,
        Err(e) if is_invertibility_failure(&e) => {
            return Ok(report.finish(Verdict::ConclusionFail, Some(e.to_string())));
        }
        Err(e) => return Err(e),
    };
    put_axioms(&mut report.conclusion_residuals, &out.axioms);
    put_residuals(&mut report.cross_checks, &out.cross_checks, out.cross_check_tol);
    if let Some(k) = out.k_diagnostic {
        report.diagnostics.insert("k_diagnostic".into(), json!(k));
        report
            .diagnostics
            .insert("k_diagnostic_consistent".into(), json!(k.consistent()));
    }
    if let Some(b) = out.literal_layout_group_invertible {
        report
            .diagnostics
            .insert("literal_layout_group_invertible".into(), json!(b));
    }

    let dual = s.dual();
    let d = group_inverse(&dual.target(), tol)
        .map(|g| sanitize(out.msharp.relative_distance(&g.ginv.transpose())))
        .unwrap_or(f64::MAX);
    report
        .cross_checks
        .insert(format!("duality vs {}", dual.theorem), Check::new(d, DUALITY_TOL));

    let verdict = report.residual_verdict();
    let msg = (verdict == Verdict::ConclusionFail).then(|| conclusion_message(&report));
    Ok(report.finish(verdict, msg))
}

fn conclusion_message(r: &VerificationReport) -> String {
    let failed: Vec<_> = r
        .conclusion_residuals
        .iter()
        .filter(|(_, c)| !c.pass)
        .map(|(k, c)| format!("{k} = {:.3e}", c.value))
        .collect();
    format!("hypotheses hold but the conclusion fails: {}", failed.join(", "))
}

/// Verifies the group inverse of a single matrix candidate against `a`.
pub fn axiom_checks(a: &ComplexMatrix, x: &ComplexMatrix, tol: &Tolerance) -> Result<CheckMap> {
    let ax = verify_group_axioms(a, x, tol)?;
    let mut m = CheckMap::new();
    put_axioms(&mut m, &ax);
    Ok(m)
}
