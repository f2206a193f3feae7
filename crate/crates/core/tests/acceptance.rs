//! Acceptance criteria 1-7. Each test writes one `criterion N: PASS|FAIL`
//! line straight to stderr (bypassing output capture) before asserting.

use std::io::Write;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use num_complex::Complex64;

use groupinv::additive::{formula_candidate, hypothesis_residuals, AdditiveScenario};
use groupinv::gen::{random_group_invertible, DEFAULT_COND_BOUND};
use groupinv::ginv::{group_inverse, group_inverse_cline, verify_group_axioms};
use groupinv::harness::suite::CellSummary;
use groupinv::harness::{
    run_example26, run_fuzz, run_suite, verify, FuzzConfig, FuzzDomain, SuiteConfig, SuiteSummary, Verdict,
    VerifyOptions,
};
use groupinv::linalg::{mix_seed, ComplexMatrix, Tolerance};
use groupinv::theorem::{Family, Theorem};

const MASTER_SEED: u64 = 20_240_601;
const ORACLE_TOL: f64 = 1e-8;
const AXIOM_TOL: f64 = 1e-8;
const HYPOTHESIS_TOL: f64 = 1e-10;
const DUALITY_TOL: f64 = 1e-10;
const EXAMPLE_TOL: f64 = 1e-12;

fn report(n: u32, pass: bool, summary: &str, details: &[String]) {
    let mut err = std::io::stderr().lock();
    let verdict = if pass { "PASS" } else { "FAIL" };
    let _ = writeln!(err, "criterion {n}: {verdict} - {summary}");
    for d in details {
        let _ = writeln!(err, "    {d}");
    }
}

struct SuiteRun {
    summary: SuiteSummary,
    json: String,
    elapsed: Duration,
}

fn suite_config() -> SuiteConfig {
    SuiteConfig {
        seed: MASTER_SEED,
        ..SuiteConfig::default()
    }
}

/// The full default suite (every statement, default grids, 100 per cell), run once.
fn full_suite() -> &'static SuiteRun {
    static RUN: OnceLock<SuiteRun> = OnceLock::new();
    RUN.get_or_init(|| {
        let start = Instant::now();
        let summary = run_suite(&suite_config()).expect("suite runs");
        SuiteRun {
            json: summary.to_json_pretty(),
            summary,
            elapsed: start.elapsed(),
        }
    })
}

fn cells_of(s: &SuiteSummary, family: Family) -> impl Iterator<Item = &CellSummary> {
    s.cells.iter().filter(move |c| c.cell.theorem.family() == family)
}

fn worst(c: &CellSummary, key: &str) -> f64 {
    c.worst_conclusion.get(key).copied().unwrap_or(0.0)
}

fn worst_axiom(c: &CellSummary) -> f64 {
    c.worst_conclusion
        .iter()
        .filter(|(k, _)| k.starts_with("axiom"))
        .map(|(_, v)| *v)
        .fold(0.0, f64::max)
}

fn fmt_cell(c: &CellSummary) -> String {
    let l = c.cell.lambda;
    let mode = c.cell.mode.map(|m| format!(" {m}")).unwrap_or_default();
    format!(
        "{} lambda=({}, {}) dims={:?}{}",
        c.cell.theorem, l.re, l.im, c.cell.dims, mode
    )
}

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

#[test]
fn criterion_1_worked_example() {
    let start = Instant::now();
    let e = run_example26(&Tolerance::default()).unwrap();
    let elapsed = start.elapsed();

    let expected_sum = ComplexMatrix::from_real(&[[-1.0, 0.0], [-0.5, -0.5]]);
    let expected_a = ComplexMatrix::from_real(&[[-0.75, 0.25], [-0.25, -0.25]]);
    let sum_err = e.candidate.max_abs_diff(&expected_sum);
    let a_err = e.a_sharp.max_abs_diff(&expected_a);
    let b_err = e.b_sharp.max_abs_diff(&e.b);
    let ab_exact = e.ab == e.b.scale_real(-2.0);
    let pass = sum_err <= EXAMPLE_TOL
        && a_err <= EXAMPLE_TOL
        && b_err <= EXAMPLE_TOL
        && ab_exact
        && e.report.verdict == Verdict::Pass
        && elapsed < Duration::from_secs(1);
    report(
        1,
        pass,
        &format!(
            "(A+B)# err {sum_err:.1e}, A# err {a_err:.1e}, B# err {b_err:.1e}, AB = -2B exact: {ab_exact}, {:.1} ms",
            elapsed.as_secs_f64() * 1e3
        ),
        &[],
    );
    assert!(pass, "{}", e.to_text());
}

#[test]
fn criterion_2_formula_vs_oracle() {
    let run = full_suite();
    let s = &run.summary;
    let mut details = Vec::new();
    let mut instances = 0;
    let mut conclusion_fail = 0;
    let mut other_fail = 0;
    for c in cells_of(s, Family::Additive) {
        instances += c.counts.total();
        conclusion_fail += c.counts.conclusion_fail;
        other_fail += c.counts.hypothesis_fail + c.counts.unsupported;
        let bad = c.counts.pass != c.counts.total()
            || worst(c, "formula vs oracle") > ORACLE_TOL
            || worst_axiom(c) > AXIOM_TOL;
        if bad {
            details.push(format!(
                "{}: {} of {} fail, worst oracle distance {:.2e}, worst axiom {:.2e}, corrected formula {}",
                fmt_cell(c),
                c.counts.total() - c.counts.pass,
                c.counts.total(),
                worst(c, "formula vs oracle"),
                worst_axiom(c),
                c.worst_repaired_oracle_distance
                    .map(|d| format!("{d:.2e}"))
                    .unwrap_or_else(|| "n/a".into()),
            ));
        }
    }
    let max_n = cells_of(s, Family::Additive)
        .map(|c| c.cell.dims.iter().sum::<usize>())
        .max()
        .unwrap_or(0);
    let per_cell_ok = cells_of(s, Family::Additive).all(|c| c.counts.total() == 100);
    let pass = details.is_empty() && per_cell_ok && max_n <= 16 && run.elapsed < Duration::from_secs(120);
    report(
        2,
        pass,
        &format!(
            "{instances} additive instances (n <= {max_n}), {conclusion_fail} ConclusionFail, {other_fail} other non-pass, \
             {} failing cells, suite {:.1} s",
            details.len(),
            run.elapsed.as_secs_f64()
        ),
        &details,
    );
    assert!(pass, "{} failing cells; see criterion 2 output", details.len());
}

#[test]
fn criterion_3_block_existence() {
    let run = full_suite();
    let s = &run.summary;
    let mut details = Vec::new();
    let mut instances = 0;
    for c in cells_of(s, Family::Block) {
        instances += c.counts.total();
        let rank_gap = worst(c, "rank gap of M");
        let axioms = worst_axiom(c);
        let bad = c.counts.pass != c.counts.total()
            || c.worst_hypothesis > HYPOTHESIS_TOL
            || rank_gap > 0.0
            || axioms > AXIOM_TOL
            || c.cross_check_failures > 0;
        if bad {
            let cross: Vec<String> = c
                .worst_cross_checks
                .iter()
                .filter(|(k, _)| !k.starts_with("duality"))
                .map(|(k, v)| format!("{k} = {v:.2e}"))
                .collect();
            details.push(format!(
                "{}: pass {}/{}, worst hypothesis {:.1e}, rank gap {rank_gap}, worst axiom {axioms:.1e}, \
                 cross-check failures {} ({})",
                fmt_cell(c),
                c.counts.pass,
                c.counts.total(),
                c.worst_hypothesis,
                c.cross_check_failures,
                cross.join(", ")
            ));
        }
    }
    let r_covered = [Theorem::T3_5, Theorem::C3_6].iter().all(|&t| {
        [1usize, 2, 4, 8]
            .iter()
            .all(|&n| (0..=n).all(|r| cells_of(s, Family::Block).any(|c| c.cell.theorem == t && c.cell.dims == [n, r])))
    });
    let pass = details.is_empty() && r_covered && run.elapsed < Duration::from_secs(120);
    report(
        3,
        pass,
        &format!(
            "{instances} block instances, {} failing cells, every r in 0..=n covered: {r_covered}",
            details.len()
        ),
        &details,
    );
    assert!(pass, "{} failing cells; see criterion 3 output", details.len());
}

#[test]
fn criterion_4_oracle_cross_validation() {
    let tol = Tolerance::default();
    let mut count = 0;
    let mut worst_dist: f64 = 0.0;
    let mut worst_core: f64 = 0.0;
    let mut failures = Vec::new();
    for i in 0..1088u64 {
        let n = 1 + (i % 16) as usize;
        let r = (i / 16) as usize % (n + 1);
        let a = random_group_invertible(n, r, DEFAULT_COND_BOUND, mix_seed(MASTER_SEED, i));
        let g = group_inverse(&a, &tol).unwrap();
        let c = group_inverse_cline(&a, &tol).unwrap();
        let d = g.ginv.relative_distance(&c);
        count += 1;
        worst_core = worst_core.max(g.core_condition);
        worst_dist = worst_dist.max(d);
        if d > ORACLE_TOL || g.core_condition > 1e6 {
            failures.push(format!("n={n} r={r} distance {d:.2e} core {:.2e}", g.core_condition));
        }
    }

    // Diagnostic only: where the cubed conditioning of a^3 stops the oracle agreeing.
    let mut sweep = [(0usize, 0.0f64, 0.0f64); 7];
    for i in 0..2000u64 {
        let n = 1 + (i % 16) as usize;
        let r = (i / 16) as usize % (n + 1);
        let cond = 10f64.powf(1.0 + 2.0 * ((i * 7919) % 1000) as f64 / 1000.0);
        let a = random_group_invertible(n, r, cond, mix_seed(MASTER_SEED ^ 0x5eed, i));
        if let (Ok(g), Ok(c)) = (group_inverse(&a, &tol), group_inverse_cline(&a, &tol)) {
            let bin = (g.core_condition.log10().max(0.0) as usize).min(6);
            let ax = verify_group_axioms(&a, &g.ginv, &tol).unwrap().worst();
            let e = &mut sweep[bin];
            *e = (e.0 + 1, e.1.max(g.ginv.relative_distance(&c)), e.2.max(ax));
        }
    }
    let mut details = failures.clone();
    details.extend(sweep.iter().enumerate().filter(|(_, e)| e.0 > 0).map(|(b, e)| {
        format!(
            "diagnostic, core condition 1e{b}: {} matrices, worst oracle distance {:.1e}, worst factorization axiom {:.1e}",
            e.0, e.1, e.2
        )
    }));
    let pass = failures.is_empty() && count >= 1000;
    report(
        4,
        pass,
        &format!("{count} matrices, worst relative distance {worst_dist:.2e}, worst core condition {worst_core:.2e}"),
        &details,
    );
    assert!(pass);
}

#[test]
fn criterion_5_lambda_zero_gap() {
    let start = Instant::now();
    let tol = Tolerance::default();
    let a = ComplexMatrix::from_real(&[[0.0, 1.0], [0.0, 1.0]]);
    let b = ComplexMatrix::from_real(&[[1.0, 0.0], [0.0, 0.0]]);
    let s = AdditiveScenario::new(Theorem::T2_1, re(0.0), a, b).unwrap();

    let hyp = hypothesis_residuals(&s, &tol).unwrap();
    let exact_zero = hyp.iter().all(|r| r.value == 0.0);
    let (cand, _) = formula_candidate(&s, &tol).unwrap();
    let sum = s.sum();
    let cand_ok = cand.max_abs_diff(&ComplexMatrix::from_real(&[[1.0, 1.0], [0.0, 1.0]])) <= EXAMPLE_TOL;
    let sum_ok = sum == ComplexMatrix::from_real(&[[1.0, 1.0], [0.0, 1.0]]);
    let axioms = verify_group_axioms(&sum, &cand, &tol).unwrap();
    let truth = group_inverse(&sum, &tol).unwrap().ginv;
    let truth_ok = truth.max_abs_diff(&ComplexMatrix::from_real(&[[1.0, -1.0], [0.0, 1.0]])) <= EXAMPLE_TOL;

    let verdict = verify(&s.clone().into(), "gap", &VerifyOptions::default())
        .unwrap()
        .verdict;

    let fuzz = run_fuzz(
        &FuzzConfig {
            include_unsupported: true,
            lambdas: Some(vec![[0.0, 0.0]]),
            ..FuzzConfig::new(Theorem::T2_1, FuzzDomain::Binary)
        },
        &VerifyOptions::default(),
    )
    .unwrap();
    let rediscovered = fuzz.findings.iter().any(|f| {
        f.shrunk.instance.n() == 2
            && f.report.hypothesis_residuals.values().all(|c| c.value == 0.0)
            && f.report.conclusion_residuals.values().any(|c| c.value >= 0.1)
    });
    let elapsed = start.elapsed();

    let pass = exact_zero
        && cand_ok
        && sum_ok
        && !axioms.pass
        && axioms.worst() >= 0.1
        && truth_ok
        && verdict == Verdict::Unsupported
        && fuzz.trials_run == 256
        && rediscovered
        && elapsed < Duration::from_secs(30);
    report(
        5,
        pass,
        &format!(
            "hypothesis residual exactly 0: {exact_zero}, candidate [[1,1],[0,1]]: {cand_ok}, worst axiom {:.3}, \
             oracle [[1,-1],[0,1]]: {truth_ok}, verdict {verdict:?}, fuzz {} failing of {} pairs, {:.1} s",
            axioms.worst(),
            fuzz.conclusion_failures,
            fuzz.trials_run,
            elapsed.as_secs_f64()
        ),
        &[],
    );
    assert!(pass);
}

#[test]
fn criterion_6_duality() {
    let s = &full_suite().summary;
    let corollaries = [
        Theorem::C2_2,
        Theorem::C2_5,
        Theorem::C3_2,
        Theorem::C3_4,
        Theorem::C3_6,
    ];
    let mut worst_all: f64 = 0.0;
    let mut details = Vec::new();
    let mut checked = 0;
    for c in s.cells.iter().filter(|c| corollaries.contains(&c.cell.theorem)) {
        let dual = c.cell.theorem.dual_parent().unwrap();
        let key = format!("duality vs {dual}");
        match c.worst_cross_checks.get(&key) {
            Some(&d) => {
                checked += c.counts.total();
                worst_all = worst_all.max(d);
                if d > DUALITY_TOL {
                    details.push(format!("{}: duality distance {d:.2e}", fmt_cell(c)));
                }
            }
            None => details.push(format!("{}: no duality value recorded", fmt_cell(c))),
        }
    }
    let pass = details.is_empty() && checked > 0;
    report(
        6,
        pass,
        &format!("{checked} corollary instances, worst transpose-duality distance {worst_all:.2e}"),
        &details,
    );
    assert!(pass);
}

#[test]
fn criterion_7_determinism() {
    let first = full_suite();
    let second = run_suite(&suite_config()).unwrap().to_json_pretty();
    let pass = first.json == second;
    report(
        7,
        pass,
        &format!(
            "two runs with seed {MASTER_SEED}: {} bytes each, identical: {pass}",
            first.json.len()
        ),
        &[],
    );
    assert!(pass);
}
