//! Generated-instance suites over (theorem, lambda, dims) cells.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gen::{generate_additive, generate_block, C23Mode, GeneratorConfig, Provenance};
use crate::linalg::mix_seed;
use crate::theorem::{lambda_serde, Family, Theorem};

use super::instance::{Instance, InstanceFile};
use super::verify::{verify_file, Verdict, VerificationReport, VerifyOptions};

pub const DEFAULT_COUNT: usize = 100;

/// One grid cell: every instance in it shares statement, lambda and dims.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub theorem: Theorem,
    #[serde(with = "lambda_serde")]
    pub lambda: Complex64,
    pub dims: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<C23Mode>,
}

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Default lambda grid per statement.
pub fn default_lambdas(theorem: Theorem) -> Vec<Complex64> {
    match theorem {
        Theorem::T2_1 | Theorem::C2_2 | Theorem::C2_3 => vec![
            re(-2.0),
            re(-1.0),
            re(-0.5),
            re(0.5),
            re(1.0),
            re(3.0),
            Complex64::new(1.0, 1.0),
        ],
        Theorem::T2_4 | Theorem::C2_5 => {
            vec![re(-2.0), re(0.0), re(0.5), re(1.0), re(3.0), Complex64::new(1.0, 1.0)]
        }
        Theorem::T3_1 | Theorem::C3_2 | Theorem::T3_3 | Theorem::C3_4 => {
            vec![re(0.5), re(1.0), re(2.0), Complex64::new(1.0, 1.0)]
        }
        Theorem::T3_5 | Theorem::C3_6 => vec![re(1.0)],
    }
}

/// Default dimension patterns per statement (largest operand is 16 x 16).
pub fn default_dims(theorem: Theorem, mode: Option<C23Mode>) -> Vec<Vec<usize>> {
    match (theorem, mode) {
        (Theorem::T2_1 | Theorem::C2_2, _) => {
            vec![vec![1, 1, 1, 1], vec![2, 0, 2, 1], vec![3, 2, 2, 1], vec![4, 4, 4, 4]]
        }
        (Theorem::T2_4 | Theorem::C2_5, _) => vec![vec![1, 1], vec![2, 3], vec![4, 4], vec![8, 8]],
        (Theorem::C2_3, Some(C23Mode::Commuting)) => vec![vec![1, 1, 1, 1], vec![2, 3, 2, 3], vec![4, 4, 4, 4]],
        (Theorem::C2_3, _) => vec![vec![1, 1, 1], vec![3, 2, 3], vec![6, 5, 5]],
        (Theorem::T3_5 | Theorem::C3_6, _) => [1usize, 2, 4, 8]
            .into_iter()
            .flat_map(|n| (0..=n).map(move |r| vec![n, r]))
            .collect(),
        _ => vec![vec![1], vec![2], vec![4], vec![8]],
    }
}

#[derive(Debug, Clone)]
pub struct SuiteConfig {
    pub theorems: Vec<Theorem>,
    /// Instances per cell.
    pub count: usize,
    pub seed: u64,
    /// Overrides every statement's lambda grid.
    pub lambdas: Option<Vec<Complex64>>,
    /// Overrides every statement's dimension patterns.
    pub dims: Option<Vec<Vec<usize>>>,
    pub opts: VerifyOptions,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            theorems: Theorem::ALL.to_vec(),
            count: DEFAULT_COUNT,
            seed: 0,
            lambdas: None,
            dims: None,
            opts: VerifyOptions::default(),
        }
    }
}

fn is_one(z: Complex64) -> bool {
    (z - 1.0).norm() <= 1e-12
}

impl SuiteConfig {
    /// Cells in run order. C2.3 gets commuting cells at lambda = 1 and
    /// orthogonal cells on the whole grid.
    pub fn cells(&self) -> Vec<Cell> {
        let mut out = Vec::new();
        for &t in &self.theorems {
            let lambdas = self.lambdas.clone().unwrap_or_else(|| default_lambdas(t));
            let modes: Vec<Option<C23Mode>> = if t == Theorem::C2_3 {
                vec![Some(C23Mode::Commuting), Some(C23Mode::Orthogonal)]
            } else {
                vec![None]
            };
            for mode in modes {
                let dims = self.dims.clone().unwrap_or_else(|| default_dims(t, mode));
                for &lambda in &lambdas {
                    if mode == Some(C23Mode::Commuting) && !is_one(lambda) {
                        continue;
                    }
                    for d in &dims {
                        out.push(Cell {
                            theorem: t,
                            lambda,
                            dims: d.clone(),
                            mode,
                        });
                    }
                }
            }
        }
        out
    }
}

/// Builds the instance of `cell` with the given seed.
pub fn generate_instance(cell: &Cell, seed: u64) -> Result<InstanceFile> {
    generate_with(
        cell.theorem,
        &GeneratorConfig::new(cell.dims.clone(), cell.lambda, seed),
        cell.mode,
    )
}

/// Runs the statement's generator and packages the result as an instance file.
pub fn generate_with(theorem: Theorem, cfg: &GeneratorConfig, mode: Option<C23Mode>) -> Result<InstanceFile> {
    Ok(match theorem.family() {
        Family::Additive => {
            let g = generate_additive(theorem, cfg, mode)?;
            InstanceFile {
                instance: Instance::Additive(g.scenario),
                provenance: Some(g.provenance),
            }
        }
        Family::Block => {
            let g = generate_block(theorem, cfg)?;
            InstanceFile {
                instance: Instance::Block(g.scenario),
                provenance: Some(g.provenance),
            }
        }
    })
}

/// Re-creates the instance a provenance record describes.
pub fn replay(theorem: Theorem, p: &Provenance) -> Result<InstanceFile> {
    generate_with(theorem, &p.config, p.mode)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureRecord {
    pub id: String,
    pub theorem: Theorem,
    #[serde(with = "lambda_serde")]
    pub lambda: Complex64,
    pub dims: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<C23Mode>,
    pub seed: u64,
    pub verdict: Verdict,
    /// Names of the failed residuals (or cross-checks).
    pub failed: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct VerdictCounts {
    pub pass: usize,
    pub hypothesis_fail: usize,
    pub conclusion_fail: usize,
    pub unsupported: usize,
}

impl VerdictCounts {
    pub fn add(&mut self, v: Verdict) {
        *match v {
            Verdict::Pass => &mut self.pass,
            Verdict::HypothesisFail => &mut self.hypothesis_fail,
            Verdict::ConclusionFail => &mut self.conclusion_fail,
            Verdict::Unsupported => &mut self.unsupported,
        } += 1;
    }

    pub fn total(&self) -> usize {
        self.pass + self.hypothesis_fail + self.conclusion_fail + self.unsupported
    }

    pub fn get(&self, v: Verdict) -> usize {
        match v {
            Verdict::Pass => self.pass,
            Verdict::HypothesisFail => self.hypothesis_fail,
            Verdict::ConclusionFail => self.conclusion_fail,
            Verdict::Unsupported => self.unsupported,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub cell: Cell,
    pub counts: VerdictCounts,
    pub cross_check_failures: usize,
    pub worst_hypothesis: f64,
    pub worst_conclusion: BTreeMap<String, f64>,
    pub worst_cross_checks: BTreeMap<String, f64>,
    /// Largest oracle distance of the corrected T2.1/C2.2 formula, when reported.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub worst_repaired_oracle_distance: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Coverage {
    /// Lambdas with at least one evaluated instance, `[re, im]`.
    pub lambdas_exercised: Vec<[f64; 2]>,
    pub lambdas_unsupported: Vec<[f64; 2]>,
    pub dims: Vec<Vec<usize>>,
    pub counts: VerdictCounts,
    pub cross_check_failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteSummary {
    pub seed: u64,
    pub count_per_cell: usize,
    pub total: usize,
    pub counts: VerdictCounts,
    pub cross_check_failures: usize,
    pub coverage: BTreeMap<Theorem, Coverage>,
    pub cells: Vec<CellSummary>,
    /// Hypothesis and conclusion failures.
    pub failures: Vec<FailureRecord>,
    /// Instances whose verdict is unaffected but some cross-check failed.
    pub cross_check_failure_records: Vec<FailureRecord>,
}

impl SuiteSummary {
    /// Exit status of the suite command: zero iff no conclusion failed.
    pub fn exit_code(&self) -> i32 {
        if self.counts.conclusion_fail == 0 {
            0
        } else {
            4
        }
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("summary serializes")
    }

    pub fn to_text(&self) -> String {
        let c = &self.counts;
        let mut out = format!(
            "suite seed={} total={} pass={} hypothesis_fail={} conclusion_fail={} unsupported={} cross_check_failures={}\n",
            self.seed, self.total, c.pass, c.hypothesis_fail, c.conclusion_fail, c.unsupported, self.cross_check_failures
        );
        for (t, cov) in &self.coverage {
            let k = &cov.counts;
            out.push_str(&format!(
                "  {t:<5} pass={:<5} hyp={:<4} concl={:<5} unsup={:<4} xfail={:<5} lambdas={:?} unsupported={:?}\n",
                k.pass,
                k.hypothesis_fail,
                k.conclusion_fail,
                k.unsupported,
                cov.cross_check_failures,
                cov.lambdas_exercised,
                cov.lambdas_unsupported
            ));
        }
        out
    }
}

fn failed_names(r: &VerificationReport) -> Vec<String> {
    r.hypothesis_residuals
        .iter()
        .chain(r.conclusion_residuals.iter())
        .filter(|(_, c)| !c.pass)
        .map(|(k, _)| k.clone())
        .collect()
}

fn record(cell: &Cell, seed: u64, r: &VerificationReport, failed: Vec<String>) -> FailureRecord {
    FailureRecord {
        id: r.id.clone(),
        theorem: cell.theorem,
        lambda: cell.lambda,
        dims: cell.dims.clone(),
        mode: cell.mode,
        seed,
        verdict: r.verdict,
        failed,
        message: r.message.clone(),
    }
}

fn push_unique(v: &mut Vec<[f64; 2]>, z: Complex64) {
    let p = [z.re, z.im];
    if !v.contains(&p) {
        v.push(p);
    }
}

fn fmax(m: &mut BTreeMap<String, f64>, k: &str, v: f64) {
    let e = m.entry(k.to_string()).or_insert(0.0);
    *e = e.max(v);
}

/// Verdict for an instance the generator cannot build: unsupported lambdas
/// and generator modes become `Unsupported`, anything else is an error.
fn generation_outcome(cell: &Cell, seed: u64, id: &str, opts: &VerifyOptions) -> Result<VerificationReport> {
    if opts.enforce_support {
        if let Err(e) = cell.theorem.check_lambda(cell.lambda) {
            return Ok(unsupported_report(cell, id, e, opts));
        }
    }
    match generate_instance(cell, seed) {
        Ok(f) => verify_file(&f, id, opts),
        Err(e @ (Error::UnsupportedLambda { .. } | Error::LambdaIsMinusOne { .. } | Error::UnsupportedMode { .. })) => {
            Ok(unsupported_report(cell, id, e, opts))
        }
        Err(e) => Err(e),
    }
}

fn unsupported_report(cell: &Cell, id: &str, e: Error, opts: &VerifyOptions) -> VerificationReport {
    VerificationReport {
        id: id.to_string(),
        theorem: cell.theorem,
        lambda: cell.lambda,
        n: 0,
        verdict: Verdict::Unsupported,
        message: Some(e.to_string()),
        hypothesis_residuals: Default::default(),
        conclusion_residuals: Default::default(),
        cross_checks: Default::default(),
        diagnostics: Default::default(),
        tolerances: opts.tol,
        timing_ms: None,
        provenance: None,
    }
}

/// Runs every cell. Instance `i` (global index) is generated from
/// `mix_seed(seed, i)`, so output is independent of thread scheduling.
pub fn run_suite(cfg: &SuiteConfig) -> Result<SuiteSummary> {
    if cfg.count == 0 {
        return Err(Error::InvalidConfig("count must be at least 1".into()));
    }
    let cells = cfg.cells();
    if cells.is_empty() {
        return Err(Error::InvalidConfig("empty theorem or lambda grid".into()));
    }
    let opts = VerifyOptions {
        timing: false,
        ..cfg.opts.clone()
    };
    let jobs: Vec<(usize, usize)> = (0..cells.len())
        .flat_map(|c| (0..cfg.count).map(move |i| (c, i)))
        .collect();
    let reports: Vec<Result<(usize, u64, VerificationReport)>> = jobs
        .par_iter()
        .enumerate()
        .map(|(global, &(c, i))| {
            let cell = &cells[c];
            let seed = mix_seed(cfg.seed, global as u64);
            let id = format!("{}/{}/{}", cell.theorem, global, i);
            generation_outcome(cell, seed, &id, &opts).map(|r| (c, seed, r))
        })
        .collect();

    let mut cell_summaries: Vec<CellSummary> = cells
        .iter()
        .map(|cell| CellSummary {
            cell: cell.clone(),
            counts: VerdictCounts::default(),
            cross_check_failures: 0,
            worst_hypothesis: 0.0,
            worst_conclusion: BTreeMap::new(),
            worst_cross_checks: BTreeMap::new(),
            worst_repaired_oracle_distance: None,
        })
        .collect();
    let mut summary = SuiteSummary {
        seed: cfg.seed,
        count_per_cell: cfg.count,
        total: 0,
        counts: VerdictCounts::default(),
        cross_check_failures: 0,
        coverage: BTreeMap::new(),
        cells: Vec::new(),
        failures: Vec::new(),
        cross_check_failure_records: Vec::new(),
    };

    for item in reports {
        let (c, seed, r) = item?;
        let cell = &cells[c];
        let cs = &mut cell_summaries[c];
        let cov = summary.coverage.entry(cell.theorem).or_default();
        summary.total += 1;
        summary.counts.add(r.verdict);
        cs.counts.add(r.verdict);
        cov.counts.add(r.verdict);
        if r.verdict == Verdict::Unsupported {
            push_unique(&mut cov.lambdas_unsupported, cell.lambda);
            continue;
        }
        push_unique(&mut cov.lambdas_exercised, cell.lambda);
        if !cov.dims.contains(&cell.dims) {
            cov.dims.push(cell.dims.clone());
        }
        cs.worst_hypothesis = cs.worst_hypothesis.max(r.worst_hypothesis());
        for (k, v) in &r.conclusion_residuals {
            fmax(&mut cs.worst_conclusion, k, v.value);
        }
        for (k, v) in &r.cross_checks {
            fmax(&mut cs.worst_cross_checks, k, v.value);
        }
        if let Some(d) = r.diagnostics.get("repaired_oracle_distance").and_then(|v| v.as_f64()) {
            cs.worst_repaired_oracle_distance = Some(cs.worst_repaired_oracle_distance.unwrap_or(0.0).max(d));
        }
        if matches!(r.verdict, Verdict::HypothesisFail | Verdict::ConclusionFail) {
            summary.failures.push(record(cell, seed, &r, failed_names(&r)));
        }
        if !r.cross_checks_pass() {
            summary.cross_check_failures += 1;
            cs.cross_check_failures += 1;
            cov.cross_check_failures += 1;
            let names = r
                .cross_checks
                .iter()
                .filter(|(_, c)| !c.pass)
                .map(|(k, _)| k.clone())
                .collect();
            summary.cross_check_failure_records.push(record(cell, seed, &r, names));
        }
    }
    summary.cells = cell_summaries;
    Ok(summary)
}
