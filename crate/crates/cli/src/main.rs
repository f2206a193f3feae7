//! `groupinv` command-line harness.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde_json::json;

use groupinv::gen::{C23Mode, GeneratorConfig, DEFAULT_COND_BOUND};
use groupinv::ginv::{group_inverse, group_inverse_cline, verify_group_axioms};
use groupinv::harness::suite::generate_with;
use groupinv::harness::{
    parse_instance, run_example26, run_fuzz, run_suite, verify_file, FuzzConfig, FuzzDomain, InstanceFile, SuiteConfig,
    VerifyOptions,
};
use groupinv::linalg::{ComplexMatrix, Tolerance};
use groupinv::theorem::Theorem;
use groupinv::Error;

#[derive(Debug, Parser)]
#[command(name = "groupinv", version)]
#[command(about = "Group inverses, additive and block formulas: compute, verify, fuzz")]
struct Cli {
    #[command(flatten)]
    common: Common,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Relative rank cutoff (default: max(m, n) * machine epsilon).
    #[arg(long, global = true)]
    tol_rank: Option<f64>,

    /// Residual tolerance for hypotheses and axioms.
    #[arg(long, global = true, default_value_t = 1e-8)]
    tol_resid: f64,

    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,

    /// Also write the output to this file.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Debug, Args)]
struct GenerateArgs {
    /// Statement tag, e.g. T2.1 or C3.6.
    theorem: Theorem,

    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Comma-separated block dimensions, e.g. 1,1,1,1.
    #[arg(long, value_delimiter = ',', required = true)]
    dims: Vec<usize>,

    /// Lambda as `2`, `-0.5`, `1+1i` or `re,im`.
    #[arg(long, value_parser = parse_lambda, default_value = "1")]
    lambda: Complex64,

    /// C2.3 generator mode.
    #[arg(long)]
    mode: Option<C23Mode>,

    /// Condition bound of the random similarity.
    #[arg(long, default_value_t = DEFAULT_COND_BOUND)]
    cond_bound: f64,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Group inverse of the matrix in a JSON file
    Ginv { file: PathBuf },

    /// Verify one instance file, or a freshly generated instance
    Verify {
        /// Instance JSON file.
        #[arg(required_unless_present = "generate", conflicts_with = "generate")]
        file: Option<PathBuf>,

        /// Generate the instance instead of reading it: statement tag.
        #[arg(long)]
        generate: Option<Theorem>,

        #[arg(long, default_value_t = 0)]
        seed: u64,

        #[arg(long, value_delimiter = ',')]
        dims: Vec<usize>,

        #[arg(long, value_parser = parse_lambda, default_value = "1")]
        lambda: Complex64,

        #[arg(long)]
        mode: Option<C23Mode>,

        /// Evaluate lambdas the statement excludes instead of reporting Unsupported.
        #[arg(long)]
        include_unsupported: bool,

        /// Record wall-clock timing in the report.
        #[arg(long)]
        timing: bool,
    },

    /// Run generated instances over (statement, lambda, dims) grids
    Suite {
        /// Comma-separated statement tags (default: all).
        #[arg(long, value_delimiter = ',')]
        theorems: Vec<Theorem>,

        /// Instances per cell.
        #[arg(long, default_value_t = 100)]
        count: usize,

        #[arg(long, default_value_t = 0)]
        seed: u64,

        /// Semicolon-separated lambda grid overriding the defaults, e.g. "2;1+1i".
        #[arg(long)]
        lambdas: Option<String>,

        /// Semicolon-separated dimension patterns, e.g. "1,1,1,1;2,0,2,1".
        #[arg(long)]
        dims: Option<String>,
    },

    /// Search for instances whose hypotheses hold but whose conclusion fails
    Fuzz {
        theorem: Theorem,

        #[arg(long, default_value_t = 1000)]
        trials: usize,

        #[arg(long, default_value_t = 0)]
        seed: u64,

        #[arg(long, value_enum, default_value_t = DomainArg::Perturbed)]
        domain: DomainArg,

        /// Operand size for the binary and gaussian domains.
        #[arg(long, default_value_t = 2)]
        n: usize,

        /// Relative perturbation for the perturbed domain.
        #[arg(long, default_value_t = 1e-3)]
        scale: f64,

        /// Also sample lambda = 0 and -1.
        #[arg(long)]
        include_unsupported: bool,

        /// Semicolon-separated lambdas overriding the defaults.
        #[arg(long)]
        lambdas: Option<String>,

        #[arg(long, default_value_t = 10)]
        max_findings: usize,

        /// Directory for replayable instance files of the findings.
        #[arg(long)]
        findings_dir: Option<PathBuf>,
    },

    /// Reproduce the worked 2x2 example (lambda = -2)
    Example26,

    /// Emit a generated instance file without verifying it
    Generate(GenerateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DomainArg {
    Binary,
    Gaussian,
    Perturbed,
}

impl From<DomainArg> for FuzzDomain {
    fn from(d: DomainArg) -> Self {
        match d {
            DomainArg::Binary => FuzzDomain::Binary,
            DomainArg::Gaussian => FuzzDomain::Gaussian,
            DomainArg::Perturbed => FuzzDomain::Perturbed,
        }
    }
}

fn parse_lambda(s: &str) -> Result<Complex64, String> {
    let t = s.trim().trim_start_matches('[').trim_end_matches(']');
    if let Some((re, im)) = t.split_once(',') {
        let re = re.trim().parse::<f64>().map_err(|e| e.to_string())?;
        let im = im.trim().parse::<f64>().map_err(|e| e.to_string())?;
        return Ok(Complex64::new(re, im));
    }
    t.replace(' ', "")
        .parse::<Complex64>()
        .map_err(|_| format!("cannot parse lambda `{s}`"))
        .and_then(|z| {
            if z.is_finite() {
                Ok(z)
            } else {
                Err("lambda must be finite".into())
            }
        })
}

fn parse_lambda_list(s: &str) -> anyhow::Result<Vec<Complex64>> {
    s.split(';')
        .filter(|p| !p.trim().is_empty())
        .map(|p| parse_lambda(p).map_err(anyhow::Error::msg))
        .collect()
}

fn parse_dims_list(s: &str) -> anyhow::Result<Vec<Vec<usize>>> {
    s.split(';')
        .filter(|p| !p.trim().is_empty())
        .map(|p| {
            p.split(',')
                .map(|k| {
                    k.trim()
                        .parse::<usize>()
                        .with_context(|| format!("bad dimension `{k}`"))
                })
                .collect()
        })
        .collect()
}

impl Common {
    fn tolerance(&self) -> anyhow::Result<Tolerance> {
        Ok(Tolerance::new(self.tol_rank, self.tol_resid)?)
    }

    /// Prints `body` and mirrors it to `--out`.
    fn emit(&self, body: &str) -> anyhow::Result<()> {
        let mut stdout = io::stdout().lock();
        match writeln!(stdout, "{}", body.trim_end()) {
            Err(e) if e.kind() != io::ErrorKind::BrokenPipe => return Err(e.into()),
            _ => {}
        }
        if let Some(p) = &self.out {
            write_file(p, body)?;
        }
        Ok(())
    }

    fn render<T: serde::Serialize>(&self, value: &T, text: impl FnOnce() -> String) -> String {
        match self.format {
            Format::Json => serde_json::to_string_pretty(value).expect("serializable output"),
            Format::Text => text(),
        }
    }
}

fn write_file(p: &Path, body: &str) -> anyhow::Result<()> {
    if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(p, body).with_context(|| format!("writing {}", p.display()))
}

fn read_file(p: &Path) -> anyhow::Result<String> {
    fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))
}

fn cmd_ginv(common: &Common, file: &Path) -> anyhow::Result<u8> {
    let tol = common.tolerance()?;
    let a: ComplexMatrix =
        serde_json::from_str(&read_file(file)?).with_context(|| format!("parsing {}", file.display()))?;
    match group_inverse(&a, &tol) {
        Ok(r) => {
            let axioms = verify_group_axioms(&a, &r.ginv, &tol)?;
            let cline = group_inverse_cline(&a, &tol).ok().map(|c| r.ginv.relative_distance(&c));
            let out = json!({
                "ginv": r.ginv,
                "rank": r.rank,
                "group_projector": r.group_projector,
                "spectral_projector": r.spectral_projector,
                "diagnostics": {
                    "core_condition": r.core_condition,
                    "marginal": r.marginal,
                    "axioms": axioms,
                    "cline_distance": cline,
                },
            });
            common.emit(&common.render(&out, || {
                format!("rank {}\nginv {:?}\naxioms {:?}", r.rank, r.ginv, axioms)
            }))?;
            Ok(0)
        }
        Err(Error::NotGroupInvertible {
            rank,
            rank_sq,
            marginal,
        }) => {
            let out = json!({
                "error": "NotGroupInvertible",
                "rank": rank,
                "rank_sq": rank_sq,
                "marginal": marginal,
            });
            common.emit(&common.render(&out, || {
                format!("not group invertible: rank {rank}, rank of square {rank_sq}")
            }))?;
            Ok(2)
        }
        Err(e) => Err(e.into()),
    }
}

fn generator_config(dims: Vec<usize>, lambda: Complex64, seed: u64, cond_bound: f64) -> GeneratorConfig {
    GeneratorConfig {
        cond_bound,
        ..GeneratorConfig::new(dims, lambda, seed)
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_verify(
    common: &Common,
    file: Option<&Path>,
    generate: Option<Theorem>,
    seed: u64,
    dims: Vec<usize>,
    lambda: Complex64,
    mode: Option<C23Mode>,
    include_unsupported: bool,
    timing: bool,
) -> anyhow::Result<u8> {
    let opts = VerifyOptions {
        tol: common.tolerance()?,
        enforce_support: !include_unsupported,
        timing,
    };
    let (inst, id) = match (file, generate) {
        (Some(p), _) => {
            let inst = parse_instance(&read_file(p)?).with_context(|| format!("parsing {}", p.display()))?;
            (inst, p.display().to_string())
        }
        (None, Some(t)) => {
            if dims.is_empty() {
                bail!("--generate needs --dims");
            }
            if opts.enforce_support {
                if let Err(e) = t.check_lambda(lambda) {
                    return report_unsupported(common, t, lambda, e);
                }
            }
            let cfg = generator_config(dims, lambda, seed, DEFAULT_COND_BOUND);
            match generate_with(t, &cfg, mode) {
                Ok(inst) => (inst, format!("{t}/seed={seed}")),
                Err(
                    e @ (Error::UnsupportedLambda { .. }
                    | Error::LambdaIsMinusOne { .. }
                    | Error::UnsupportedMode { .. }),
                ) => {
                    return report_unsupported(common, t, lambda, e);
                }
                Err(e) => return Err(e.into()),
            }
        }
        (None, None) => bail!("give an instance file or --generate"),
    };
    let report = verify_file(&inst, &id, &opts)?;
    common.emit(&common.render(&report, || report.to_text()))?;
    Ok(report.verdict.exit_code() as u8)
}

fn report_unsupported(common: &Common, t: Theorem, lambda: Complex64, e: Error) -> anyhow::Result<u8> {
    let out = json!({
        "theorem": t,
        "lambda": [lambda.re, lambda.im],
        "verdict": "Unsupported",
        "message": e.to_string(),
    });
    common.emit(&common.render(&out, || format!("{t}: Unsupported: {e}")))?;
    Ok(5)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: &Cli) -> anyhow::Result<u8> {
    let common = &cli.common;
    match &cli.command {
        Command::Ginv { file } => cmd_ginv(common, file),
        Command::Verify {
            file,
            generate,
            seed,
            dims,
            lambda,
            mode,
            include_unsupported,
            timing,
        } => cmd_verify(
            common,
            file.as_deref(),
            *generate,
            *seed,
            dims.clone(),
            *lambda,
            *mode,
            *include_unsupported,
            *timing,
        ),
        Command::Suite {
            theorems,
            count,
            seed,
            lambdas,
            dims,
        } => {
            let cfg = SuiteConfig {
                theorems: if theorems.is_empty() {
                    Theorem::ALL.to_vec()
                } else {
                    theorems.clone()
                },
                count: *count,
                seed: *seed,
                lambdas: lambdas.as_deref().map(parse_lambda_list).transpose()?,
                dims: dims.as_deref().map(parse_dims_list).transpose()?,
                opts: VerifyOptions {
                    tol: common.tolerance()?,
                    ..VerifyOptions::default()
                },
            };
            let summary = run_suite(&cfg)?;
            common.emit(&common.render(&summary, || summary.to_text()))?;
            Ok(summary.exit_code() as u8)
        }
        Command::Fuzz {
            theorem,
            trials,
            seed,
            domain,
            n,
            scale,
            include_unsupported,
            lambdas,
            max_findings,
            findings_dir,
        } => {
            let cfg = FuzzConfig {
                trials: *trials,
                seed: *seed,
                n: *n,
                scale: *scale,
                include_unsupported: *include_unsupported,
                lambdas: lambdas
                    .as_deref()
                    .map(parse_lambda_list)
                    .transpose()?
                    .map(|v| v.into_iter().map(|z| [z.re, z.im]).collect()),
                max_findings: *max_findings,
                ..FuzzConfig::new(*theorem, (*domain).into())
            };
            let opts = VerifyOptions {
                tol: common.tolerance()?,
                ..VerifyOptions::default()
            };
            let summary = run_fuzz(&cfg, &opts)?;
            if let Some(dir) = findings_dir {
                fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
                for f in &summary.findings {
                    let p = dir.join(format!("{}-trial{}.json", theorem.tag().replace('.', ""), f.trial));
                    write_file(&p, &f.shrunk.to_json_pretty())?;
                }
            }
            common.emit(&common.render(&summary, || summary.to_text()))?;
            Ok(0)
        }
        Command::Example26 => {
            let e = run_example26(&common.tolerance()?)?;
            common.emit(&common.render(&e, || e.to_text()))?;
            Ok(if e.pass() { 0 } else { 4 })
        }
        Command::Generate(g) => {
            let cfg = generator_config(g.dims.clone(), g.lambda, g.seed, g.cond_bound);
            let inst: InstanceFile = generate_with(g.theorem, &cfg, g.mode)?;
            common.emit(&inst.to_json_pretty())?;
            Ok(0)
        }
    }
}
