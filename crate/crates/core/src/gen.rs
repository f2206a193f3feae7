//! Seeded generators that build instances satisfying each statement's
//! hypotheses from the Peirce normal forms used in the proofs, then hide the
//! structure behind a random similarity.
//!
//! Corollary instances are the duals of the parent theorem's instances.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::additive::AdditiveScenario;
use crate::blockmat::BlockScenario;
use crate::error::{Error, Result};
use crate::linalg::{
    invert, random_general_with, random_invertible_with, rng_from_seed, ComplexMatrix, MatrixRng, Tolerance, ONE,
};
use crate::theorem::{is_minus_one, lambda_serde, Theorem, ZERO_LAMBDA_TOL};

/// Default condition bound for similarities and invertible blocks.
pub const DEFAULT_COND_BOUND: f64 = 10.0;

/// Complete set of idempotents `e_1..e_k` (`e_i e_j = δ_ij e_i`, `Σ e_i = I`).
#[derive(Debug, Clone, PartialEq)]
pub struct PeirceFrame {
    projectors: Vec<ComplexMatrix>,
    dims: Vec<usize>,
}

impl PeirceFrame {
    /// Coordinate frame: `e_i` is the identity on the `i`-th diagonal block.
    /// The projectors sum to `I` exactly.
    pub fn coordinate(dims: &[usize]) -> Result<Self> {
        let n: usize = dims.iter().sum();
        if n == 0 {
            return Err(Error::InvalidConfig("frame dimensions sum to zero".into()));
        }
        let projectors = (0..dims.len())
            .map(|blk| {
                let diag: Vec<f64> = dims
                    .iter()
                    .enumerate()
                    .flat_map(|(i, &k)| std::iter::repeat_n(if i == blk { 1.0 } else { 0.0 }, k))
                    .collect();
                ComplexMatrix::from_real_diag(&diag)
            })
            .collect();
        Ok(PeirceFrame {
            projectors,
            dims: dims.to_vec(),
        })
    }

    /// `e_i -> S e_i S^-1`.
    pub fn conjugate(&self, s: &ComplexMatrix, s_inv: &ComplexMatrix) -> Self {
        PeirceFrame {
            projectors: self.projectors.iter().map(|e| &(s * e) * s_inv).collect(),
            dims: self.dims.clone(),
        }
    }

    pub fn projectors(&self) -> &[ComplexMatrix] {
        &self.projectors
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn n(&self) -> usize {
        self.projectors[0].rows()
    }

    /// `e_i x e_j`.
    pub fn peirce_component(&self, x: &ComplexMatrix, i: usize, j: usize) -> ComplexMatrix {
        &(&self.projectors[i] * x) * &self.projectors[j]
    }

    /// Largest of `‖e_i e_j‖` (i ≠ j), `‖e_i² − e_i‖` and `‖Σ e_i − I‖`.
    pub fn invariant_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        let mut sum = ComplexMatrix::zeros(self.n(), self.n());
        for (i, ei) in self.projectors.iter().enumerate() {
            sum = &sum + ei;
            worst = worst.max((&(ei * ei) - ei).max_abs());
            for (j, ej) in self.projectors.iter().enumerate() {
                if i != j {
                    worst = worst.max((ei * ej).max_abs());
                }
            }
        }
        worst.max((&sum - &ComplexMatrix::identity(self.n())).max_abs())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    /// `k1..k4` for T2.1, `[k, n - k]` for T2.4, `[ka, kb, k0]` or
    /// `[k_ab, k_a, k_b, k_0]` for C2.3, `[n]` or `[n, r]` for block statements.
    pub dims: Vec<usize>,
    #[serde(with = "lambda_serde")]
    pub lambda: Complex64,
    pub seed: u64,
    pub cond_bound: f64,
}

impl GeneratorConfig {
    pub fn new(dims: Vec<usize>, lambda: Complex64, seed: u64) -> Self {
        GeneratorConfig {
            dims,
            lambda,
            seed,
            cond_bound: DEFAULT_COND_BOUND,
        }
    }

    fn validate(&self, arity: &[usize], what: &str) -> Result<()> {
        if !arity.contains(&self.dims.len()) {
            return Err(Error::InvalidConfig(format!(
                "{what}: expected {arity:?} dimensions, got {}",
                self.dims.len()
            )));
        }
        if self.dims.iter().all(|&k| k == 0) {
            return Err(Error::InvalidConfig(format!("{what}: all dimensions are zero")));
        }
        if !(self.cond_bound > 1.0 && self.cond_bound.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "cond_bound must be a finite number > 1, got {}",
                self.cond_bound
            )));
        }
        if !self.lambda.is_finite() {
            return Err(Error::InvalidConfig("lambda must be finite".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum C23Mode {
    /// Shared eigenbasis, `ab = ba`; needs lambda = 1.
    Commuting,
    /// Disjoint supports, `ab = ba = 0`; any lambda.
    Orthogonal,
}

impl std::str::FromStr for C23Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "commuting" => Ok(C23Mode::Commuting),
            "orthogonal" => Ok(C23Mode::Orthogonal),
            other => Err(Error::InvalidConfig(format!("unknown C2.3 mode '{other}'"))),
        }
    }
}

impl std::fmt::Display for C23Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            C23Mode::Commuting => "commuting",
            C23Mode::Orthogonal => "orthogonal",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub generator: String,
    pub seed: u64,
    pub config: GeneratorConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<C23Mode>,
}

/// A generated instance together with its canonical (unconjugated) form.
#[derive(Debug, Clone)]
pub struct Generated<S> {
    pub scenario: S,
    pub canonical: S,
    pub similarity: Option<ComplexMatrix>,
    pub provenance: Provenance,
}

impl<S> Generated<S> {
    fn map<T>(self, f: impl Fn(S) -> T, generator: &str) -> Generated<T> {
        Generated {
            scenario: f(self.scenario),
            canonical: f(self.canonical),
            similarity: self.similarity,
            provenance: Provenance {
                generator: generator.into(),
                ..self.provenance
            },
        }
    }
}

pub type GeneratedAdditive = Generated<AdditiveScenario>;
pub type GeneratedBlock = Generated<BlockScenario>;

/// Similarity together with its inverse.
struct Similarity {
    s: ComplexMatrix,
    s_inv: ComplexMatrix,
}

impl Similarity {
    fn draw(n: usize, cond_bound: f64, rng: &mut MatrixRng) -> Self {
        let s = random_invertible_with(n, cond_bound, rng);
        let s_inv = invert(&s, &Tolerance::default()).expect("bounded-condition similarity is invertible");
        Similarity { s, s_inv }
    }

    fn apply(&self, x: &ComplexMatrix) -> ComplexMatrix {
        &(&self.s * x) * &self.s_inv
    }
}

/// Invertible matrix with condition number below `cond_bound`.
pub fn random_similarity(n: usize, cond_bound: f64, seed: u64) -> ComplexMatrix {
    random_invertible_with(n, cond_bound, &mut rng_from_seed(seed))
}

/// `S diag(C, 0) S^-1` with `C` invertible of size `rank`; group invertible by construction.
pub fn random_group_invertible_with(n: usize, rank: usize, cond_bound: f64, rng: &mut MatrixRng) -> ComplexMatrix {
    assert!(rank <= n, "rank exceeds dimension");
    let mut canon = ComplexMatrix::zeros(n, n);
    if rank > 0 {
        canon = canon.with_block(0, 0, &random_invertible_with(rank, cond_bound, rng));
    }
    Similarity::draw(n, cond_bound, rng).apply(&canon)
}

pub fn random_group_invertible(n: usize, rank: usize, cond_bound: f64, seed: u64) -> ComplexMatrix {
    random_group_invertible_with(n, rank, cond_bound, &mut rng_from_seed(seed))
}

// Matrices have positive dimensions, so empty Peirce blocks are `None`.
fn invertible_or_empty(k: usize, cond_bound: f64, rng: &mut MatrixRng) -> Option<ComplexMatrix> {
    (k > 0).then(|| random_invertible_with(k, cond_bound, rng))
}

fn general_or_empty(r: usize, c: usize, rng: &mut MatrixRng) -> Option<ComplexMatrix> {
    (r > 0 && c > 0).then(|| random_general_with(r, c, rng))
}

fn offsets(dims: &[usize]) -> Vec<usize> {
    dims.iter()
        .scan(0, |acc, &k| {
            let o = *acc;
            *acc += k;
            Some(o)
        })
        .collect()
}

fn place(m: ComplexMatrix, row: usize, col: usize, block: Option<&ComplexMatrix>) -> ComplexMatrix {
    match block {
        Some(b) => m.with_block(row, col, b),
        None => m,
    }
}

fn provenance(generator: &str, cfg: &GeneratorConfig, mode: Option<C23Mode>) -> Provenance {
    Provenance {
        generator: generator.into(),
        seed: cfg.seed,
        config: cfg.clone(),
        mode,
    }
}

fn conjugated_additive(
    theorem: Theorem,
    cfg: &GeneratorConfig,
    a: ComplexMatrix,
    b: ComplexMatrix,
    rng: &mut MatrixRng,
    generator: &str,
    mode: Option<C23Mode>,
) -> Result<GeneratedAdditive> {
    let sim = Similarity::draw(a.rows(), cfg.cond_bound, rng);
    let scenario = AdditiveScenario::new(theorem, cfg.lambda, sim.apply(&a), sim.apply(&b))?;
    let canonical = AdditiveScenario::new(theorem, cfg.lambda, a, b)?;
    Ok(Generated {
        scenario,
        canonical,
        similarity: Some(sim.s),
        provenance: provenance(generator, cfg, mode),
    })
}

/// Peirce normal form of the T2.1 proof relative to `{e1..e4}`:
/// `a = [[λB1, A2, 0, 0], [0, A4, 0, 0], 0, 0]`,
/// `b = [[B1, 0, B2, 0], 0, [0, 0, B4, 0], 0]`.
pub fn gen_t21(cfg: &GeneratorConfig) -> Result<GeneratedAdditive> {
    cfg.validate(&[4], "gen_t21")?;
    if cfg.lambda.norm() <= ZERO_LAMBDA_TOL {
        return Err(Error::UnsupportedLambda {
            theorem: "T2.1".into(),
            lambda: cfg.lambda,
            reason: "lambda * B1 must be invertible".into(),
        });
    }
    let k = &cfg.dims;
    let o = offsets(k);
    let n: usize = k.iter().sum();
    let mut rng = rng_from_seed(cfg.seed);
    let b1 = invertible_or_empty(k[0], cfg.cond_bound, &mut rng);
    let a4 = invertible_or_empty(k[1], cfg.cond_bound, &mut rng);
    let b4 = invertible_or_empty(k[2], cfg.cond_bound, &mut rng);
    let a2 = general_or_empty(k[0], k[1], &mut rng);
    let b2 = general_or_empty(k[0], k[2], &mut rng);

    let z = ComplexMatrix::zeros(n, n);
    let a = place(z.clone(), o[0], o[0], b1.as_ref().map(|x| x.scale(cfg.lambda)).as_ref());
    let a = place(a, o[0], o[1], a2.as_ref());
    let a = place(a, o[1], o[1], a4.as_ref());
    let b = place(z, o[0], o[0], b1.as_ref());
    let b = place(b, o[0], o[2], b2.as_ref());
    let b = place(b, o[2], o[2], b4.as_ref());
    conjugated_additive(Theorem::T2_1, cfg, a, b, &mut rng, "gen_t21", None)
}

/// `a = [[λB, A2], [0, A4]]`, `b = [[B, 0], [0, 0]]` with `A4` group
/// invertible; for lambda = 0, `A2 = Z A4`.
pub fn gen_t24(cfg: &GeneratorConfig) -> Result<GeneratedAdditive> {
    cfg.validate(&[2], "gen_t24")?;
    if is_minus_one(cfg.lambda) {
        return Err(Error::LambdaIsMinusOne { theorem: "T2.4".into() });
    }
    let (k, m) = (cfg.dims[0], cfg.dims[1]);
    if k == 0 {
        return Err(Error::InvalidConfig("gen_t24: k must be at least 1".into()));
    }
    let n = k + m;
    let mut rng = rng_from_seed(cfg.seed);
    let bb = random_invertible_with(k, cfg.cond_bound, &mut rng);
    let mut a = ComplexMatrix::zeros(n, n).with_block(0, 0, &bb.scale(cfg.lambda));
    if m > 0 {
        let rank4 = m.div_ceil(2);
        let a4 = random_group_invertible_with(m, rank4, cfg.cond_bound, &mut rng);
        let a2 = if cfg.lambda.norm() <= ZERO_LAMBDA_TOL {
            &random_general_with(k, m, &mut rng) * &a4
        } else {
            random_general_with(k, m, &mut rng)
        };
        a = a.with_block(0, k, &a2).with_block(k, k, &a4);
    }
    let b = ComplexMatrix::zeros(n, n).with_block(0, 0, &bb);
    conjugated_additive(Theorem::T2_4, cfg, a, b, &mut rng, "gen_t24", None)
}

/// Idempotent pairs: orthogonal supports `[ka, kb, k0]` (any lambda) or a
/// shared eigenbasis `[k_ab, k_a, k_b, k_0]` (lambda = 1).
pub fn gen_c23(cfg: &GeneratorConfig, mode: C23Mode) -> Result<GeneratedAdditive> {
    let (da, db): (Vec<f64>, Vec<f64>) = match mode {
        C23Mode::Orthogonal => {
            cfg.validate(&[3], "gen_c23 orthogonal")?;
            let k = &cfg.dims;
            let pattern = |which: usize| -> Vec<f64> {
                (0..3)
                    .flat_map(|blk| std::iter::repeat_n(if blk == which { 1.0 } else { 0.0 }, k[blk]))
                    .collect()
            };
            (pattern(0), pattern(1))
        }
        C23Mode::Commuting => {
            cfg.validate(&[4], "gen_c23 commuting")?;
            if (cfg.lambda - ONE).norm() > ZERO_LAMBDA_TOL {
                return Err(Error::UnsupportedMode {
                    mode: mode.to_string(),
                    lambda: cfg.lambda,
                });
            }
            let k = &cfg.dims;
            let expand = |bits: [f64; 4]| -> Vec<f64> {
                (0..4).flat_map(|blk| std::iter::repeat_n(bits[blk], k[blk])).collect()
            };
            (expand([1.0, 1.0, 0.0, 0.0]), expand([1.0, 0.0, 1.0, 0.0]))
        }
    };
    let mut rng = rng_from_seed(cfg.seed);
    let a = ComplexMatrix::from_real_diag(&da);
    let b = ComplexMatrix::from_real_diag(&db);
    conjugated_additive(Theorem::C2_3, cfg, a, b, &mut rng, "gen_c23", Some(mode))
}

fn block_dim(cfg: &GeneratorConfig, what: &str) -> Result<usize> {
    cfg.validate(&[1, 2], what)?;
    match cfg.dims[0] {
        0 => Err(Error::InvalidConfig(format!("{what}: n must be at least 1"))),
        n => Ok(n),
    }
}

fn block_lambda_ok(theorem: &str, lambda: Complex64) -> Result<()> {
    if lambda.norm() <= ZERO_LAMBDA_TOL {
        return Err(Error::UnsupportedLambda {
            theorem: theorem.into(),
            lambda,
            reason: "the generator's normal form needs lambda != 0".into(),
        });
    }
    if is_minus_one(lambda) {
        return Err(Error::LambdaIsMinusOne {
            theorem: theorem.into(),
        });
    }
    Ok(())
}

fn unconjugated_block(
    theorem: Theorem,
    cfg: &GeneratorConfig,
    blocks: [ComplexMatrix; 4],
    generator: &str,
) -> Result<GeneratedBlock> {
    let [a, b, c, d] = blocks;
    let scenario = BlockScenario::new(theorem, cfg.lambda, a, b, c, d)?;
    Ok(Generated {
        canonical: scenario.clone(),
        scenario,
        similarity: None,
        provenance: provenance(generator, cfg, None),
    })
}

/// `D, C` invertible, `A = λ C D C^-1`, `B = λ D² C^-1`.
pub fn gen_t31(cfg: &GeneratorConfig) -> Result<GeneratedBlock> {
    let n = block_dim(cfg, "gen_t31")?;
    block_lambda_ok("T3.1", cfg.lambda)?;
    let mut rng = rng_from_seed(cfg.seed);
    let d = random_invertible_with(n, cfg.cond_bound, &mut rng);
    let c = random_invertible_with(n, cfg.cond_bound, &mut rng);
    let c_inv = invert(&c, &Tolerance::default())?;
    let a = (&(&c * &d) * &c_inv).scale(cfg.lambda);
    let b = (&(&d * &d) * &c_inv).scale(cfg.lambda);
    unconjugated_block(Theorem::T3_1, cfg, [a, b, c, d], "gen_t31")
}

/// `A, C` invertible, `B = λA`, `D = λC`.
pub fn gen_t33(cfg: &GeneratorConfig) -> Result<GeneratedBlock> {
    let n = block_dim(cfg, "gen_t33")?;
    block_lambda_ok("T3.3", cfg.lambda)?;
    let mut rng = rng_from_seed(cfg.seed);
    let a = random_invertible_with(n, cfg.cond_bound, &mut rng);
    let c = random_invertible_with(n, cfg.cond_bound, &mut rng);
    let b = a.scale(cfg.lambda);
    let d = c.scale(cfg.lambda);
    unconjugated_block(Theorem::T3_3, cfg, [a, b, c, d], "gen_t33")
}

/// Dims `[n, r]`: `A = diag(I_r, 0)`, `B = C = I`, `D = [[I_r, 0], [D3, 0]]`,
/// every block conjugated by one similarity `S`. Lambda must be 1.
pub fn gen_t35(cfg: &GeneratorConfig) -> Result<GeneratedBlock> {
    cfg.validate(&[2], "gen_t35")?;
    let (n, r) = (cfg.dims[0], cfg.dims[1]);
    if n == 0 || r > n {
        return Err(Error::InvalidConfig(format!(
            "gen_t35: need 0 <= r <= n, n >= 1; got n = {n}, r = {r}"
        )));
    }
    if (cfg.lambda - ONE).norm() > ZERO_LAMBDA_TOL {
        return Err(Error::UnsupportedLambda {
            theorem: "T3.5".into(),
            lambda: cfg.lambda,
            reason: "the canonical form with D idempotent forces lambda in {0, 1}; only lambda = 1 is generated".into(),
        });
    }
    let mut rng = rng_from_seed(cfg.seed);
    let a = ComplexMatrix::from_real_diag(&(0..n).map(|i| if i < r { 1.0 } else { 0.0 }).collect::<Vec<_>>());
    let d3 = general_or_empty(n - r, r, &mut rng);
    let d = place(a.clone(), r, 0, d3.as_ref());
    let i = ComplexMatrix::identity(n);
    let canonical = BlockScenario::new(Theorem::T3_5, cfg.lambda, a, i.clone(), i, d)?;
    let sim = Similarity::draw(n, cfg.cond_bound, &mut rng);
    let scenario = BlockScenario::new(
        Theorem::T3_5,
        cfg.lambda,
        sim.apply(&canonical.a),
        sim.apply(&canonical.b),
        sim.apply(&canonical.c),
        sim.apply(&canonical.d),
    )?;
    Ok(Generated {
        scenario,
        canonical,
        similarity: Some(sim.s),
        provenance: provenance("gen_t35", cfg, None),
    })
}

fn additive_dual(g: GeneratedAdditive, generator: &str) -> GeneratedAdditive {
    g.map(|s| s.dual().expect("T2.1 and T2.4 have duals"), generator)
}

fn block_dual(g: GeneratedBlock, generator: &str) -> GeneratedBlock {
    g.map(|s| s.dual(), generator)
}

/// Instance of any statement. Corollaries come from the parent's generator
/// followed by the dual map. `mode` applies to C2.3 only (default orthogonal).
pub fn generate_additive(theorem: Theorem, cfg: &GeneratorConfig, mode: Option<C23Mode>) -> Result<GeneratedAdditive> {
    match theorem {
        Theorem::T2_1 => gen_t21(cfg),
        Theorem::C2_2 => Ok(additive_dual(gen_t21(cfg)?, "gen_t21+dual")),
        Theorem::C2_3 => gen_c23(cfg, mode.unwrap_or(C23Mode::Orthogonal)),
        Theorem::T2_4 => gen_t24(cfg),
        Theorem::C2_5 => Ok(additive_dual(gen_t24(cfg)?, "gen_t24+dual")),
        other => Err(Error::UnknownTheorem(format!("{other} is not an additive statement"))),
    }
}

pub fn generate_block(theorem: Theorem, cfg: &GeneratorConfig) -> Result<GeneratedBlock> {
    match theorem {
        Theorem::T3_1 => gen_t31(cfg),
        Theorem::C3_2 => Ok(block_dual(gen_t31(cfg)?, "gen_t31+dual")),
        Theorem::T3_3 => gen_t33(cfg),
        Theorem::C3_4 => Ok(block_dual(gen_t33(cfg)?, "gen_t33+dual")),
        Theorem::T3_5 => gen_t35(cfg),
        Theorem::C3_6 => Ok(block_dual(gen_t35(cfg)?, "gen_t35+dual")),
        other => Err(Error::UnknownTheorem(format!("{other} is not a block statement"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::additive::{hypothesis_residuals, sum_ginv};
    use crate::blockmat::{check, msharp};
    use crate::ginv::is_group_invertible;
    use crate::linalg::condition_number;

    fn tol() -> Tolerance {
        Tolerance::default()
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn worst(r: &[crate::theorem::NamedResidual]) -> f64 {
        r.iter().map(|x| x.value).fold(0.0, f64::max)
    }

    #[test]
    fn frame_invariants() {
        let f = PeirceFrame::coordinate(&[1, 2, 0, 3]).unwrap();
        assert_eq!(f.n(), 6);
        assert_eq!(f.invariant_defect(), 0.0);
        let s = random_similarity(6, 10.0, 3);
        let s_inv = invert(&s, &tol()).unwrap();
        assert!(f.conjugate(&s, &s_inv).invariant_defect() < 1e-12);
        assert!(PeirceFrame::coordinate(&[0, 0]).is_err());
    }

    #[test]
    fn t21_canonical_peirce_pattern() {
        let g = gen_t21(&GeneratorConfig::new(vec![1, 1, 1, 1], c(2.0, 0.0), 5)).unwrap();
        let f = PeirceFrame::coordinate(&[1, 1, 1, 1]).unwrap();
        let a = &g.canonical.a;
        let b = &g.canonical.b;
        for (i, j) in [(0, 2), (0, 3), (1, 0), (1, 2), (2, 0), (3, 3)] {
            assert_eq!(f.peirce_component(a, i, j).max_abs(), 0.0);
        }
        for (i, j) in [(0, 1), (1, 1), (2, 0), (3, 3)] {
            assert_eq!(f.peirce_component(b, i, j).max_abs(), 0.0);
        }
        assert_eq!(a.get(0, 0), b.get(0, 0) * 2.0);
    }

    #[test]
    fn t21_instances_satisfy_hypotheses() {
        for (seed, lambda) in [
            (1, c(2.0, 0.0)),
            (2, c(-1.0, 0.0)),
            (3, c(1.0, 1.0)),
            (4, c(-0.5, 0.0)),
            (5, c(1.0, 0.0)),
        ] {
            let g = gen_t21(&GeneratorConfig::new(vec![2, 1, 3, 1], lambda, seed)).unwrap();
            for s in [&g.scenario, &g.canonical] {
                assert!(worst(&hypothesis_residuals(s, &tol()).unwrap()) <= 1e-10);
            }
            let out = sum_ginv(&g.scenario, &tol()).unwrap();
            let exact_as_stated = is_minus_one(lambda) || (lambda - ONE).norm() < 1e-12;
            if exact_as_stated {
                assert!(out.oracle_distance.unwrap() < 1e-8, "lambda {lambda}");
                assert!(out.axiom_report.pass);
            } else {
                // Stated generic formula misses a term when e1 a e2 != 0.
                assert!(out.oracle_distance.unwrap() > 1e-3, "lambda {lambda}");
                assert!(out.repaired_oracle_distance.unwrap() < 1e-8, "lambda {lambda}");
            }
        }
    }

    #[test]
    fn t21_stated_formula_exact_when_a2_vanishes() {
        // k2 = 0 removes the a2 block; the stated formula is then exact for every lambda.
        for lambda in [c(-2.0, 0.0), c(0.5, 0.0), c(3.0, 0.0), c(1.0, 1.0)] {
            let g = gen_t21(&GeneratorConfig::new(vec![2, 0, 2, 1], lambda, 6)).unwrap();
            let out = sum_ginv(&g.scenario, &tol()).unwrap();
            assert!(out.oracle_distance.unwrap() < 1e-8, "lambda {lambda}");
        }
    }

    #[test]
    fn t21_degenerate_frame_is_scalar_multiple() {
        let lambda = c(3.0, 0.0);
        let g = gen_t21(&GeneratorConfig::new(vec![3, 0, 0, 0], lambda, 9)).unwrap();
        assert!(g.scenario.a.max_abs_diff(&g.scenario.b.scale(lambda)) < 1e-12);
        assert!(matches!(
            gen_t21(&GeneratorConfig::new(vec![1, 1, 1, 1], c(0.0, 0.0), 1)),
            Err(Error::UnsupportedLambda { .. })
        ));
    }

    #[test]
    fn t24_instances() {
        for lambda in [c(-2.0, 0.0), c(0.0, 0.0), c(0.5, 0.0), c(1.0, 1.0)] {
            let g = gen_t24(&GeneratorConfig::new(vec![2, 3], lambda, 17)).unwrap();
            assert!(worst(&hypothesis_residuals(&g.scenario, &tol()).unwrap()) <= 1e-10);
            assert!(is_group_invertible(&g.scenario.a, &tol()).unwrap().invertible);
            let out = sum_ginv(&g.scenario, &tol()).unwrap();
            assert!(out.oracle_distance.unwrap() < 1e-8);
        }
        let g = gen_t24(&GeneratorConfig::new(vec![2, 0], c(3.0, 0.0), 1)).unwrap();
        assert!(g.scenario.a.max_abs_diff(&g.scenario.b.scale(c(3.0, 0.0))) < 1e-12);
        assert!(matches!(
            gen_t24(&GeneratorConfig::new(vec![1, 1], c(-1.0, 0.0), 1)),
            Err(Error::LambdaIsMinusOne { .. })
        ));
    }

    #[test]
    fn c23_modes() {
        let g = gen_c23(
            &GeneratorConfig::new(vec![1, 1, 1], c(-1.0, 0.0), 2),
            C23Mode::Orthogonal,
        )
        .unwrap();
        assert!(worst(&hypothesis_residuals(&g.scenario, &tol()).unwrap()) <= 1e-12);
        let g = gen_c23(
            &GeneratorConfig::new(vec![1, 2, 1, 1], c(1.0, 0.0), 2),
            C23Mode::Commuting,
        )
        .unwrap();
        let out = sum_ginv(&g.scenario, &tol()).unwrap();
        assert!(out.axiom_report.pass);
        assert!(matches!(
            gen_c23(
                &GeneratorConfig::new(vec![1, 1, 1, 1], c(2.0, 0.0), 2),
                C23Mode::Commuting
            ),
            Err(Error::UnsupportedMode { .. })
        ));
    }

    #[test]
    fn c23_overlap_gives_half() {
        // a = b: (a + b)# = (2a)# = a / 2.
        let g = gen_c23(
            &GeneratorConfig::new(vec![2, 0, 0, 1], c(1.0, 0.0), 4),
            C23Mode::Commuting,
        )
        .unwrap();
        assert!(g.scenario.a.max_abs_diff(&g.scenario.b) < 1e-15);
        let out = sum_ginv(&g.scenario, &tol()).unwrap();
        assert!(out.candidate.max_abs_diff(&g.scenario.a.scale_real(0.5)) < 1e-10);
    }

    #[test]
    fn block_generators_pass_checks() {
        for t in [Theorem::T3_1, Theorem::C3_2, Theorem::T3_3, Theorem::C3_4] {
            for lambda in [c(0.5, 0.0), c(3.0, 0.0), c(1.0, 1.0)] {
                let g = generate_block(t, &GeneratorConfig::new(vec![3], lambda, 8)).unwrap();
                let chk = check(&g.scenario, &tol()).unwrap();
                assert!(chk.worst() <= 1e-10, "{t} {lambda}: {}", chk.worst());
                let out = msharp(&g.scenario, &tol()).unwrap();
                assert_eq!(out.rank, out.rank_sq);
                assert!(out.axioms.pass);
                let cross = out.cross_checks[0].value;
                match t {
                    Theorem::T3_1 | Theorem::C3_2 => assert!(cross <= out.cross_check_tol, "{t}: {cross:e}"),
                    // P P# Q = A# C [B D] on the top row, which the hypotheses do not
                    // force to equal lambda [A C] unless A and C commute.
                    _ => assert!(cross > 1e-3, "{t}: {cross:e}"),
                }
            }
        }
    }

    #[test]
    fn t35_generator_all_ranks() {
        for r in 0..=3 {
            for t in [Theorem::T3_5, Theorem::C3_6] {
                let g = generate_block(t, &GeneratorConfig::new(vec![3, r], ONE, 21)).unwrap();
                for s in [&g.scenario, &g.canonical] {
                    let chk = check(s, &tol()).unwrap();
                    assert!(chk.pass && chk.worst() <= 1e-10, "{t} r={r}: {:?}", chk.residuals);
                }
                let out = msharp(&g.scenario, &tol()).unwrap();
                assert_eq!(out.rank, out.rank_sq);
                assert!(
                    out.cross_checks.iter().all(|x| x.value <= 1e-12),
                    "{:?}",
                    out.cross_checks
                );
                assert!(out.k_diagnostic.unwrap().consistent());
            }
        }
        let g = gen_t35(&GeneratorConfig::new(vec![2, 0], ONE, 1)).unwrap();
        assert_eq!(g.scenario.a.max_abs(), 0.0);
        assert!(gen_t35(&GeneratorConfig::new(vec![2, 1], c(2.0, 0.0), 1)).is_err());
    }

    #[test]
    fn perturbation_probes_trip_checkers() {
        let lambda = c(2.0, 0.0);
        for t in [Theorem::T3_1, Theorem::C3_2, Theorem::T3_3, Theorem::C3_4] {
            let g = generate_block(t, &GeneratorConfig::new(vec![3], lambda, 31)).unwrap();
            let s = &g.scenario;
            for eps in [1e-3, 1e-6] {
                let mut rng = rng_from_seed(99);
                let noise = |x: &ComplexMatrix, rng: &mut MatrixRng| {
                    x + &random_general_with(3, 3, rng).scale_real(eps * x.frobenius_norm() / 3.0)
                };
                let mut p = s.clone();
                // Perturb one block that appears in a constrained product.
                match t {
                    Theorem::T3_1 | Theorem::C3_2 => p.b = noise(&p.b, &mut rng),
                    _ => p.c = noise(&p.c, &mut rng),
                }
                let chk = check(&p, &tol()).unwrap();
                assert!(chk.worst() > tol().residual, "{t} eps={eps}: {}", chk.worst());
                assert!(matches!(msharp(&p, &tol()), Err(Error::HypothesisViolated { .. })));
            }
        }
        let g = generate_block(Theorem::T3_5, &GeneratorConfig::new(vec![3, 2], ONE, 31)).unwrap();
        for eps in [1e-3, 1e-6] {
            let mut p = g.scenario.clone();
            p.d = &p.d + &random_general_with(3, 3, &mut rng_from_seed(5)).scale_real(eps);
            assert!(check(&p, &tol()).unwrap().worst() > tol().residual);
        }
    }

    #[test]
    fn generators_are_deterministic() {
        let cfg = GeneratorConfig::new(vec![2, 1, 1, 2], c(1.0, 1.0), 77);
        let g1 = gen_t21(&cfg).unwrap();
        let g2 = gen_t21(&cfg).unwrap();
        assert_eq!(g1.scenario, g2.scenario);
        let g3 = gen_t21(&GeneratorConfig { seed: 78, ..cfg }).unwrap();
        assert_ne!(g1.scenario, g3.scenario);
    }

    #[test]
    fn similarity_condition_and_scalar_case() {
        let s = random_similarity(6, 50.0, 4);
        assert!(condition_number(&s).unwrap() <= 50.0);
        let one = random_similarity(1, 10.0, 4);
        assert!(one.get(0, 0).norm() > 0.0);
    }

    #[test]
    fn duals_of_generated_instances_satisfy_corollaries() {
        let g = generate_additive(Theorem::C2_5, &GeneratorConfig::new(vec![2, 2], c(3.0, 0.0), 3), None).unwrap();
        assert_eq!(g.scenario.theorem, Theorem::C2_5);
        assert_eq!(g.provenance.generator, "gen_t24+dual");
        let out = sum_ginv(&g.scenario, &tol()).unwrap();
        assert!(out.oracle_distance.unwrap() < 1e-8);
    }
}
