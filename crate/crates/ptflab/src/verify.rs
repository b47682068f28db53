//! The acceptance suite: one named check per shipped guarantee, each
//! returning a [`CheckReport`] whose metrics expose every measured quantity
//! next to the bound it was held to.
//!
//! Checks are deterministic functions of [`VerifyParams`]; wall-clock only
//! enters as a within-budget flag. Two runs with equal params therefore
//! serialize to identical bytes, which is itself the last check (`c14`).

use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use rand::RngExt;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::analysis::{agreement, decode_ug, lp_consistent, max_agreement_exact, LpOutcome};
use crate::gadgets::{
    default_beta, estimate_pass_probability, hoeffding_ci99, matching_dictator, t2_dictator,
    GadgetConfig, LabeledExample, Variant,
};
use crate::gauss::{
    anticoncentration_check, dkw_epsilon, normal_cdf, sample_coupled, sample_gaussian,
    sample_open_uniform, DiscretizedGaussianSpec, RngSeed,
};
use crate::poly::{binomial, monomials_up_to, sign, MonomialKey, Polynomial};
use crate::reduction::{
    build_folding, check_folded, generate_planted_lc, generate_planted_ug, intended_lc_ptf,
    intended_ug_ptf, reduce_lc, reduce_ug, take_examples, LabelCoverInstance, ReductionConfig,
};
use crate::{Error, Result};

/// Knobs of a verify run. The defaults are the acceptance-scale settings;
/// CLI flags override them (mainly to shrink sample budgets while exploring).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerifyParams {
    /// Gadget block size.
    pub n: usize,
    /// Restrict the degree-swept checks to one degree (default: sweep {2, 3}).
    pub d: Option<usize>,
    /// Master Monte Carlo budget; individual checks derive theirs from it.
    pub samples: usize,
    pub seed: u64,
}

impl Default for VerifyParams {
    fn default() -> Self {
        VerifyParams { n: 16, d: None, samples: 100_000, seed: 7 }
    }
}

impl VerifyParams {
    fn validate(&self) -> Result<()> {
        if self.n < 3 {
            return Err(Error::invalid(format!("verify needs n >= 3, got {}", self.n)));
        }
        if self.samples < 100 {
            return Err(Error::invalid(format!(
                "verify needs samples >= 100, got {}",
                self.samples
            )));
        }
        if let Some(d) = self.d {
            if d == 0 || d > 4 {
                return Err(Error::invalid(format!("verify sweeps degrees 1..=4, got {d}")));
            }
        }
        Ok(())
    }

    fn degrees(&self) -> Vec<usize> {
        match self.d {
            Some(d) => vec![d],
            None => vec![2, 3],
        }
    }

    fn seed_for(&self, check: u64) -> RngSeed {
        RngSeed::new(self.seed).substream(check)
    }
}

/// Outcome of one named check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub id: String,
    pub name: String,
    pub pass: bool,
    /// Every measured quantity and the bound it was compared against.
    pub metrics: BTreeMap<String, f64>,
    /// "ok", or the list of violated bounds with measured values.
    pub detail: String,
}

/// A whole suite run: the params echoed back plus one report per check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: String,
    pub params: VerifyParams,
    pub pass: bool,
    pub checks: Vec<CheckReport>,
}

struct Check {
    id: &'static str,
    name: &'static str,
    pass: bool,
    metrics: BTreeMap<String, f64>,
    violations: Vec<String>,
}

impl Check {
    fn new(id: &'static str, name: &'static str) -> Check {
        Check { id, name, pass: true, metrics: BTreeMap::new(), violations: Vec::new() }
    }

    fn metric(&mut self, key: impl Into<String>, value: f64) {
        self.metrics.insert(key.into(), value);
    }

    fn require(&mut self, what: &str, ok: bool) {
        if !ok {
            self.pass = false;
            self.violations.push(what.to_string());
        }
    }

    /// Records the stated runtime budget as a pass/fail flag; the elapsed
    /// seconds themselves stay out of the report so reruns compare bytewise.
    fn budget(&mut self, started: Instant, seconds: f64) {
        let within = started.elapsed().as_secs_f64() <= seconds;
        self.metric("budget_seconds", seconds);
        self.metric("within_budget", if within { 1.0 } else { 0.0 });
        self.require("runtime within budget", within);
    }

    fn report(self) -> CheckReport {
        let detail = if self.violations.is_empty() {
            "ok".to_string()
        } else {
            format!("violated: {}", self.violations.join("; "))
        };
        CheckReport {
            id: self.id.to_string(),
            name: self.name.to_string(),
            pass: self.pass,
            metrics: self.metrics,
            detail,
        }
    }
}

const CORE_IDS: [&str; 13] = [
    "c01", "c02", "c03", "c04", "c05", "c06", "c07", "c08", "c09", "c10", "c11", "c12", "c13",
];

/// Suite names accepted by [`run_suite`].
pub fn suites() -> &'static [&'static str] {
    &["all", "completeness", "soundness", "reduction", "gauss", "solvers", "determinism"]
}

fn suite_ids(suite: &str) -> Result<Vec<&'static str>> {
    Ok(match suite {
        "all" => {
            let mut ids: Vec<&'static str> = CORE_IDS.to_vec();
            ids.push("c14");
            ids
        }
        "completeness" => vec!["c01", "c02", "c03"],
        "soundness" => vec!["c04", "c05"],
        "reduction" => vec!["c06", "c07", "c08"],
        "gauss" => vec!["c09", "c10", "c11", "c12"],
        "solvers" => vec!["c13"],
        "determinism" => vec!["c14"],
        other => {
            return Err(Error::invalid(format!(
                "unknown suite '{other}' (expected one of: {})",
                suites().join(", ")
            )))
        }
    })
}

/// Runs one check by id ("c01".."c14").
pub fn run_check(id: &str, params: &VerifyParams) -> Result<CheckReport> {
    params.validate()?;
    match id {
        "c01" => c01_td_completeness(params),
        "c02" => c02_t2_completeness(params),
        "c03" => c03_constant_calibration(params),
        "c04" => c04_soundness_spot_checks(params),
        "c05" => c05_dictator_decoding(params),
        "c06" => c06_ug_end_to_end(params),
        "c07" => c07_lc_reduction_folding(params),
        "c08" => c08_folding_algebra(params),
        "c09" => c09_discretization_coupling(params),
        "c10" => c10_berry_esseen(params),
        "c11" => c11_carbery_wright(params),
        "c12" => c12_btvar_bound(params),
        "c13" => c13_solvers(params),
        "c14" => c14_determinism(params, None),
        other => Err(Error::invalid(format!("unknown check id '{other}'"))),
    }
}

fn run_core(params: &VerifyParams) -> Result<Vec<CheckReport>> {
    CORE_IDS.iter().map(|id| run_check(id, params)).collect()
}

/// Runs a named suite and aggregates the verdict.
pub fn run_suite(suite: &str, params: &VerifyParams) -> Result<SuiteReport> {
    params.validate()?;
    let ids = suite_ids(suite)?;
    let full_core = ids.len() == CORE_IDS.len() + 1;
    let mut checks: Vec<CheckReport> = Vec::new();
    for id in ids.iter().filter(|id| **id != "c14") {
        checks.push(run_check(id, params)?);
    }
    if ids.contains(&"c14") {
        let baseline = if full_core { Some(checks.as_slice()) } else { None };
        let c14 = c14_determinism(params, baseline)?;
        checks.push(c14);
    }
    let pass = checks.iter().all(|c| c.pass);
    Ok(SuiteReport { suite: suite.to_string(), params: *params, pass, checks })
}

// --- the checks -------------------------------------------------------------------

fn c01_td_completeness(p: &VerifyParams) -> Result<CheckReport> {
    let started = Instant::now();
    let mut check = Check::new("c01", "td_completeness");
    for d in p.degrees() {
        let cfg = GadgetConfig::new(Variant::Td, p.n, d, p.seed_for(1).substream(d as u64))?;
        let f = matching_dictator(p.n, d, 1)?;
        let est = estimate_pass_probability(&f, &cfg, p.samples)?;
        let bound = 1.0 - cfg.beta - 0.01;
        check.metric(format!("d{d}_estimate"), est.estimate);
        check.metric(format!("d{d}_bound"), bound);
        check.require(
            &format!("Td dictator estimate at d={d} is at least 1 - beta - 0.01"),
            est.estimate >= bound,
        );
    }
    check.budget(started, 10.0);
    Ok(check.report())
}

fn c02_t2_completeness(p: &VerifyParams) -> Result<CheckReport> {
    let started = Instant::now();
    let mut check = Check::new("c02", "t2_completeness");
    let cfg = GadgetConfig::new(Variant::T2, p.n, 2, p.seed_for(2))?;
    let f = t2_dictator(p.n, 1)?;
    let est = estimate_pass_probability(&f, &cfg, p.samples)?;
    let bound = 1.0 - cfg.beta - 0.01;
    check.metric("estimate", est.estimate);
    check.metric("bound", bound);
    check.require("T2 dictator estimate is at least 1 - beta - 0.01", est.estimate >= bound);
    check.budget(started, 10.0);
    Ok(check.report())
}

fn c03_constant_calibration(p: &VerifyParams) -> Result<CheckReport> {
    let mut check = Check::new("c03", "constant_calibration");
    for (tag, variant) in [(0u64, Variant::T1), (1, Variant::Td), (2, Variant::T2)] {
        let cfg = GadgetConfig::new(variant, p.n, 2, p.seed_for(3).substream(tag))?;
        let f = Polynomial::constant(cfg.example_dimension(), 2.5)?;
        let est = estimate_pass_probability(&f, &cfg, p.samples)?;
        check.metric(format!("{variant}_estimate"), est.estimate);
        check.require(
            &format!("constant hypothesis under {variant} sits within 0.5 +/- 0.01"),
            (est.estimate - 0.5).abs() <= 0.01,
        );
    }
    Ok(check.report())
}

/// `(x_u^{(0)} - x_v^{(0)})·Σ_j (x_u^{(j)})²` expanded over the 2n ambient
/// coordinates: the motivating adversary that degree-1 folding misses.
fn cross_term_adversary(n: usize) -> Result<Polynomial> {
    let mut terms = Vec::with_capacity(2 * n);
    for j in 0..n as u32 {
        terms.push((MonomialKey::new(vec![0, j, j]), 1.0));
        terms.push((MonomialKey::new(vec![n as u32, j, j]), -1.0));
    }
    Polynomial::new(2 * n, 3, terms)
}

fn random_dense_poly(dim: usize, degree: usize, rng: &mut ChaCha8Rng) -> Result<Polynomial> {
    let terms: Vec<(MonomialKey, f64)> = monomials_up_to(dim, degree)
        .into_iter()
        .map(|k| (k, sample_gaussian(rng)))
        .collect();
    Polynomial::new(dim, degree, terms)
}

fn c04_soundness_spot_checks(p: &VerifyParams) -> Result<CheckReport> {
    let mut check = Check::new("c04", "soundness_spot_checks");

    let cfg = GadgetConfig::new(Variant::Td, p.n, 3, p.seed_for(4).substream(0))?;
    let adversary = cross_term_adversary(p.n)?;
    let est = estimate_pass_probability(&adversary, &cfg, p.samples)?;
    let bound = 0.5 + cfg.beta + 0.01;
    check.metric("adversary_estimate", est.estimate);
    check.metric("adversary_bound", bound);
    check.require(
        "cross-term adversary estimate is at most 0.5 + beta + 0.01",
        est.estimate <= bound,
    );

    let d = p.d.unwrap_or(3);
    let cfg_b = GadgetConfig::new(Variant::Td, p.n, d, p.seed_for(4).substream(1))?;
    let samples_b = (p.samples / 25).max(1_000);
    let mut rng = p.seed_for(4).substream(2).rng();
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let f = random_dense_poly(2 * p.n, d, &mut rng)?;
        let est = estimate_pass_probability(&f, &cfg_b, samples_b)?;
        worst = worst.max(est.estimate);
    }
    check.metric("random_worst_estimate", worst);
    check.metric("random_bound", 0.55);
    check.metric("random_samples_each", samples_b as f64);
    check.require(
        "all 50 random dense polynomials pass with probability at most 0.55",
        worst <= 0.55,
    );
    Ok(check.report())
}

fn c05_dictator_decoding(p: &VerifyParams) -> Result<CheckReport> {
    let mut check = Check::new("c05", "dictator_decoding");
    let k = 8usize;
    let beta_k = 1.0 / (k as f64).log2();
    let mut exact = true;
    for d in p.degrees() {
        for i in 0..k {
            let f = matching_dictator(k, d, i)?;
            let dec = decode_ug(&f, beta_k)?;
            let want: BTreeSet<u32> = [i as u32].into();
            exact &= dec.u_sets == [want.clone()] && dec.v_sets == [want];
            exact &= dec.within_caps() && !dec.flagged;
        }
    }
    check.metric("alphabet", k as f64);
    check.require("decode_ug returns exactly ({i}, {i}) for every matching dictator", exact);

    let mut caps = true;
    for d in p.degrees() {
        let dec = decode_ug(&matching_dictator(p.n, d, 1)?, default_beta(p.n))?;
        caps &= dec.within_caps() && !dec.flagged;
    }
    check.metric("cap", 1.0 / (default_beta(p.n) * default_beta(p.n)));
    check.require("set-size caps hold for the completeness-scale dictators", caps);
    Ok(check.report())
}

fn c06_ug_end_to_end(p: &VerifyParams) -> Result<CheckReport> {
    let started = Instant::now();
    let mut check = Check::new("c06", "ug_end_to_end");
    let d = p.d.unwrap_or(2);
    let samples = (p.samples / 2).max(1_000);
    for (tag, eta) in [(0u64, 0.0f64), (25, 0.25)] {
        let (inst, plant) = generate_planted_ug(4, 4, 2, 4, eta, p.seed_for(6).substream(tag))?;
        let cfg = ReductionConfig::for_ug(&inst, d, p.seed_for(6).substream(100 + tag))?;
        let examples = take_examples(reduce_ug(&inst, &cfg), samples)?;
        let f = intended_ug_ptf(&inst, &plant, d)?;
        let rep = agreement(&f, &examples)?;
        let bound = 1.0 - eta - cfg.beta - 0.02;
        check.metric(format!("eta{tag}_agreement"), rep.agreement);
        check.metric(format!("eta{tag}_bound"), bound);
        check.require(
            &format!("intended PTF agreement at eta={eta} is at least 1 - eta - beta - 0.02"),
            rep.agreement >= bound,
        );
    }
    check.budget(started, 30.0);
    Ok(check.report())
}

fn c07_lc_reduction_folding(p: &VerifyParams) -> Result<CheckReport> {
    let mut check = Check::new("c07", "lc_reduction_folding");
    let (inst, plant) = generate_planted_lc(4, 4, 2, 2, 4, 0.0, p.seed_for(7).substream(0))?;
    let f = intended_lc_ptf(&inst, &plant)?;
    check.require("intended folded PTF passes check_folded", check_folded(&f, &inst, 1e-9)?);

    let basis = build_folding(&inst);
    let cfg = ReductionConfig::for_lc(&inst, p.seed_for(7).substream(1))?;
    let samples = (p.samples / 5).max(1_000);
    let examples = take_examples(reduce_lc(&inst, &basis, &cfg)?, samples)?;
    let rep = agreement(&f, &examples)?;
    let bound = 1.0 - 1.0 / (inst.m() as f64).log2() - 0.02;
    check.metric("agreement", rep.agreement);
    check.metric("bound", bound);
    check.require("folded PTF agreement is at least 1 - 1/log2(m) - 0.02", rep.agreement >= bound);

    let mut worst = 0.0f64;
    for ex in &examples {
        let norm = ex.y.iter().map(|v| v * v).sum::<f64>().sqrt();
        for b in basis.generators() {
            let dot: f64 = ex.y.iter().zip(b).map(|(a, b)| a * b).sum();
            worst = worst.max(dot.abs() / (1.0 + norm));
        }
    }
    check.metric("max_fold_residual", worst);
    check.require(
        "every emitted example is orthogonal to every b(e,i) within 1e-9 of its scale",
        worst <= 1e-9,
    );
    Ok(check.report())
}

/// Integer basis of the exact null space of the generator rows, computed by
/// Gauss-Jordan elimination over the rationals and cleared of denominators.
/// The generators have entries in {0, ±1}, so every intermediate is exact and
/// the returned f64 entries are small integers.
fn exact_nullspace(generators: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    use num::{BigInt, BigRational, One, ToPrimitive, Zero};
    let dim = generators.first().map(|g| g.len()).unwrap_or(0);
    let mut m: Vec<Vec<BigRational>> = generators
        .iter()
        .map(|g| {
            g.iter()
                .map(|&x| {
                    BigRational::from_float(x)
                        .ok_or_else(|| Error::NotFinite { what: format!("generator entry {x}") })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let mut pivots: Vec<usize> = Vec::new();
    let mut row = 0usize;
    for col in 0..dim {
        if row == m.len() {
            break;
        }
        if let Some(r) = (row..m.len()).find(|&r| !m[r][col].is_zero()) {
            m.swap(row, r);
            let inv = m[row][col].clone();
            for c in col..dim {
                m[row][c] = &m[row][c] / &inv;
            }
            for r2 in 0..m.len() {
                if r2 != row && !m[r2][col].is_zero() {
                    let factor = m[r2][col].clone();
                    for c in col..dim {
                        let sub = &m[row][c] * &factor;
                        m[r2][c] = &m[r2][c] - sub;
                    }
                }
            }
            pivots.push(col);
            row += 1;
        }
    }
    let mut basis = Vec::new();
    for free in (0..dim).filter(|c| !pivots.contains(c)) {
        let mut v = vec![BigRational::zero(); dim];
        v[free] = BigRational::one();
        for (ri, &pc) in pivots.iter().enumerate() {
            v[pc] = -m[ri][free].clone();
        }
        let lcm = v
            .iter()
            .fold(BigInt::one(), |acc, q| num::integer::lcm(acc, q.denom().clone()));
        let ints = v
            .iter()
            .map(|q| {
                (q.numer() * (&lcm / q.denom())).to_f64().ok_or_else(|| {
                    Error::NotFinite { what: "nullspace entry left f64 range".to_string() }
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        basis.push(ints);
    }
    Ok(basis)
}

fn integer_combo(basis: &[Vec<f64>], dim: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    loop {
        let mut v = vec![0.0f64; dim];
        for b in basis {
            let c = (rng.random_range(0..7u64) as i64 - 3) as f64;
            for (vi, bi) in v.iter_mut().zip(b) {
                *vi += c * bi;
            }
        }
        if v.iter().any(|x| *x != 0.0) {
            return v;
        }
    }
}

/// `(w1·y)(w2·y) + w3·y + c` expanded into monomials; exactly invariant
/// along the folding span because each `w` lies in its integer null space.
fn invariant_quadratic(
    null: &[Vec<f64>],
    dim: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Polynomial> {
    let w1 = integer_combo(null, dim, rng);
    let w2 = integer_combo(null, dim, rng);
    let w3 = integer_combo(null, dim, rng);
    let c0 = (rng.random_range(0..9u64) as i64 - 4) as f64;
    let mut terms: Vec<(MonomialKey, f64)> = Vec::new();
    for i in 0..dim {
        for j in i..dim {
            let c = if i == j { w1[i] * w2[i] } else { w1[i] * w2[j] + w1[j] * w2[i] };
            if c != 0.0 {
                terms.push((MonomialKey::new(vec![i as u32, j as u32]), c));
            }
        }
    }
    for (i, &wi) in w3.iter().enumerate() {
        if wi != 0.0 {
            terms.push((MonomialKey::new(vec![i as u32]), wi));
        }
    }
    terms.push((MonomialKey::empty(), c0));
    Polynomial::new(dim, 2, terms)
}

/// Worst |c_u - Σ c_v| over every edge and label of the linear coefficients.
fn identity_residual(poly: &Polynomial, inst: &LabelCoverInstance) -> f64 {
    let mut worst = 0.0f64;
    for (e, &(u, v)) in inst.edges().iter().enumerate() {
        let map = inst.map(e);
        for i in 0..inst.k() {
            let lhs = poly.coeff(&MonomialKey::new(vec![inst.coord_u(u as usize, i) as u32]));
            let rhs: f64 = map
                .iter()
                .enumerate()
                .filter(|(_, &img)| img as usize == i)
                .map(|(j, _)| {
                    poly.coeff(&MonomialKey::new(vec![inst.coord_v(v as usize, j) as u32]))
                })
                .sum();
            worst = worst.max((lhs - rhs).abs());
        }
    }
    worst
}

fn c08_folding_algebra(p: &VerifyParams) -> Result<CheckReport> {
    let mut check = Check::new("c08", "folding_algebra");
    let (inst, _) = generate_planted_lc(4, 4, 2, 2, 4, 0.0, p.seed_for(8).substream(0))?;
    let basis = build_folding(&inst);
    let null = exact_nullspace(basis.generators())?;

    let mut annihilates = !null.is_empty();
    for w in &null {
        for g in basis.generators() {
            let dot: f64 = w.iter().zip(g).map(|(a, b)| a * b).sum();
            annihilates &= dot == 0.0;
        }
    }
    check.metric("nullspace_rank", null.len() as f64);
    check.require("exact integer nullspace annihilates every generator", annihilates);

    let dim = inst.example_dimension();
    let mut rng = p.seed_for(8).substream(1).rng();
    let mut max_residual = 0.0f64;
    let mut folded_ok = true;
    for _ in 0..100 {
        let poly = invariant_quadratic(&null, dim, &mut rng)?;
        max_residual = max_residual.max(identity_residual(&poly, &inst));
        folded_ok &= check_folded(&poly, &inst, 1e-9)?;
    }
    check.metric("max_identity_residual", max_residual);
    check.require(
        "linear-coefficient identity holds exactly on 100 shift-invariant polynomials",
        max_residual == 0.0,
    );
    check.require("check_folded accepts every shift-invariant polynomial", folded_ok);

    let mut rejected = true;
    for _ in 0..100 {
        let poly = invariant_quadratic(&null, dim, &mut rng)?;
        let u = rng.random_range(0..inst.nu() as u64) as usize;
        let i = rng.random_range(0..inst.k() as u64) as usize;
        let mut terms: Vec<(MonomialKey, f64)> = poly.terms().to_vec();
        terms.push((MonomialKey::new(vec![inst.coord_u(u, i) as u32]), 1.0));
        let bad = Polynomial::new(dim, 2, terms)?;
        rejected &= !check_folded(&bad, &inst, 1e-9)?;
    }
    check.require("check_folded rejects all 100 broken polynomials", rejected);
    Ok(check.report())
}

fn c09_discretization_coupling(p: &VerifyParams) -> Result<CheckReport> {
    let mut check = Check::new("c09", "discretization_coupling");
    let n_bits = 4096usize;
    let spec = DiscretizedGaussianSpec::new(n_bits)?;
    let dim = 6usize;
    let vectors = (p.samples / 5).max(1_000);
    let eps = 8.0 * (n_bits as f64).powf(-0.25);

    let mut rng = p.seed_for(9).substream(0).rng();
    let mut gs: Vec<Vec<f64>> = Vec::with_capacity(vectors);
    let mut hs: Vec<Vec<f64>> = Vec::with_capacity(vectors);
    let mut close = 0usize;
    for _ in 0..vectors {
        let mut g = vec![0.0; dim];
        let mut h = vec![0.0; dim];
        for i in 0..dim {
            let pair = sample_coupled(&mut rng, &spec);
            g[i] = pair.g;
            h[i] = pair.h_scaled;
            if (pair.g - pair.h_scaled).abs() <= eps {
                close += 1;
            }
        }
        gs.push(g);
        hs.push(h);
    }
    let closeness = close as f64 / (vectors * dim) as f64;
    check.metric("closeness_rate", closeness);
    check.metric("closeness_bound", 1.0 - eps);
    check.require(
        "coupled pairs land within 8·N^(-1/4) of each other often enough",
        closeness >= 1.0 - eps,
    );

    let mut rng2 = p.seed_for(9).substream(1).rng();
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let f = random_dense_poly(dim, 2, &mut rng2)?;
        let mut disagreements = 0usize;
        for (g, h) in gs.iter().zip(&hs) {
            if sign(f.evaluate(g)?)? != sign(f.evaluate(h)?)? {
                disagreements += 1;
            }
        }
        worst = worst.max(disagreements as f64 / vectors as f64);
    }
    check.metric("max_sign_disagreement", worst);
    check.metric("disagreement_bound", 0.02);
    check.require("all 20 polynomials disagree in sign on at most 2% of draws", worst <= 0.02);
    Ok(check.report())
}

fn c10_berry_esseen(p: &VerifyParams) -> Result<CheckReport> {
    let mut check = Check::new("c10", "berry_esseen");
    let grid = 10_000usize;
    for (tag, n_bits) in [(0u64, 64usize), (1, 256), (2, 1024)] {
        let spec = DiscretizedGaussianSpec::new(n_bits)?;
        let mut rng = p.seed_for(10).substream(tag).rng();
        let mut hs: Vec<f64> = (0..p.samples)
            .map(|_| spec.binomial_quantile(sample_open_uniform(&mut rng)))
            .collect();
        hs.sort_by(f64::total_cmp);
        let mut sup = 0.0f64;
        for t in 0..grid {
            let x = -6.0 + 12.0 * t as f64 / (grid - 1) as f64;
            let ecdf = hs.partition_point(|&h| h <= x) as f64 / hs.len() as f64;
            sup = sup.max((ecdf - normal_cdf(x)).abs());
        }
        let bound = 1.0 / (n_bits as f64).sqrt() + dkw_epsilon(p.samples, 0.01);
        check.metric(format!("n{n_bits}_sup_gap"), sup);
        check.metric(format!("n{n_bits}_bound"), bound);
        check.require(
            &format!("empirical CDF gap at N={n_bits} is at most 1/sqrt(N) + DKW"),
            sup <= bound,
        );
    }
    Ok(check.report())
}

fn c11_carbery_wright(p: &VerifyParams) -> Result<CheckReport> {
    let mut check = Check::new("c11", "carbery_wright");
    let mut rng = p.seed_for(11).substream(0).rng();
    let slack = hoeffding_ci99(p.samples);
    let mut max_excess = f64::NEG_INFINITY;
    for _ in 0..10 {
        let f = random_dense_poly(5, 3, &mut rng)?;
        for tau in [1e-3, 1e-2, 1e-1] {
            let (rate, bound) = anticoncentration_check(&f, tau, p.samples, &mut rng)?;
            max_excess = max_excess.max(rate - bound - slack);
        }
    }
    check.metric("max_excess", max_excess);
    check.metric("hoeffding_slack", slack);
    check.require(
        "every anticoncentration rate stays below 3·d·tau^(1/d) plus Hoeffding slack",
        max_excess <= 0.0,
    );
    Ok(check.report())
}

fn c12_btvar_bound(p: &VerifyParams) -> Result<CheckReport> {
    let mut check = Check::new("c12", "btvar_bound");
    let mut rng = p.seed_for(12).substream(0).rng();
    let mut min_slack = f64::INFINITY;
    let mut ok = true;
    for _ in 0..100 {
        let dim = 1 + (rng.random_range(0..6u64) as usize);
        let degree = 1 + (rng.random_range(0..3u64) as usize);
        let terms: Vec<(MonomialKey, f64)> = monomials_up_to(dim, degree)
            .into_iter()
            .map(|k| (k, 2.0 * rng.random::<f64>() - 1.0))
            .collect();
        let f = Polynomial::new(dim, degree, terms)?;
        let norm = f.gaussian_l2_norm();
        let d = f.degree() as f64;
        let scale = d.powf(-d) / binomial(dim + f.degree(), f.degree());
        for (_, c) in f.terms() {
            ok &= norm >= c.abs() * scale;
            min_slack = min_slack.min(norm - c.abs() * scale);
        }
    }
    check.metric("min_slack", min_slack);
    check.require(
        "gaussian_l2_norm dominates d^(-d)|c_T|/binom(l+d,d) for every coefficient",
        ok && min_slack >= 0.0,
    );
    Ok(check.report())
}

/// Literal substitution oracle: maps each monomial through `x_i -> g_i` taken
/// `d` times / `x_{n+i} -> g_i` once, then canonicalizes by sort-and-merge.
fn collapse_oracle(f: &Polynomial, d: usize) -> Vec<(Vec<u32>, f64)> {
    let n = (f.dim() / 2) as u32;
    let mut raw: Vec<(Vec<u32>, f64)> = f
        .terms()
        .iter()
        .map(|(key, coeff)| {
            let mut prod: Vec<u32> = Vec::new();
            for &v in key.vars() {
                if v < n {
                    prod.extend(std::iter::repeat(v).take(d));
                } else {
                    prod.push(v - n);
                }
            }
            prod.sort_unstable();
            (prod, *coeff)
        })
        .collect();
    raw.sort_by(|a, b| a.0.cmp(&b.0));
    let mut merged: Vec<(Vec<u32>, f64)> = Vec::new();
    for (k, c) in raw {
        match merged.last_mut() {
            Some((lk, lc)) if *lk == k => *lc += c,
            _ => merged.push((k, c)),
        }
    }
    merged.retain(|(_, c)| *c != 0.0);
    merged
}

fn canonical_terms(p: &Polynomial) -> Vec<(Vec<u32>, f64)> {
    p.terms().iter().map(|(k, c)| (k.vars().to_vec(), *c)).collect()
}

/// Points `x_i = g_i^d, x_{n+i} = g_i` must evaluate identically pre and
/// post collapse (up to float round-off in the powers).
fn collapse_evaluates_consistently(
    f: &Polynomial,
    collapsed: &Polynomial,
    d: usize,
    rng: &mut ChaCha8Rng,
) -> Result<bool> {
    let n = f.dim() / 2;
    for _ in 0..5 {
        let g: Vec<f64> = (0..n).map(|_| 0.5 * sample_gaussian(rng)).collect();
        let mut x = vec![0.0; 2 * n];
        for i in 0..n {
            x[i] = g[i].powi(d as i32);
            x[n + i] = g[i];
        }
        let a = f.evaluate(&x)?;
        let b = collapsed.evaluate(&g)?;
        if (a - b).abs() > 1e-9 * (1.0 + a.abs().max(b.abs())) {
            return Ok(false);
        }
    }
    Ok(true)
}

fn c13_solvers(p: &VerifyParams) -> Result<CheckReport> {
    let mut check = Check::new("c13", "solvers");

    let mut rng = p.seed_for(13).substream(0).rng();
    let mut separable_ok = true;
    for trial in 0..12usize {
        let dim = 1 + trial % 3;
        let deg = 1 + (trial / 3) % 3;
        let keys = monomials_up_to(dim, deg);
        let target: Vec<f64> = loop {
            let cand: Vec<f64> = keys
                .iter()
                .map(|_| (rng.random_range(0..9u64) as i64 - 4) as f64)
                .collect();
            if cand.iter().any(|c| *c != 0.0) {
                break cand;
            }
        };
        let wanted = 6 + trial % 5;
        let mut examples = Vec::with_capacity(wanted);
        while examples.len() < wanted {
            let y: Vec<f64> =
                (0..dim).map(|_| (rng.random_range(0..11u64) as i64 - 5) as f64).collect();
            let value: f64 = keys
                .iter()
                .zip(&target)
                .map(|(k, c)| c * k.vars().iter().map(|&v| y[v as usize]).product::<f64>())
                .sum();
            if value == 0.0 {
                continue;
            }
            examples.push(LabeledExample::new(y, if value > 0.0 { 1 } else { -1 })?);
        }
        match lp_consistent(&examples, dim, deg)? {
            LpOutcome::Feasible(h) => {
                separable_ok &= agreement(&h, &examples)?.agreement == 1.0;
            }
            LpOutcome::Infeasible => separable_ok = false,
        }
    }
    check.metric("separable_sets", 12.0);
    check.require(
        "LP is feasible with agreement 1 on every constructed separable set",
        separable_ok,
    );

    let xor: Vec<LabeledExample> = [
        (vec![1.0, 1.0], 1i8),
        (vec![1.0, -1.0], -1),
        (vec![-1.0, 1.0], -1),
        (vec![-1.0, -1.0], 1),
    ]
    .into_iter()
    .map(|(y, b)| LabeledExample::new(y, b))
    .collect::<Result<_>>()?;
    let (xor_d1, _) = max_agreement_exact(&xor, 2, 1)?;
    let (xor_d2, _) = max_agreement_exact(&xor, 2, 2)?;
    check.metric("xor_d1", xor_d1);
    check.metric("xor_d2", xor_d2);
    check.require("XOR optimum at degree 1 is exactly 3/4", xor_d1 == 0.75);
    check.require("XOR optimum at degree 2 is exactly 1", xor_d2 == 1.0);
    match lp_consistent(&xor, 2, 2)? {
        LpOutcome::Feasible(h) => {
            check.require(
                "LP hypothesis for XOR at degree 2 attains agreement 1",
                agreement(&h, &xor)?.agreement == 1.0,
            );
        }
        LpOutcome::Infeasible => check.require("LP certifies the XOR set at degree 2", false),
    }
    check.require(
        "LP reports the XOR set inseparable at degree 1",
        matches!(lp_consistent(&xor, 2, 1)?, LpOutcome::Infeasible),
    );

    let mut collapse_ok = true;
    for n in 1..=3usize {
        for d in 1..=3usize {
            for key in monomials_up_to(2 * n, d) {
                for s in [1.0, -1.0] {
                    let f = Polynomial::new(2 * n, d, [(key.clone(), s)])?;
                    collapse_ok &=
                        canonical_terms(&f.collapse_substitution(d)?) == collapse_oracle(&f, d);
                }
            }
        }
    }
    check.require("collapse matches the oracle on every signed monomial (n, d <= 3)", collapse_ok);

    let mut rng2 = p.seed_for(13).substream(1).rng();
    let mut dense_ok = true;
    for _ in 0..50 {
        let n = 1 + (rng2.random_range(0..3u64) as usize);
        let d = 1 + (rng2.random_range(0..3u64) as usize);
        let terms: Vec<(MonomialKey, f64)> = monomials_up_to(2 * n, d)
            .into_iter()
            .map(|k| (k, if rng2.random::<f64>() < 0.5 { -1.0 } else { 1.0 }))
            .collect();
        let f = Polynomial::new(2 * n, d, terms)?;
        let collapsed = f.collapse_substitution(d)?;
        dense_ok &= canonical_terms(&collapsed) == collapse_oracle(&f, d);
        dense_ok &= collapse_evaluates_consistently(&f, &collapsed, d, &mut rng2)?;
    }
    check.require("collapse matches the oracle on 50 dense ±1 polynomials", dense_ok);
    Ok(check.report())
}

fn c14_determinism(p: &VerifyParams, baseline: Option<&[CheckReport]>) -> Result<CheckReport> {
    let mut check = Check::new("c14", "determinism");
    let first = match baseline {
        Some(reports) => serde_json::to_vec(reports)?,
        None => serde_json::to_vec(&run_core(p)?)?,
    };
    let second = serde_json::to_vec(&run_core(p)?)?;
    check.metric("first_bytes", first.len() as f64);
    check.metric("second_bytes", second.len() as f64);
    check.require("two runs with identical params serialize identically", first == second);
    Ok(check.report())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick() -> VerifyParams {
        VerifyParams { n: 8, d: Some(2), samples: 2_000, seed: 41 }
    }

    #[test]
    fn unknown_suite_and_check_are_rejected() {
        assert!(matches!(run_suite("nope", &quick()), Err(Error::InvalidInput { .. })));
        assert!(matches!(run_check("c99", &quick()), Err(Error::InvalidInput { .. })));
        assert!(matches!(
            run_suite("all", &VerifyParams { samples: 10, ..quick() }),
            Err(Error::InvalidInput { .. })
        ));
    }

    #[test]
    fn structural_checks_pass_at_reduced_scale() {
        for id in ["c05", "c08", "c12", "c13"] {
            let report = run_check(id, &quick()).unwrap();
            assert!(report.pass, "{id}: {}", report.detail);
            assert_eq!(report.id, id);
            assert!(!report.metrics.is_empty());
        }
    }

    #[test]
    fn check_serialization_is_bytewise_deterministic() {
        let a = serde_json::to_vec(&run_check("c12", &quick()).unwrap()).unwrap();
        let b = serde_json::to_vec(&run_check("c12", &quick()).unwrap()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn failing_bound_is_reported_not_erred() {
        // an adversarial params choice: tiny sample budget at default bounds
        // makes c03's ±0.01 window unrealistic, so it may fail -- the report
        // must still come back structured, never as an Err
        let report = run_check("c03", &quick()).unwrap();
        assert_eq!(report.id, "c03");
        if !report.pass {
            assert!(report.detail.starts_with("violated"));
        }
    }

    #[test]
    fn suite_report_aggregates_verdicts() {
        let report = run_suite("solvers", &quick()).unwrap();
        assert_eq!(report.suite, "solvers");
        assert_eq!(report.checks.len(), 1);
        assert_eq!(report.pass, report.checks.iter().all(|c| c.pass));
    }

    #[test]
    fn nullspace_is_exact_on_a_hand_matrix() {
        // rows (1,1,0) and (0,1,1) over R^3: null space spanned by (1,-1,1)
        let rows = vec![vec![1.0, 1.0, 0.0], vec![0.0, 1.0, 1.0]];
        let null = exact_nullspace(&rows).unwrap();
        assert_eq!(null.len(), 1);
        let v = &null[0];
        assert_eq!(v[0], -v[1]);
        assert_eq!(v[0], v[2]);
        assert!(v[0] != 0.0);
    }

    #[test]
    fn collapse_oracle_spot_values() {
        // x_0 x_2 over n=2, d=2 -> g_0^2 g_0 = g_0^3
        let f = Polynomial::new(4, 2, [(MonomialKey::new(vec![0, 2]), 2.0)]).unwrap();
        assert_eq!(collapse_oracle(&f, 2), vec![(vec![0, 0, 0], 2.0)]);
        // x_0 - x_2^2 over n=2, d=2 collapses to zero
        let g = Polynomial::new(
            4,
            2,
            [(MonomialKey::new(vec![0]), 1.0), (MonomialKey::new(vec![2, 2]), -1.0)],
        )
        .unwrap();
        assert_eq!(collapse_oracle(&g, 2), vec![]);
    }
}
