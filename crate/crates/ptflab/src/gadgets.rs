//! The three dictator tests as labeled-example samplers, plus the Monte
//! Carlo pass-probability estimator.
//!
//! Draw order inside each sampler is fixed (bits, then Gaussians, then the
//! label, then any ladder index) and the estimator shards samples into
//! fixed-size batches with per-batch rng substreams, so every estimate is a
//! pure function of `(seed, config, sample count)` regardless of threading.

use crate::gauss::{sample_bits, sample_gaussian, RngSeed};
use crate::poly::{sign, MonomialKey, Polynomial, Sign};
use crate::{par, Error, Result};
use rand::RngExt;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Which boxed test a config drives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    T1,
    Td,
    T2,
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "t1" => Ok(Variant::T1),
            "td" => Ok(Variant::Td),
            "t2" => Ok(Variant::T2),
            other => Err(Error::invalid(format!("unknown variant '{other}' (t1|td|t2)"))),
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Variant::T1 => "t1",
            Variant::Td => "td",
            Variant::T2 => "t2",
        })
    }
}

/// Parameters of one dictator test.
///
/// Default policies: `β = 1/log₂ n`; `δ = 2^(−min(n², 40))` for Td and
/// `2^(−min(n, 40))` for T1/T2 (uncapped `2^(−n²)`/`2^(−n)` underflow doubles
/// at modest n; the cap keeps δ negligible against every other scale, which
/// is all the analysis uses).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GadgetConfig {
    pub variant: Variant,
    pub n: usize,
    pub d: usize,
    pub beta: f64,
    pub delta: f64,
    pub seed: RngSeed,
}

/// Largest exponent in the T₂ ladder: `⌈(log₂ n)²⌉`.
pub fn t2_exponent_cap(n: usize) -> usize {
    let log2n = (n as f64).log2();
    (log2n * log2n).ceil() as usize
}

pub fn default_beta(n: usize) -> f64 {
    1.0 / (n as f64).log2()
}

pub fn default_delta(variant: Variant, n: usize) -> f64 {
    let exponent = match variant {
        Variant::Td => (n * n).min(40),
        Variant::T1 | Variant::T2 => n.min(40),
    };
    2f64.powi(-(exponent as i32))
}

impl GadgetConfig {
    /// Config with the default β/δ policies. Requires n ≥ 3 so that the
    /// default β lands strictly inside (0, 1).
    pub fn new(variant: Variant, n: usize, d: usize, seed: RngSeed) -> Result<Self> {
        Self::with_params(variant, n, d, default_beta(n), default_delta(variant, n), seed)
    }

    /// Fully explicit config. β may be 0 (forced-completeness fixtures);
    /// β = 1 and δ ≤ 0 are rejected.
    pub fn with_params(
        variant: Variant,
        n: usize,
        d: usize,
        beta: f64,
        delta: f64,
        seed: RngSeed,
    ) -> Result<Self> {
        if n < 2 {
            return Err(Error::config(format!("block size n must be >= 2, got {n}")));
        }
        if d == 0 {
            return Err(Error::config("degree d must be >= 1"));
        }
        if !(0.0..1.0).contains(&beta) {
            return Err(Error::config(format!(
                "beta must lie in [0, 1), got {beta} (pass an explicit --beta for tiny n)"
            )));
        }
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(Error::config(format!("delta must be positive and finite, got {delta}")));
        }
        if variant == Variant::T2 {
            let cap = t2_exponent_cap(n);
            // largest value the sampler forms is ~t³·|r|; keep t³ clear of overflow
            let log10_t3 = 3.0 * cap as f64 * (n as f64).log10();
            if log10_t3 > 290.0 {
                return Err(Error::config(format!(
                    "T2 ladder overflows: t = n^i with i up to ceil((log2 n)^2) = {cap} \
                     reaches 10^{log10_t3:.0} cubed; reduce n so the exponent cap shrinks"
                )));
            }
        }
        Ok(GadgetConfig { variant, n, d, beta, delta, seed })
    }

    /// Dimension of emitted examples: 2n for T1/Td, n for T2.
    pub fn example_dimension(&self) -> usize {
        match self.variant {
            Variant::T1 | Variant::Td => 2 * self.n,
            Variant::T2 => self.n,
        }
    }
}

/// One draw from a test's example distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledExample {
    pub y: Vec<f64>,
    pub b: i8,
}

impl LabeledExample {
    pub fn new(y: Vec<f64>, b: i8) -> Result<Self> {
        if b != 1 && b != -1 {
            return Err(Error::invalid(format!("label must be +1 or -1, got {b}")));
        }
        Ok(LabeledExample { y, b })
    }

    pub fn label_sign(&self) -> Sign {
        if self.b >= 0 {
            Sign::Pos
        } else {
            Sign::Neg
        }
    }
}

fn random_label(rng: &mut ChaCha8Rng) -> i8 {
    if rng.random::<bool>() {
        1
    } else {
        -1
    }
}

/// T₁ draw: `y_i = a_i h_i + g_i + bδ`, `y_{n+i} = g_i`.
pub fn sample_t1(cfg: &GadgetConfig, rng: &mut ChaCha8Rng) -> Result<LabeledExample> {
    if cfg.variant != Variant::T1 {
        return Err(Error::invalid(format!("sample_t1 given a {} config", cfg.variant)));
    }
    let n = cfg.n;
    let a = sample_bits(rng, n, cfg.beta)?;
    let h: Vec<f64> = (0..n).map(|_| sample_gaussian(rng)).collect();
    let g: Vec<f64> = (0..n).map(|_| sample_gaussian(rng)).collect();
    let b = random_label(rng);
    let shift = b as f64 * cfg.delta;
    let mut y = vec![0.0; 2 * n];
    for i in 0..n {
        y[i] = a[i] as f64 * h[i] + g[i] + shift;
        y[n + i] = g[i];
    }
    LabeledExample::new(y, b)
}

/// T_d draw: `y_i = a_i h_i + g_i^d + bδ`, `y_{n+i} = g_i`.
pub fn sample_td(cfg: &GadgetConfig, rng: &mut ChaCha8Rng) -> Result<LabeledExample> {
    if cfg.variant != Variant::Td {
        return Err(Error::invalid(format!("sample_td given a {} config", cfg.variant)));
    }
    let n = cfg.n;
    let a = sample_bits(rng, n, cfg.beta)?;
    let h: Vec<f64> = (0..n).map(|_| sample_gaussian(rng)).collect();
    let g: Vec<f64> = (0..n).map(|_| sample_gaussian(rng)).collect();
    let b = random_label(rng);
    let shift = b as f64 * cfg.delta;
    let mut y = vec![0.0; 2 * n];
    for i in 0..n {
        y[i] = a[i] as f64 * h[i] + g[i].powi(cfg.d as i32) + shift;
        y[n + i] = g[i];
    }
    LabeledExample::new(y, b)
}

/// T₂ draw: `t = n^i` with `i` uniform in `[⌈(log₂n)²⌉]`,
/// `y = t³·(a_1g_1, …, a_ng_n) + b·t²δ·(1,…,1)`.
pub fn sample_t2(cfg: &GadgetConfig, rng: &mut ChaCha8Rng) -> Result<LabeledExample> {
    if cfg.variant != Variant::T2 {
        return Err(Error::invalid(format!("sample_t2 given a {} config", cfg.variant)));
    }
    let n = cfg.n;
    let a = sample_bits(rng, n, cfg.beta)?;
    let g: Vec<f64> = (0..n).map(|_| sample_gaussian(rng)).collect();
    let b = random_label(rng);
    let cap = t2_exponent_cap(n) as u64;
    let i = 1 + rng.random_range(0..cap);
    let t = (n as f64).powi(i as i32);
    let t3 = t * t * t;
    let shift = b as f64 * t * t * cfg.delta;
    let y: Vec<f64> = (0..n).map(|j| t3 * a[j] as f64 * g[j] + shift).collect();
    LabeledExample::new(y, b)
}

/// Dispatches to the sampler named by the config's variant.
pub fn sample(cfg: &GadgetConfig, rng: &mut ChaCha8Rng) -> Result<LabeledExample> {
    match cfg.variant {
        Variant::T1 => sample_t1(cfg, rng),
        Variant::Td => sample_td(cfg, rng),
        Variant::T2 => sample_t2(cfg, rng),
    }
}

/// The matching dictator `x_i − x_{n+i}^d` on 2n coordinates (0-based i).
pub fn matching_dictator(n: usize, d: usize, i: usize) -> Result<Polynomial> {
    if i >= n {
        return Err(Error::invalid(format!("dictator index {i} outside block of size {n}")));
    }
    Polynomial::new(
        2 * n,
        d,
        [
            (MonomialKey::new(vec![i as u32]), 1.0),
            (MonomialKey::new(vec![(n + i) as u32; d]), -1.0),
        ],
    )
}

/// The T₂ dictator `x_i` on n coordinates.
pub fn t2_dictator(n: usize, i: usize) -> Result<Polynomial> {
    if i >= n {
        return Err(Error::invalid(format!("dictator index {i} outside block of size {n}")));
    }
    Polynomial::new(n, 1, [(MonomialKey::new(vec![i as u32]), 1.0)])
}

/// Raw tallies behind a pass estimate. `ties` counts exact zeros of `f(y)`
/// (credited to +1 by the sign rule); `tie_matches` counts ties whose label
/// was +1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PassCounts {
    pub matches: u64,
    pub ties: u64,
    pub tie_matches: u64,
    pub samples: u64,
}

/// Monte Carlo estimate with a two-sided 99% Hoeffding interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PassEstimate {
    pub estimate: f64,
    pub ci99: f64,
    pub samples: usize,
}

impl PassEstimate {
    pub fn from_counts(counts: PassCounts) -> Self {
        PassEstimate {
            estimate: counts.matches as f64 / counts.samples as f64,
            ci99: hoeffding_ci99(counts.samples as usize),
            samples: counts.samples as usize,
        }
    }
}

/// Two-sided 99% Hoeffding half-width `√(ln(2/0.01)/(2·samples))`.
pub fn hoeffding_ci99(samples: usize) -> f64 {
    ((2.0 / 0.01f64).ln() / (2.0 * samples as f64)).sqrt()
}

fn batch_counts(
    f: &Polynomial,
    cfg: &GadgetConfig,
    samples: usize,
    index: usize,
) -> Result<PassCounts> {
    let mut rng = cfg.seed.substream(index as u64).rng();
    let len = par::batch_len(samples, index);
    let mut counts = PassCounts { matches: 0, ties: 0, tie_matches: 0, samples: len as u64 };
    for _ in 0..len {
        let ex = sample(cfg, &mut rng)?;
        let value = f.evaluate(&ex.y)?;
        if value == 0.0 {
            counts.ties += 1;
            if ex.b == 1 {
                counts.tie_matches += 1;
            }
        }
        if sign(value)? == ex.label_sign() {
            counts.matches += 1;
        }
    }
    Ok(counts)
}

fn merge_counts(parts: Vec<Result<PassCounts>>) -> Result<PassCounts> {
    let mut total = PassCounts { matches: 0, ties: 0, tie_matches: 0, samples: 0 };
    for part in parts {
        let part = part?;
        total.matches += part.matches;
        total.ties += part.ties;
        total.tie_matches += part.tie_matches;
        total.samples += part.samples;
    }
    Ok(total)
}

fn check_estimator_input(f: &Polynomial, cfg: &GadgetConfig, samples: usize) -> Result<()> {
    if f.dim() != cfg.example_dimension() {
        return Err(Error::DimensionMismatch {
            expected: cfg.example_dimension(),
            got: f.dim(),
        });
    }
    if samples == 0 {
        return Err(Error::invalid("estimator needs samples >= 1"));
    }
    Ok(())
}

/// Exact tallies of `sign(f(y)) = b` over `samples` draws.
pub fn pass_counts(f: &Polynomial, cfg: &GadgetConfig, samples: usize) -> Result<PassCounts> {
    check_estimator_input(f, cfg, samples)?;
    let batches = par::batch_count(samples);
    merge_counts(par::indexed_batch_map(batches, |i| batch_counts(f, cfg, samples, i)))
}

/// Sequential twin of [`pass_counts`] (identical output; benchmark baseline).
pub fn pass_counts_seq(f: &Polynomial, cfg: &GadgetConfig, samples: usize) -> Result<PassCounts> {
    check_estimator_input(f, cfg, samples)?;
    let batches = par::batch_count(samples);
    merge_counts(par::indexed_batch_map_seq(batches, |i| batch_counts(f, cfg, samples, i)))
}

/// Estimates `Pr[sign(f(y)) = b]` under the configured test.
pub fn estimate_pass_probability(
    f: &Polynomial,
    cfg: &GadgetConfig,
    samples: usize,
) -> Result<PassEstimate> {
    Ok(PassEstimate::from_counts(pass_counts(f, cfg, samples)?))
}

/// Sequential twin of [`estimate_pass_probability`].
pub fn estimate_pass_probability_seq(
    f: &Polynomial,
    cfg: &GadgetConfig,
    samples: usize,
) -> Result<PassEstimate> {
    Ok(PassEstimate::from_counts(pass_counts_seq(f, cfg, samples)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLES: usize = 20_000;

    fn seed(v: u64) -> RngSeed {
        RngSeed::new(v)
    }

    fn ci(samples: usize) -> f64 {
        hoeffding_ci99(samples)
    }

    #[test]
    fn config_policies() {
        let cfg = GadgetConfig::new(Variant::Td, 16, 3, seed(1)).unwrap();
        assert_eq!(cfg.beta, 0.25);
        assert_eq!(cfg.delta, 2f64.powi(-40));
        assert_eq!(cfg.example_dimension(), 32);

        let cfg = GadgetConfig::new(Variant::T1, 16, 1, seed(1)).unwrap();
        assert_eq!(cfg.delta, 2f64.powi(-16));

        let cfg = GadgetConfig::new(Variant::T2, 16, 2, seed(1)).unwrap();
        assert_eq!(cfg.delta, 2f64.powi(-16));
        assert_eq!(cfg.example_dimension(), 16);
        assert_eq!(t2_exponent_cap(16), 16);
    }

    #[test]
    fn config_rejects_bad_parameters() {
        assert!(matches!(
            GadgetConfig::new(Variant::Td, 2, 2, seed(1)),
            Err(Error::Config { .. })
        ));
        assert!(matches!(
            GadgetConfig::with_params(Variant::Td, 16, 0, 0.25, 1e-9, seed(1)),
            Err(Error::Config { .. })
        ));
        assert!(matches!(
            GadgetConfig::with_params(Variant::Td, 16, 2, 1.0, 1e-9, seed(1)),
            Err(Error::Config { .. })
        ));
        assert!(matches!(
            GadgetConfig::with_params(Variant::Td, 16, 2, 0.25, 0.0, seed(1)),
            Err(Error::Config { .. })
        ));
    }

    #[test]
    fn t2_ladder_overflow_rejected_at_construction() {
        let err = GadgetConfig::new(Variant::T2, 300, 2, seed(1)).unwrap_err();
        match err {
            Error::Config { what } => assert!(what.contains("exponent cap")),
            other => panic!("wrong error: {other}"),
        }
        assert!(GadgetConfig::new(Variant::T2, 64, 2, seed(1)).is_ok());
    }

    #[test]
    fn t1_forced_completeness_is_exact() {
        // β = 0 forces a = 0: y_i = g_i + bδ, y_{n+i} = g_i, so the matching
        // dictator sees exactly bδ and always agrees.
        let cfg =
            GadgetConfig::with_params(Variant::T1, 8, 1, 0.0, 2f64.powi(-8), seed(2)).unwrap();
        let f = matching_dictator(8, 1, 3).unwrap();
        let counts = pass_counts(&f, &cfg, 5_000).unwrap();
        assert_eq!(counts.matches, 5_000);
        assert_eq!(counts.ties, 0);
    }

    #[test]
    fn t1_matching_dictator_completeness() {
        let cfg = GadgetConfig::new(Variant::T1, 16, 1, seed(3)).unwrap();
        let f = matching_dictator(16, 1, 5).unwrap();
        let est = estimate_pass_probability(&f, &cfg, SAMPLES).unwrap();
        assert!(est.estimate >= 1.0 - cfg.beta - est.ci99, "estimate {}", est.estimate);
    }

    #[test]
    fn t1_one_sided_dictator_is_near_coin_flip() {
        // x_u^{(i)} alone sees g_i + a_i h_i + bδ: pass prob 1/2 + O(δ)
        let cfg = GadgetConfig::new(Variant::T1, 16, 1, seed(4)).unwrap();
        let f = Polynomial::new(32, 1, [(MonomialKey::new(vec![1]), 1.0)]).unwrap();
        let est = estimate_pass_probability(&f, &cfg, SAMPLES).unwrap();
        assert!((est.estimate - 0.5).abs() <= 0.02, "estimate {}", est.estimate);
    }

    #[test]
    fn td_dictator_completeness() {
        for d in [2usize, 3] {
            let cfg = GadgetConfig::new(Variant::Td, 16, d, seed(5)).unwrap();
            let f = matching_dictator(16, d, 7).unwrap();
            let est = estimate_pass_probability(&f, &cfg, SAMPLES).unwrap();
            assert!(
                est.estimate >= 1.0 - cfg.beta - est.ci99,
                "d={d}: estimate {}",
                est.estimate
            );
        }
    }

    #[test]
    fn constant_hypothesis_calibrates_to_half() {
        for (variant, dim) in [(Variant::T1, 32), (Variant::Td, 32), (Variant::T2, 16)] {
            let cfg = GadgetConfig::new(variant, 16, 2, seed(6)).unwrap();
            let f = Polynomial::constant(dim, 2.5).unwrap();
            let est = estimate_pass_probability(&f, &cfg, SAMPLES).unwrap();
            assert!(
                (est.estimate - 0.5).abs() <= 2.0 * est.ci99,
                "{variant}: estimate {}",
                est.estimate
            );
        }
    }

    #[test]
    fn zero_polynomial_calibrates_to_half() {
        let cfg = GadgetConfig::new(Variant::Td, 16, 2, seed(7)).unwrap();
        let f = Polynomial::zero(32, 2);
        let est = estimate_pass_probability(&f, &cfg, SAMPLES).unwrap();
        // sign(0) = +1 always, so matches exactly when b = +1
        assert!((est.estimate - 0.5).abs() <= 2.0 * est.ci99);
        let counts = pass_counts(&f, &cfg, SAMPLES).unwrap();
        assert_eq!(counts.ties, SAMPLES as u64);
        assert_eq!(counts.tie_matches, counts.matches);
    }

    #[test]
    fn td_cross_term_adversary_stays_near_half() {
        // (x_i − x_{n+i})·Σ_j x_j²: the §4 motivating adversary for T₁
        let n = 16usize;
        let cfg = GadgetConfig::new(Variant::Td, n, 3, seed(8)).unwrap();
        let i = 0u32;
        let mut terms = Vec::new();
        for j in 0..n as u32 {
            terms.push((MonomialKey::new(vec![i, j, j]), 1.0));
            terms.push((MonomialKey::new(vec![n as u32 + i, j, j]), -1.0));
        }
        let f = Polynomial::new(2 * n, 3, terms).unwrap();
        let est = estimate_pass_probability(&f, &cfg, SAMPLES).unwrap();
        assert!(
            est.estimate <= 0.5 + cfg.beta + est.ci99,
            "adversary pass estimate {}",
            est.estimate
        );
    }

    #[test]
    fn t2_dictator_completeness_and_flip() {
        let cfg = GadgetConfig::new(Variant::T2, 16, 2, seed(9)).unwrap();
        let f = t2_dictator(16, 4).unwrap();
        let est = estimate_pass_probability(&f, &cfg, SAMPLES).unwrap();
        assert!(est.estimate >= 1.0 - cfg.beta - est.ci99, "estimate {}", est.estimate);

        let neg = f.scaled(-1.0).unwrap();
        let est_neg = estimate_pass_probability(&neg, &cfg, SAMPLES).unwrap();
        assert!(est_neg.estimate <= cfg.beta + est_neg.ci99, "estimate {}", est_neg.estimate);
    }

    #[test]
    fn estimate_is_scale_invariant() {
        let cfg = GadgetConfig::new(Variant::Td, 8, 2, seed(10)).unwrap();
        let f = matching_dictator(8, 2, 1).unwrap();
        let base = pass_counts(&f, &cfg, SAMPLES).unwrap();
        let scaled = pass_counts(&f.scaled(1e6).unwrap(), &cfg, SAMPLES).unwrap();
        assert_eq!(base, scaled);

        let neg = pass_counts(&f.scaled(-2.0).unwrap(), &cfg, SAMPLES).unwrap();
        assert_eq!(
            neg.matches,
            SAMPLES as u64 - base.matches - base.ties + 2 * base.tie_matches
        );
    }

    #[test]
    fn ci_shrinks_by_sqrt2_on_doubling() {
        for s in [1_000usize, 4_096, 100_000] {
            let ratio = hoeffding_ci99(s) / hoeffding_ci99(2 * s);
            assert!((ratio - std::f64::consts::SQRT_2).abs() <= 1e-15);
        }
        assert!((hoeffding_ci99(100_000) - 0.00514).abs() <= 1e-4);
    }

    #[test]
    fn parallel_matches_sequential_exactly() {
        let cfg = GadgetConfig::new(Variant::Td, 16, 2, seed(11)).unwrap();
        let f = matching_dictator(16, 2, 0).unwrap();
        let par = pass_counts(&f, &cfg, 3 * par::BATCH + 100).unwrap();
        let seq = pass_counts_seq(&f, &cfg, 3 * par::BATCH + 100).unwrap();
        assert_eq!(par, seq);
    }

    #[test]
    fn same_seed_reproduces_estimate() {
        let cfg = GadgetConfig::new(Variant::T2, 16, 2, seed(12)).unwrap();
        let f = t2_dictator(16, 2).unwrap();
        let a = estimate_pass_probability(&f, &cfg, 8_192).unwrap();
        let b = estimate_pass_probability(&f, &cfg, 8_192).unwrap();
        assert_eq!(a, b);
        let other = GadgetConfig { seed: seed(13), ..cfg };
        let c = estimate_pass_probability(&f, &other, 8_192).unwrap();
        assert_ne!(a.estimate.to_bits(), c.estimate.to_bits());
    }

    #[test]
    fn estimator_rejects_dimension_mismatch() {
        let cfg = GadgetConfig::new(Variant::Td, 16, 2, seed(14)).unwrap();
        let f = t2_dictator(16, 2).unwrap();
        assert!(matches!(
            estimate_pass_probability(&f, &cfg, 100),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn samplers_check_variant_tag() {
        let cfg = GadgetConfig::new(Variant::Td, 8, 2, seed(15)).unwrap();
        let mut rng = cfg.seed.rng();
        assert!(matches!(sample_t1(&cfg, &mut rng), Err(Error::InvalidInput { .. })));
        assert!(matches!(sample_t2(&cfg, &mut rng), Err(Error::InvalidInput { .. })));
        assert!(sample_td(&cfg, &mut rng).is_ok());
    }

    #[test]
    fn emitted_examples_have_declared_shape() {
        for variant in [Variant::T1, Variant::Td, Variant::T2] {
            let cfg = GadgetConfig::new(variant, 8, 2, seed(16)).unwrap();
            let mut rng = cfg.seed.rng();
            for _ in 0..100 {
                let ex = sample(&cfg, &mut rng).unwrap();
                assert_eq!(ex.y.len(), cfg.example_dimension());
                assert!(ex.b == 1 || ex.b == -1);
                assert!(ex.y.iter().all(|v| v.is_finite()));
            }
        }
    }

    #[test]
    fn t2_points_lie_on_the_ladder() {
        let cfg = GadgetConfig::new(Variant::T2, 8, 2, seed(17)).unwrap();
        let mut rng = cfg.seed.rng();
        let cap = t2_exponent_cap(8);
        let ladder: Vec<f64> = (1..=cap).map(|i| (8f64).powi(i as i32)).collect();
        for _ in 0..500 {
            let ex = sample_t2(&cfg, &mut rng).unwrap();
            // the shift b·t²δ is never zero, so t is recoverable from any coord
            let shift = ex.y.iter().copied().fold(f64::INFINITY, |m, v| m.min(v.abs()));
            let t = (shift / cfg.delta).sqrt();
            assert!(
                ladder.iter().any(|&l| (t - l).abs() <= 1e-6 * l),
                "t = {t} not on ladder"
            );
        }
    }

    #[test]
    fn label_symmetry_t1_means_near_zero() {
        // r is origin-symmetric for T1, so y − bδω has mean 0 coordinate-wise
        let cfg = GadgetConfig::new(Variant::T1, 8, 1, seed(18)).unwrap();
        let mut rng = cfg.seed.rng();
        let dim = cfg.example_dimension();
        let mut mean = vec![0.0f64; dim];
        let trials = 20_000usize;
        for _ in 0..trials {
            let ex = sample(&cfg, &mut rng).unwrap();
            let shift = ex.b as f64 * cfg.delta;
            for (j, &v) in ex.y.iter().enumerate() {
                mean[j] += if j < cfg.n { v - shift } else { v };
            }
        }
        // Var(y_i) ≤ 2, so 5σ at 2·10⁴ trials is 0.05
        for m in &mean {
            assert!((m / trials as f64).abs() <= 0.05);
        }
    }

    #[test]
    fn label_symmetry_t2_coordinates_are_sign_balanced() {
        // y_j = t³a_jg_j + bt²δ is symmetric about 0, so Pr[y_j > 0] = 1/2
        let cfg = GadgetConfig::new(Variant::T2, 8, 2, seed(18)).unwrap();
        let mut rng = cfg.seed.rng();
        let trials = 20_000usize;
        let mut positive = 0usize;
        let mut total = 0usize;
        for _ in 0..trials {
            let ex = sample(&cfg, &mut rng).unwrap();
            for &v in &ex.y {
                total += 1;
                if v > 0.0 {
                    positive += 1;
                }
            }
        }
        let frac = positive as f64 / total as f64;
        // coordinates within a draw are dependent through (t, b): use the
        // per-draw CI, not the pooled one
        assert!((frac - 0.5).abs() <= 2.0 * ci(trials), "positive fraction {frac}");
    }

    #[test]
    fn label_symmetry_td_shifted_means_agree() {
        // b enters Td only through +bδω: conditional means of y − bδω match
        let cfg = GadgetConfig::new(Variant::Td, 8, 2, seed(19)).unwrap();
        let mut rng = cfg.seed.rng();
        let dim = cfg.example_dimension();
        let mut sums = [vec![0.0f64; dim], vec![0.0f64; dim]];
        let mut counts = [0usize; 2];
        for _ in 0..SAMPLES {
            let ex = sample(&cfg, &mut rng).unwrap();
            let idx = if ex.b == 1 { 0 } else { 1 };
            counts[idx] += 1;
            for (j, &v) in ex.y.iter().enumerate() {
                let unshifted = if j < cfg.n { v - ex.b as f64 * cfg.delta } else { v };
                sums[idx][j] += unshifted;
            }
        }
        for j in 0..dim {
            let m_plus = sums[0][j] / counts[0] as f64;
            let m_minus = sums[1][j] / counts[1] as f64;
            // each mean has SE ≤ sqrt(Var/10⁴) with Var ≤ 15 (g² terms)
            assert!((m_plus - m_minus).abs() <= 0.2, "coord {j}: {m_plus} vs {m_minus}");
        }
    }
}
