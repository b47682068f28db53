//! Seeded random sources: standard Gaussians, Bernoulli(β) bits, the
//! discretized Gaussian H_N/√N, and the quantile coupling of the two.
//!
//! Every sampler is a pure function of `(seed, stream, call index)`. The
//! coupling is realized by pushing one shared uniform through both inverse
//! CDFs (binomial quantile for H_N, Ψ⁻¹ for the normal), which has the same
//! joint law as the interval-resampling construction but no unbounded loop.

use crate::poly::Polynomial;
use crate::{Error, Result};
use rand::distr::{Bernoulli, Distribution};
use rand::RngExt;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

const SQRT_2PI: f64 = 2.5066282746310002;

/// Seed plus stream id. Identical `(seed, stream)` pairs reproduce the exact
/// sample sequence across runs and platforms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngSeed {
    pub seed: u64,
    pub stream: u64,
}

impl RngSeed {
    pub fn new(seed: u64) -> Self {
        RngSeed { seed, stream: 0 }
    }

    /// Derives an independent substream; distinct tags give distinct streams.
    pub fn substream(self, tag: u64) -> Self {
        RngSeed { seed: self.seed, stream: splitmix64(self.stream ^ splitmix64(tag)) }
    }

    /// Instantiates the generator positioned at the start of the stream.
    pub fn rng(self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }
}

pub(crate) fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E3779B97F4A7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D049BB133111EB);
    x ^ (x >> 31)
}

/// One standard normal draw.
pub fn sample_gaussian(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// `n` iid Bernoulli(β) bits as 0/1 bytes.
pub fn sample_bits(rng: &mut ChaCha8Rng, n: usize, beta: f64) -> Result<Vec<u8>> {
    if !(0.0..=1.0).contains(&beta) {
        return Err(Error::invalid(format!("bit rate must be in [0,1], got {beta}")));
    }
    let dist = Bernoulli::new(beta).map_err(|e| Error::invalid(e.to_string()))?;
    Ok((0..n).map(|_| dist.sample(rng) as u8).collect())
}

/// A uniform in (0, 1); the zero endpoint is rerolled so quantiles stay finite.
pub fn sample_open_uniform(rng: &mut ChaCha8Rng) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}

/// The discretized Gaussian H_N/√N where H_N is a sum of N signs.
///
/// Holds the exact CDF table of H_N (binomial masses, log-space recurrence,
/// compensated cumulative sum), indexed by the count `j` of +1 bits; the
/// support point for `j` is `(2j − N)/√N`.
#[derive(Debug, Clone)]
pub struct DiscretizedGaussianSpec {
    n_bits: usize,
    sqrt_n: f64,
    cdf: Vec<f64>,
}

impl DiscretizedGaussianSpec {
    pub fn new(n_bits: usize) -> Result<Self> {
        if n_bits == 0 {
            return Err(Error::invalid("discretized Gaussian needs N >= 1"));
        }
        let n = n_bits as f64;
        let mut cdf = Vec::with_capacity(n_bits + 1);
        let mut log_mass = -n * std::f64::consts::LN_2;
        let mut sum = 0.0f64;
        let mut comp = 0.0f64;
        for j in 0..=n_bits {
            let term = log_mass.exp();
            let t = sum + term;
            if sum.abs() >= term.abs() {
                comp += (sum - t) + term;
            } else {
                comp += (term - t) + sum;
            }
            sum = t;
            cdf.push((sum + comp).min(1.0));
            if j < n_bits {
                log_mass += ((n_bits - j) as f64).ln() - ((j + 1) as f64).ln();
            }
        }
        cdf[n_bits] = 1.0;
        Ok(DiscretizedGaussianSpec { n_bits, sqrt_n: n.sqrt(), cdf })
    }

    pub fn n_bits(&self) -> usize {
        self.n_bits
    }

    /// Support point for `j` ones among the N bits: `(2j − N)/√N`.
    pub fn support_point(&self, j: usize) -> f64 {
        (2.0 * j as f64 - self.n_bits as f64) / self.sqrt_n
    }

    /// `Pr[H_N/√N ≤ x]`, exact up to the table's compensated rounding.
    pub fn binomial_cdf(&self, x: f64) -> f64 {
        // atoms sit at (2j − N)/√N; the nudge absorbs the scaling round-trip
        let t = (x * self.sqrt_n + self.n_bits as f64 + 1e-9) / 2.0;
        if t < 0.0 {
            return 0.0;
        }
        let j = t.floor() as usize;
        if j >= self.n_bits {
            return 1.0;
        }
        self.cdf[j]
    }

    /// Quantile of H_N/√N: the smallest support point with CDF ≥ u.
    pub fn binomial_quantile(&self, u: f64) -> f64 {
        let j = self.cdf.partition_point(|&c| c < u).min(self.n_bits);
        self.support_point(j)
    }
}

/// A draw from the coupled pair `(G, H_N/√N)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoupledPair {
    pub g: f64,
    pub h_scaled: f64,
}

/// Deterministic coupling map: both coordinates are quantiles of the same
/// uniform, hence each is nondecreasing in `u` and the marginals are exact.
pub fn coupled_from_uniform(spec: &DiscretizedGaussianSpec, u: f64) -> CoupledPair {
    CoupledPair { g: normal_quantile(u), h_scaled: spec.binomial_quantile(u) }
}

/// Samples the coupled pair `(G, H_N/√N)` from one shared uniform.
pub fn sample_coupled(rng: &mut ChaCha8Rng, spec: &DiscretizedGaussianSpec) -> CoupledPair {
    coupled_from_uniform(spec, sample_open_uniform(rng))
}

/// Standard normal CDF Ψ via the complementary error function.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Standard normal quantile Ψ⁻¹: Acklam's rational approximation refined by
/// one Newton step on Ψ. Returns ±∞ at the endpoints.
pub fn normal_quantile(p: f64) -> f64 {
    if p.is_nan() {
        return f64::NAN;
    }
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383577518672690e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    const P_LOW: f64 = 0.02425;

    let x = if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -((((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0))
    };
    let err = normal_cdf(x) - p;
    x - err * SQRT_2PI * (0.5 * x * x).exp()
}

/// Monte Carlo anticoncentration check: empirical `Pr[|f(G)| ≤ τ·‖f‖₂]`
/// against the Carbery–Wright-style bound `3·d·τ^(1/d)`.
pub fn anticoncentration_check(
    f: &Polynomial,
    tau: f64,
    samples: usize,
    rng: &mut ChaCha8Rng,
) -> Result<(f64, f64)> {
    if !(tau > 0.0) {
        return Err(Error::invalid(format!("tau must be positive, got {tau}")));
    }
    if f.weight() == 0.0 {
        return Err(Error::degenerate("anticoncentration check on a constant polynomial"));
    }
    if samples == 0 {
        return Err(Error::invalid("anticoncentration check needs samples >= 1"));
    }
    let norm = f.gaussian_l2_norm();
    let threshold = tau * norm;
    let mut hits = 0usize;
    let mut x = vec![0.0; f.dim()];
    for _ in 0..samples {
        for xi in x.iter_mut() {
            *xi = sample_gaussian(rng);
        }
        if f.evaluate(&x)?.abs() <= threshold {
            hits += 1;
        }
    }
    let d = f.max_term_degree().max(1) as f64;
    let bound = 3.0 * d * tau.powf(1.0 / d);
    Ok((hits as f64 / samples as f64, bound))
}

/// Two-sided DKW band half-width at confidence `1 − alpha` for `samples` draws.
pub fn dkw_epsilon(samples: usize, alpha: f64) -> f64 {
    ((2.0 / alpha).ln() / (2.0 * samples as f64)).sqrt()
}
