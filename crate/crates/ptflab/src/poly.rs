//! Sparse multivariate polynomials over multiset monomial keys.
//!
//! A polynomial is stored as a canonical sorted list of `(multiset, coeff)`
//! pairs; the constant term lives under the empty multiset. The module
//! provides the structural quantities the soundness analyses need — weight
//! (sum of nonconstant |c_S|), influential-index sets, block restrictions,
//! cross-block weight, exact Gaussian L2 norms via moment expansion, and the
//! collapse substitution `x_i <- g_i^d`, `x_{n+i} <- g_i`.

use crate::{Error, Result};
use num::BigRational;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fmt;

/// A monomial as a sorted multiset of variable indices (0-based).
///
/// `[0, 0, 2]` is `x_0^2 x_2`; the empty multiset is the constant monomial.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct MonomialKey(Vec<u32>);

impl MonomialKey {
    /// Canonicalizes (sorts) the given variable multiset.
    pub fn new(mut vars: Vec<u32>) -> Self {
        vars.sort_unstable();
        MonomialKey(vars)
    }

    /// The constant monomial.
    pub fn empty() -> Self {
        MonomialKey(Vec::new())
    }

    /// Multiset size = total degree of the monomial.
    pub fn degree(&self) -> usize {
        self.0.len()
    }

    pub fn is_constant(&self) -> bool {
        self.0.is_empty()
    }

    /// Sorted variable indices with repeats.
    pub fn vars(&self) -> &[u32] {
        &self.0
    }

    pub fn contains(&self, var: u32) -> bool {
        self.0.binary_search(&var).is_ok()
    }

    /// Iterates `(variable, multiplicity)` pairs in increasing variable order.
    pub fn multiplicities(&self) -> impl Iterator<Item = (u32, usize)> + '_ {
        let mut idx = 0;
        std::iter::from_fn(move || {
            if idx >= self.0.len() {
                return None;
            }
            let var = self.0[idx];
            let start = idx;
            while idx < self.0.len() && self.0[idx] == var {
                idx += 1;
            }
            Some((var, idx - start))
        })
    }
}

impl fmt::Display for MonomialKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_constant() {
            return write!(f, "1");
        }
        for (i, (var, mult)) in self.multiplicities().enumerate() {
            if i > 0 {
                write!(f, "*")?;
            }
            if mult == 1 {
                write!(f, "x{var}")?;
            } else {
                write!(f, "x{var}^{mult}")?;
            }
        }
        Ok(())
    }
}

/// Sign of a PTF output; ties (`v = 0`) resolve to `Pos` everywhere.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sign {
    Neg,
    Pos,
}

impl Sign {
    pub fn value(self) -> i8 {
        match self {
            Sign::Neg => -1,
            Sign::Pos => 1,
        }
    }

    pub fn flip(self) -> Sign {
        match self {
            Sign::Neg => Sign::Pos,
            Sign::Pos => Sign::Neg,
        }
    }
}

/// `sign(v)`: +1 if `v >= 0`, else −1. The single tie rule of the crate.
pub fn sign(v: f64) -> Result<Sign> {
    if v.is_nan() {
        return Err(Error::NotFinite { what: "sign of NaN".into() });
    }
    Ok(if v >= 0.0 { Sign::Pos } else { Sign::Neg })
}

/// Influential-index set `I_θ(f)` together with the threshold that produced it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexSet {
    pub theta: u64,
    pub indices: BTreeSet<u32>,
}

/// The threshold is stored as bits so `IndexSet` stays `Eq`; see [`IndexSet::theta_value`].
impl IndexSet {
    pub fn theta_value(&self) -> f64 {
        f64::from_bits(self.theta)
    }
}

#[derive(Serialize, Deserialize)]
struct TermRepr {
    vars: Vec<u32>,
    coeff: f64,
}

#[derive(Serialize, Deserialize)]
struct PolyRepr {
    dim: usize,
    degree: usize,
    terms: Vec<TermRepr>,
}

/// Sparse polynomial over `dim` variables with max degree `degree`.
///
/// Terms are kept sorted by key, merged, and purged of zero coefficients, so
/// equal polynomials have identical representations (and identical JSON).
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    dim: usize,
    degree: usize,
    terms: Vec<(MonomialKey, f64)>,
}

impl Polynomial {
    /// Builds a polynomial from raw terms, canonicalizing and validating.
    pub fn new(
        dim: usize,
        degree: usize,
        terms: impl IntoIterator<Item = (MonomialKey, f64)>,
    ) -> Result<Self> {
        let mut terms: Vec<(MonomialKey, f64)> = terms.into_iter().collect();
        for (key, coeff) in &terms {
            if !coeff.is_finite() {
                return Err(Error::NotFinite { what: format!("coefficient of {key}") });
            }
            if key.degree() > degree {
                return Err(Error::invalid(format!(
                    "monomial {key} exceeds declared degree {degree}"
                )));
            }
            if let Some(&v) = key.vars().last() {
                if v as usize >= dim {
                    return Err(Error::invalid(format!(
                        "monomial {key} references variable {v} outside dimension {dim}"
                    )));
                }
            }
        }
        terms.sort_by(|a, b| a.0.cmp(&b.0));
        let mut merged: Vec<(MonomialKey, f64)> = Vec::with_capacity(terms.len());
        for (key, coeff) in terms {
            match merged.last_mut() {
                Some((last, c)) if *last == key => *c += coeff,
                _ => merged.push((key, coeff)),
            }
        }
        merged.retain(|(_, c)| *c != 0.0);
        Ok(Polynomial { dim, degree, terms: merged })
    }

    pub fn zero(dim: usize, degree: usize) -> Self {
        Polynomial { dim, degree, terms: Vec::new() }
    }

    pub fn constant(dim: usize, value: f64) -> Result<Self> {
        Polynomial::new(dim, 0, [(MonomialKey::empty(), value)])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Declared max degree (an upper bound; see [`Self::max_term_degree`]).
    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Largest degree among stored terms; 0 for constants and the zero polynomial.
    pub fn max_term_degree(&self) -> usize {
        self.terms.iter().map(|(k, _)| k.degree()).max().unwrap_or(0)
    }

    /// Sorted `(key, coeff)` view; no zero coefficients.
    pub fn terms(&self) -> &[(MonomialKey, f64)] {
        &self.terms
    }

    /// Coefficient of `key` (0 when absent).
    pub fn coeff(&self, key: &MonomialKey) -> f64 {
        match self.terms.binary_search_by(|(k, _)| k.cmp(key)) {
            Ok(i) => self.terms[i].1,
            Err(_) => 0.0,
        }
    }

    /// Constant term θ.
    pub fn constant_term(&self) -> f64 {
        self.coeff(&MonomialKey::empty())
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// `c · f` (term order preserved; exact for powers of two).
    pub fn scaled(&self, c: f64) -> Result<Self> {
        Polynomial::new(
            self.dim,
            self.degree,
            self.terms.iter().map(|(k, v)| (k.clone(), c * v)),
        )
    }

    /// Evaluates `Σ c_S ∏_{i∈S} x_i` with Neumaier-compensated summation.
    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: x.len() });
        }
        let mut sum = 0.0f64;
        let mut comp = 0.0f64;
        for (key, coeff) in &self.terms {
            let mut term = *coeff;
            for &v in key.vars() {
                term *= x[v as usize];
            }
            let t = sum + term;
            if sum.abs() >= term.abs() {
                comp += (sum - t) + term;
            } else {
                comp += (term - t) + sum;
            }
            sum = t;
        }
        Ok(sum + comp)
    }

    /// Exact-rational evaluation used by oracle tests (dimension ≤ 64).
    pub fn evaluate_rational(&self, x: &[BigRational]) -> Result<BigRational> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: x.len() });
        }
        if self.dim > 64 {
            return Err(Error::capacity(format!(
                "rational evaluation supports dimension <= 64, got {}",
                self.dim
            )));
        }
        let mut sum = BigRational::from_float(0.0).unwrap();
        for (key, coeff) in &self.terms {
            let mut term = BigRational::from_float(*coeff)
                .ok_or_else(|| Error::NotFinite { what: format!("coefficient of {key}") })?;
            for &v in key.vars() {
                term *= &x[v as usize];
            }
            sum += term;
        }
        Ok(sum)
    }

    /// `weight(f) = Σ_{S≠∅} |c_S|`; zero iff `f` is constant.
    pub fn weight(&self) -> f64 {
        let mut sum = 0.0f64;
        let mut comp = 0.0f64;
        for (key, coeff) in &self.terms {
            if key.is_constant() {
                continue;
            }
            let term = coeff.abs();
            let t = sum + term;
            if sum.abs() >= term.abs() {
                comp += (sum - t) + term;
            } else {
                comp += (term - t) + sum;
            }
            sum = t;
        }
        sum + comp
    }

    /// `I_θ(f) = {i | ∃S ∋ i with |c_S| ≥ θ·weight(f)/binom(n+d, d)}`.
    ///
    /// `n` is the ambient dimension and `d` the declared degree of `f`.
    pub fn index_set(&self, theta: f64) -> Result<IndexSet> {
        if !(theta > 0.0 && theta <= 1.0) {
            return Err(Error::invalid(format!("theta must be in (0,1], got {theta}")));
        }
        let w = self.weight();
        if w == 0.0 {
            return Err(Error::degenerate("index_set of a constant polynomial"));
        }
        let threshold = theta * w / binomial(self.dim + self.degree, self.degree);
        let mut indices = BTreeSet::new();
        for (key, coeff) in &self.terms {
            if key.is_constant() || coeff.abs() < threshold {
                continue;
            }
            for &v in key.vars() {
                indices.insert(v);
            }
        }
        Ok(IndexSet { theta: theta.to_bits(), indices })
    }

    /// Zeroes every variable outside `keep`: drops monomials touching a
    /// dropped variable and preserves the constant term. Ambient dimension
    /// and degree are unchanged.
    pub fn restrict_to_block(&self, keep: &BTreeSet<u32>) -> Polynomial {
        let terms = self
            .terms
            .iter()
            .filter(|(k, _)| k.vars().iter().all(|v| keep.contains(v)))
            .cloned()
            .collect();
        Polynomial { dim: self.dim, degree: self.degree, terms }
    }

    /// Like [`Self::restrict_to_block`], then renumbers `block[j] -> j` so the
    /// result lives on ambient dimension `block.len()`. Used when a block
    /// restriction must be analyzed as a polynomial in its own right (the
    /// index-set threshold divides by `binom(n+d, d)` of the block).
    pub fn project_to_block(&self, block: &[u32]) -> Result<Polynomial> {
        let mut position = std::collections::BTreeMap::new();
        for (j, &v) in block.iter().enumerate() {
            if v as usize >= self.dim {
                return Err(Error::invalid(format!(
                    "block variable {v} outside dimension {}",
                    self.dim
                )));
            }
            if position.insert(v, j as u32).is_some() {
                return Err(Error::invalid(format!("block repeats variable {v}")));
            }
        }
        let mut terms = Vec::new();
        for (key, coeff) in &self.terms {
            let mapped: Option<Vec<u32>> =
                key.vars().iter().map(|v| position.get(v).copied()).collect();
            if let Some(vars) = mapped {
                terms.push((MonomialKey::new(vars), *coeff));
            }
        }
        Polynomial::new(block.len(), self.degree, terms)
    }

    /// `weight` of the part of `f` touching both blocks (`weight(f₁₂)`).
    pub fn cross_weight(&self, block_a: &BTreeSet<u32>, block_b: &BTreeSet<u32>) -> Result<f64> {
        if !block_a.is_disjoint(block_b) {
            return Err(Error::invalid("cross_weight blocks overlap"));
        }
        let mut sum = 0.0f64;
        let mut comp = 0.0f64;
        for (key, coeff) in &self.terms {
            let touches_a = key.vars().iter().any(|v| block_a.contains(v));
            let touches_b = key.vars().iter().any(|v| block_b.contains(v));
            if !(touches_a && touches_b) {
                continue;
            }
            let term = coeff.abs();
            let t = sum + term;
            if sum.abs() >= term.abs() {
                comp += (sum - t) + term;
            } else {
                comp += (term - t) + sum;
            }
            sum = t;
        }
        Ok(sum + comp)
    }

    /// Exact `√E[f(G)²]` for iid standard normal `G`, by expanding `f²` and
    /// applying `E[g^k] = (k−1)!!` (even `k`; odd moments vanish).
    pub fn gaussian_l2_norm(&self) -> f64 {
        let mut sum = 0.0f64;
        let mut comp = 0.0f64;
        for (i, (ka, ca)) in self.terms.iter().enumerate() {
            for (kb, cb) in &self.terms[i..] {
                let moment = pair_moment(ka, kb);
                if moment == 0.0 {
                    continue;
                }
                // off-diagonal pairs appear twice in the square
                let factor = if ka == kb { 1.0 } else { 2.0 };
                let term = factor * ca * cb * moment;
                let t = sum + term;
                if sum.abs() >= term.abs() {
                    comp += (sum - t) + term;
                } else {
                    comp += (term - t) + sum;
                }
                sum = t;
            }
        }
        (sum + comp).max(0.0).sqrt()
    }

    /// Substitutes `x_i <- g_i^d` (i < n) and `x_{n+i} <- g_i` on a
    /// polynomial over 2n variables, returning the collapsed polynomial in
    /// `g_0..g_{n-1}` (coefficients of colliding classes summed).
    pub fn collapse_substitution(&self, d: usize) -> Result<Polynomial> {
        if self.dim % 2 != 0 {
            return Err(Error::invalid(format!(
                "collapse_substitution needs an even ambient dimension, got {}",
                self.dim
            )));
        }
        if d == 0 {
            return Err(Error::invalid("collapse_substitution needs d >= 1"));
        }
        let n = self.dim / 2;
        let mut terms = Vec::with_capacity(self.terms.len());
        for (key, coeff) in &self.terms {
            let mut vars = Vec::with_capacity(key.degree() * d);
            for &v in key.vars() {
                if (v as usize) < n {
                    vars.extend(std::iter::repeat(v).take(d));
                } else {
                    vars.push(v - n as u32);
                }
            }
            terms.push((MonomialKey::new(vars), *coeff));
        }
        Polynomial::new(n, self.degree * d, terms)
    }
}

impl Serialize for Polynomial {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        PolyRepr {
            dim: self.dim,
            degree: self.degree,
            terms: self
                .terms
                .iter()
                .map(|(k, c)| TermRepr { vars: k.vars().to_vec(), coeff: *c })
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Polynomial {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = PolyRepr::deserialize(d)?;
        Polynomial::new(
            repr.dim,
            repr.degree,
            repr.terms.into_iter().map(|t| (MonomialKey::new(t.vars), t.coeff)),
        )
        .map_err(serde::de::Error::custom)
    }
}

/// `E[χ_S(G)·χ_T(G)]`: product over variables of `(m−1)!!` for the combined
/// multiplicity `m`, or 0 if any combined multiplicity is odd.
fn pair_moment(a: &MonomialKey, b: &MonomialKey) -> f64 {
    let mut product = 1.0;
    let (av, bv) = (a.vars(), b.vars());
    let (mut i, mut j) = (0, 0);
    while i < av.len() || j < bv.len() {
        let var = match (av.get(i), bv.get(j)) {
            (Some(&x), Some(&y)) => x.min(y),
            (Some(&x), None) => x,
            (None, Some(&y)) => y,
            (None, None) => unreachable!(),
        };
        let mut mult = 0usize;
        while i < av.len() && av[i] == var {
            i += 1;
            mult += 1;
        }
        while j < bv.len() && bv[j] == var {
            j += 1;
            mult += 1;
        }
        if mult % 2 == 1 {
            return 0.0;
        }
        product *= double_factorial_odd(mult);
    }
    product
}

/// `(k−1)!!` for even `k` (1 for k = 0).
fn double_factorial_odd(k: usize) -> f64 {
    debug_assert!(k % 2 == 0);
    let mut p = 1.0;
    let mut m = 1;
    while m < k {
        p *= m as f64;
        m += 2;
    }
    p
}

/// Binomial coefficient as a double (exact well past the desk-scale sizes used).
pub fn binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k.min(n));
    let mut value = 1.0;
    for i in 0..k {
        value = value * (n - i) as f64 / (i + 1) as f64;
    }
    value.round()
}

/// All monomial keys over `dim` variables with degree ≤ `d`, in
/// degree-ascending then lexicographic order (the constant key first).
/// This is the column order of the degree-`d` feature lift.
pub fn monomials_up_to(dim: usize, d: usize) -> Vec<MonomialKey> {
    let mut out = vec![MonomialKey::empty()];
    let mut current: Vec<Vec<u32>> = vec![Vec::new()];
    for _ in 0..d {
        let mut next = Vec::new();
        for stem in &current {
            let lo = stem.last().copied().unwrap_or(0);
            for v in lo..dim as u32 {
                let mut key = stem.clone();
                key.push(v);
                next.push(key);
            }
        }
        out.extend(next.iter().map(|v| MonomialKey(v.clone())));
        current = next;
    }
    out
}
