//! Decoding, agreement scoring, LP feasibility, and the exact max-agreement
//! oracle.
//!
//! Decoders read candidate labels out of polynomials: `decode_ug` applies the
//! `I_θ` machinery (θ = 0.5 on the u-block, θ = 1 on the v-block) and
//! `decode_lc` applies the linear-coefficient rules `I_v = {j | c_v^{(j)} >
//! Σᵢc_v^{(i)}/m²}` and `J_u = {j | c_u^{(j)} ≥ Σᵢc_u^{(i)}/k}`. Set-size
//! caps are recorded, not assumed: a decode from a polynomial that meets the
//! pass-probability hypothesis but blows a cap is a counterexample candidate,
//! and [`DecodedLabels::within_caps`] is how callers notice.

mod arrangement;
mod lp;

pub use arrangement::max_agreement_exact;
pub use lp::{lp_consistent, LpOutcome};

use crate::gadgets::LabeledExample;
use crate::par;
use crate::poly::{binomial, monomials_up_to, sign, MonomialKey, Polynomial};
use crate::reduction::{Labeling, LabelCoverInstance, UniqueGamesInstance};
use crate::{Error, Result};
use rand::RngExt;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

/// Examples lifted to the degree-`d` monomial feature space: row `i` is
/// `φ(y_i) = (χ_S(y_i))_{|S| ≤ d}` in [`monomials_up_to`] order.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftedDataset {
    pub dim: usize,
    pub degree: usize,
    pub monomials: Vec<MonomialKey>,
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<i8>,
}

impl LiftedDataset {
    pub fn width(&self) -> usize {
        self.monomials.len()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// Lifts examples into the degree-`d` feature space. Row width is
/// `binom(dim+d, d)`; every entry must come out finite.
pub fn lift(examples: &[LabeledExample], dim: usize, d: usize) -> Result<LiftedDataset> {
    if examples.is_empty() {
        return Err(Error::invalid("cannot lift an empty example set"));
    }
    if d == 0 {
        return Err(Error::invalid("lift degree must be >= 1"));
    }
    let monomials = monomials_up_to(dim, d);
    debug_assert_eq!(monomials.len() as f64, binomial(dim + d, d));
    let mut rows = Vec::with_capacity(examples.len());
    let mut labels = Vec::with_capacity(examples.len());
    for (i, ex) in examples.iter().enumerate() {
        if ex.y.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: ex.y.len() });
        }
        let mut row = Vec::with_capacity(monomials.len());
        for key in &monomials {
            let mut v = 1.0;
            for &var in key.vars() {
                v *= ex.y[var as usize];
            }
            if !v.is_finite() {
                return Err(Error::NotFinite {
                    what: format!("lifted feature {key} of example {i}"),
                });
            }
            row.push(v);
        }
        rows.push(row);
        labels.push(ex.b);
    }
    Ok(LiftedDataset { dim, degree: d, monomials, rows, labels })
}

/// Per-vertex candidate label sets plus the thresholds and caps used to
/// produce them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecodedLabels {
    /// Candidate labels per u-vertex (`S_u` / `J_u` style).
    pub u_sets: Vec<BTreeSet<u32>>,
    /// Candidate labels per v-vertex (`I_v` style).
    pub v_sets: Vec<BTreeSet<u32>>,
    /// u-side threshold: `θ` for `I_θ` decoding, `1/k` for the LC mean rule.
    pub u_threshold: f64,
    /// v-side threshold: `θ` for `I_θ` decoding, `1/m²` for the LC rule.
    pub v_threshold: f64,
    pub u_alphabet: usize,
    pub v_alphabet: usize,
    /// Documented size cap per u-set, when the source lemma states one.
    pub u_cap: Option<f64>,
    /// Documented size cap per v-set.
    pub v_cap: Option<f64>,
    /// Set when some side decoded to nothing (constant restriction or empty
    /// index set); nonemptiness is guaranteed only under the pass-probability
    /// hypothesis, so this is a flag rather than an error.
    pub flagged: bool,
}

impl DecodedLabels {
    /// True when every recorded cap is respected. A `false` from a
    /// hypothesis that met the pass-probability bound contradicts the
    /// soundness lemma and is worth reporting loudly.
    pub fn within_caps(&self) -> bool {
        let ok = |sets: &[BTreeSet<u32>], cap: Option<f64>| match cap {
            Some(c) => sets.iter().all(|s| s.len() as f64 <= c),
            None => true,
        };
        ok(&self.u_sets, self.u_cap) && ok(&self.v_sets, self.v_cap)
    }
}

fn index_set_or_empty(block: &Polynomial, theta: f64) -> Result<BTreeSet<u32>> {
    match block.index_set(theta) {
        Ok(set) => Ok(set.indices),
        Err(Error::Degenerate { .. }) => Ok(BTreeSet::new()),
        Err(e) => Err(e),
    }
}

/// Decodes a polynomial on one edge's `2k` coordinates: `I_{0.5}` of the
/// u-block restriction and `I_1` of the v-block restriction. `beta` is
/// recorded as the cap `1/β²` on both sides.
pub fn decode_ug(f: &Polynomial, beta: f64) -> Result<DecodedLabels> {
    if f.dim() % 2 != 0 {
        return Err(Error::invalid(format!(
            "decode_ug wants an even dimension (2k), got {}",
            f.dim()
        )));
    }
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::invalid(format!("beta must lie in (0, 1), got {beta}")));
    }
    let k = f.dim() / 2;
    let u_coords: Vec<u32> = (0..k as u32).collect();
    let v_coords: Vec<u32> = (k as u32..2 * k as u32).collect();
    let f_u = f.project_to_block(&u_coords)?;
    let f_v = f.project_to_block(&v_coords)?;
    let u_set = index_set_or_empty(&f_u, 0.5)?;
    let v_set = index_set_or_empty(&f_v, 1.0)?;
    let cap = 1.0 / (beta * beta);
    let flagged = u_set.is_empty() || v_set.is_empty();
    Ok(DecodedLabels {
        u_sets: vec![u_set],
        v_sets: vec![v_set],
        u_threshold: 0.5,
        v_threshold: 1.0,
        u_alphabet: k,
        v_alphabet: k,
        u_cap: Some(cap),
        v_cap: Some(cap),
        flagged,
    })
}

/// The labeling strategy of the UG soundness lemma applied vertex by vertex
/// over a whole instance: `I_{0.5}` of each u-block, `I_1` of each v-block.
pub fn decode_ug_instance(
    f: &Polynomial,
    inst: &UniqueGamesInstance,
    beta: f64,
) -> Result<DecodedLabels> {
    if f.dim() != inst.example_dimension() {
        return Err(Error::DimensionMismatch {
            expected: inst.example_dimension(),
            got: f.dim(),
        });
    }
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::invalid(format!("beta must lie in (0, 1), got {beta}")));
    }
    let k = inst.k();
    let mut u_sets = Vec::with_capacity(inst.nu());
    let mut v_sets = Vec::with_capacity(inst.nv());
    let mut flagged = false;
    for u in 0..inst.nu() {
        let coords: Vec<u32> = (0..k).map(|i| inst.coord_u(u, i) as u32).collect();
        let set = index_set_or_empty(&f.project_to_block(&coords)?, 0.5)?;
        flagged |= set.is_empty();
        u_sets.push(set);
    }
    for v in 0..inst.nv() {
        let coords: Vec<u32> = (0..k).map(|j| inst.coord_v(v, j) as u32).collect();
        let set = index_set_or_empty(&f.project_to_block(&coords)?, 1.0)?;
        flagged |= set.is_empty();
        v_sets.push(set);
    }
    let cap = 1.0 / (beta * beta);
    Ok(DecodedLabels {
        u_sets,
        v_sets,
        u_threshold: 0.5,
        v_threshold: 1.0,
        u_alphabet: k,
        v_alphabet: k,
        u_cap: Some(cap),
        v_cap: Some(cap),
        flagged,
    })
}

/// Decodes a folded polynomial over a Label Cover instance's coordinates via
/// the linear-coefficient rules: `J_u = {j | c_u^{(j)} ≥ Σᵢc_u^{(i)}/k}`
/// (never empty, since the max is at least the mean) and
/// `I_v = {j | c_v^{(j)} > Σᵢc_v^{(i)}/m²}` (strict; may be empty, handled
/// downstream by the random-label fallback).
pub fn decode_lc(p: &Polynomial, inst: &LabelCoverInstance) -> Result<DecodedLabels> {
    if p.dim() != inst.example_dimension() {
        return Err(Error::DimensionMismatch {
            expected: inst.example_dimension(),
            got: p.dim(),
        });
    }
    if p.max_term_degree() > 2 {
        return Err(Error::invalid("decode_lc expects degree <= 2"));
    }
    let k = inst.k();
    let m = inst.m();
    let coeff = |c: usize| p.coeff(&MonomialKey::new(vec![c as u32]));
    let mut u_sets = Vec::with_capacity(inst.nu());
    for u in 0..inst.nu() {
        let cs: Vec<f64> = (0..k).map(|j| coeff(inst.coord_u(u, j))).collect();
        let mean_bar: f64 = cs.iter().sum::<f64>() / k as f64;
        u_sets.push(
            cs.iter()
                .enumerate()
                .filter(|(_, &c)| c >= mean_bar)
                .map(|(j, _)| j as u32)
                .collect(),
        );
    }
    let mut v_sets = Vec::with_capacity(inst.nv());
    let mut flagged = false;
    for v in 0..inst.nv() {
        let cs: Vec<f64> = (0..m).map(|j| coeff(inst.coord_v(v, j))).collect();
        let bar: f64 = cs.iter().sum::<f64>() / (m * m) as f64;
        let set: BTreeSet<u32> = cs
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > bar)
            .map(|(j, _)| j as u32)
            .collect();
        flagged |= set.is_empty();
        v_sets.push(set);
    }
    let logm = (m as f64).log2();
    Ok(DecodedLabels {
        u_sets,
        v_sets,
        u_threshold: 1.0 / k as f64,
        v_threshold: 1.0 / (m * m) as f64,
        u_alphabet: k,
        v_alphabet: m,
        u_cap: None,
        v_cap: Some(logm * logm),
        flagged,
    })
}

fn pick_uniform(set: &BTreeSet<u32>, alphabet: usize, rng: &mut ChaCha8Rng) -> u32 {
    if set.is_empty() {
        rng.random_range(0..alphabet as u64) as u32
    } else {
        let idx = rng.random_range(0..set.len() as u64) as usize;
        *set.iter().nth(idx).unwrap()
    }
}

/// Independent uniform pick from each vertex's candidate set; an empty set
/// falls back to a uniform label over the whole alphabet.
pub fn randomized_labeling(decoded: &DecodedLabels, rng: &mut ChaCha8Rng) -> Labeling {
    Labeling {
        u_labels: decoded
            .u_sets
            .iter()
            .map(|s| pick_uniform(s, decoded.u_alphabet, rng))
            .collect(),
        v_labels: decoded
            .v_sets
            .iter()
            .map(|s| pick_uniform(s, decoded.v_alphabet, rng))
            .collect(),
    }
}

/// Agreement of one hypothesis against one example set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementReport {
    pub hypothesis: String,
    pub agreement: f64,
    pub examples: usize,
    pub provenance: serde_json::Value,
}

/// Fraction of examples with `sign(f(y)) = b`, counted in fixed batches and
/// merged exactly, so the parallel and sequential paths agree bitwise.
pub fn agreement(f: &Polynomial, examples: &[LabeledExample]) -> Result<AgreementReport> {
    if examples.is_empty() {
        return Err(Error::invalid("agreement over an empty example set"));
    }
    for ex in examples {
        if ex.y.len() != f.dim() {
            return Err(Error::DimensionMismatch { expected: f.dim(), got: ex.y.len() });
        }
    }
    let batches = par::batch_count(examples.len());
    let counts: Vec<Result<u64>> = par::indexed_batch_map(batches, |b| {
        let lo = b * par::BATCH;
        let hi = (lo + par::BATCH).min(examples.len());
        let mut matches = 0u64;
        for ex in &examples[lo..hi] {
            if sign(f.evaluate(&ex.y)?)? == ex.label_sign() {
                matches += 1;
            }
        }
        Ok(matches)
    });
    let mut total = 0u64;
    for c in counts {
        total += c?;
    }
    Ok(AgreementReport {
        hypothesis: String::new(),
        agreement: total as f64 / examples.len() as f64,
        examples: examples.len(),
        provenance: serde_json::Value::Null,
    })
}
