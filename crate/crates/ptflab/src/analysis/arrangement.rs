//! Exact max-agreement by arrangement enumeration.
//!
//! In the lifted feature space, hypotheses are linear functionals and the
//! achievable sign patterns are the faces of the central hyperplane
//! arrangement `{c : ⟨c, φ(yᵢ)⟩ = 0}`. Every face has a lexicographic
//! representative `ν₁ + ε·ν₂ + ε²·ν₃ + …` where `ν₁` spans a null line of
//! some (q−1)-subset of the points inside the essential span of the active
//! points and the deeper `ν`s resolve the points left tied: essential
//! central arrangements have pointed cells, pointed cones are generated by
//! extreme rays, and perturbing a ray into a face reaches its relative
//! interior. The enumeration recurses — pick a null line, branch on ±,
//! recurse on the tied points inside the line's orthogonal complement — and
//! also stops at every level, leaving the rest tied, which the
//! `sign(0) = +1` rule scores as +1 predictions.
//!
//! The search runs in `BigRational`: the inputs are doubles (exact
//! rationals), so orthogonalization, null lines, tie detection, and each
//! candidate's lexicographic score are exact. A candidate whose exact score
//! beats the incumbent is realized as `Σ νₗ·εˡ⁻¹` with a rational ε small
//! enough — `ε = m/(2(M+m+1))` for the min decisive margin `m` and max
//! level dot `M` — that every decisive sign survives, converted to doubles
//! (clearing denominators when the integers fit exactly), and re-scored
//! through the same evaluate-and-sign path `agreement` uses; candidates are
//! ranked by that verified double-precision score, so a face whose optimum
//! leans on an exact tie that doubles cannot express loses to an equally
//! good decisive face when one exists. The returned fraction is the
//! agreement of the returned polynomial, recomputed through
//! [`crate::analysis::agreement`].

use super::{agreement, lift};
use crate::gadgets::LabeledExample;
use crate::par;
use crate::poly::{binomial, sign, MonomialKey, Polynomial};
use crate::{Error, Result};
use itertools::Itertools;
use num::{BigInt, BigRational, One, Signed, ToPrimitive, Zero};
use std::collections::BTreeSet;

type Q = BigRational;

/// Per-worker guardrail on visited faces; the capacity gate keeps honest
/// inputs far below it.
const MAX_CANDIDATES: usize = 2_000_000;

fn rational(x: f64) -> Q {
    BigRational::from_float(x).expect("finite float")
}

fn dot_q(a: &[Q], b: &[Q]) -> Q {
    let mut acc = Q::zero();
    for (x, y) in a.iter().zip(b) {
        acc += x * y;
    }
    acc
}

/// Subtracts from `v` its projection onto `b` (not necessarily unit).
fn reject(v: &mut [Q], b: &[Q], b_norm2: &Q) {
    let c = dot_q(v, b) / b_norm2;
    for (vi, bi) in v.iter_mut().zip(b) {
        *vi -= &c * bi;
    }
}

/// Orthogonal (unnormalized) basis of the span of `vectors`; exact zero
/// residuals are dropped.
fn orthogonalize(vectors: impl IntoIterator<Item = Vec<Q>>) -> Vec<Vec<Q>> {
    let mut basis: Vec<(Vec<Q>, Q)> = Vec::new();
    for mut v in vectors {
        for (b, n2) in &basis {
            reject(&mut v, b, n2);
        }
        if v.iter().any(|x| !x.is_zero()) {
            let n2 = dot_q(&v, &v);
            basis.push((v, n2));
        }
    }
    basis.into_iter().map(|(b, _)| b).collect()
}

/// Projection of `phi` onto the span of the orthogonal basis `v_basis`.
fn project_into(phi: &[Q], v_basis: &[Vec<Q>]) -> Vec<Q> {
    let mut p = vec![Q::zero(); phi.len()];
    for b in v_basis {
        let c = dot_q(phi, b) / dot_q(b, b);
        for (pi, bi) in p.iter_mut().zip(b) {
            *pi += &c * bi;
        }
    }
    p
}

/// Scales `v` so its largest-magnitude entry (earliest among equals)
/// becomes exactly 1; fixes both the scale and the sign of a line.
fn canonicalize(mut v: Vec<Q>) -> Vec<Q> {
    let mut pivot: Option<Q> = None;
    for x in &v {
        let a = x.abs();
        if pivot.as_ref().map_or(true, |p| a > p.abs()) {
            pivot = Some(x.clone());
        }
    }
    if let Some(p) = pivot.filter(|p| !p.is_zero()) {
        for x in v.iter_mut() {
            *x /= &p;
        }
    }
    v
}

/// The line `V ∩ span{φᵢ : i ∈ subset}^⊥`, canonicalized, or `None` when the
/// subset's projections are rank-deficient (its lines appear via full-rank
/// subsets).
fn null_line(s: &Search, subset: &[usize], v_basis: &[Vec<Q>]) -> Option<Vec<Q>> {
    let w_basis = orthogonalize(subset.iter().map(|&i| project_into(&s.phis[i], v_basis)));
    if w_basis.len() + 1 != v_basis.len() {
        return None;
    }
    let w_norm2: Vec<Q> = w_basis.iter().map(|w| dot_q(w, w)).collect();
    v_basis
        .iter()
        .find_map(|b| {
            let mut r = b.clone();
            for (w, n2) in w_basis.iter().zip(&w_norm2) {
                reject(&mut r, w, n2);
            }
            r.iter().any(|x| !x.is_zero()).then_some(r)
        })
        .map(canonicalize)
}

/// Lexicographic score: the first level with a nonzero dot fixes each
/// point's sign; fully tied points predict +1.
fn lex_score(level_dots: &[Vec<Q>], labels: &[i8]) -> usize {
    labels
        .iter()
        .enumerate()
        .filter(|(i, &label)| {
            let s = level_dots
                .iter()
                .find_map(|d| {
                    (!d[*i].is_zero()).then(|| if d[*i].is_positive() { 1i8 } else { -1 })
                })
                .unwrap_or(1);
            s == label
        })
        .count()
}

struct Search<'a> {
    phis: &'a [Vec<Q>],
    labels: &'a [i8],
    monomials: &'a [MonomialKey],
    examples: &'a [LabeledExample],
    width: usize,
    dim: usize,
    degree: usize,
}

/// Realizes lex levels as one exact rational coefficient vector: with
/// `m = min |decisive dot|` and `M = max |dot|`, any `0 < ε ≤ m/(2(M+m+1))`
/// keeps every tail `Σ_{l>L} εˡ⁻ᴸ·dot` strictly below the level-`L` margin,
/// so the rational signs of `⟨c, φᵢ⟩` equal the lexicographic signs; fully
/// tied points stay exactly zero.
fn realize(levels: &[Vec<Q>], width: usize, phis: &[Vec<Q>]) -> Vec<Q> {
    let mut m: Option<Q> = None;
    let mut cap = Q::zero();
    for phi in phis {
        for nu in levels {
            let a = dot_q(phi, nu).abs();
            if a > cap {
                cap = a.clone();
            }
            if !a.is_zero() && m.as_ref().map_or(true, |best| a < *best) {
                m = Some(a);
            }
        }
    }
    let eps = match m {
        Some(m) => {
            let denom = (&cap + &m + Q::one()) * Q::from_integer(BigInt::from(2));
            m / denom
        }
        None => Q::new(BigInt::from(1), BigInt::from(2)),
    };
    let mut c = vec![Q::zero(); width];
    let mut w = Q::one();
    for nu in levels {
        for (ci, ni) in c.iter_mut().zip(nu) {
            *ci += &w * ni;
        }
        w *= &eps;
    }
    c
}

/// Converts the rational witness to doubles, clearing denominators first so
/// that integer-valued data evaluates exactly (ties stay ties).
fn to_doubles(c: &[Q]) -> Vec<f64> {
    let mut lcm = BigInt::one();
    for x in c {
        lcm = num::Integer::lcm(&lcm, x.denom());
    }
    let ints: Vec<BigInt> = c.iter().map(|x| x.numer() * (&lcm / x.denom())).collect();
    let fits = ints.iter().all(|v| v.abs() <= BigInt::from(1u64 << 53));
    if fits {
        ints.iter().map(|v| v.to_f64().unwrap_or(0.0)).collect()
    } else {
        c.iter().map(|x| x.to_f64().unwrap_or(0.0)).collect()
    }
}

/// Realizes the levels and re-scores the resulting double-precision
/// polynomial through the same evaluate-and-sign path `agreement` uses.
fn verified_score(s: &Search, levels: &[Vec<Q>]) -> Result<(usize, Polynomial)> {
    let c = realize(levels, s.width, s.phis);
    let coeffs = to_doubles(&c);
    let terms: Vec<_> = s
        .monomials
        .iter()
        .cloned()
        .zip(coeffs.iter().copied())
        .filter(|(_, v)| *v != 0.0)
        .collect();
    let p = Polynomial::new(s.dim, s.degree, terms)?;
    let mut matches = 0usize;
    for e in s.examples {
        if sign(p.evaluate(&e.y)?)?.value() == e.b {
            matches += 1;
        }
    }
    Ok((matches, p))
}

/// Mutable state of one depth-first walk: the current lex prefix, its
/// per-level dots against every point, a visited-face counter, and the best
/// (verified score, levels) seen so far.
struct Walk {
    prefix: Vec<Vec<Q>>,
    level_dots: Vec<Vec<Q>>,
    counter: usize,
    best: (usize, Vec<Vec<Q>>),
}

/// Depth-first over the faces reachable under the current prefix. A
/// candidate is verified only when its exact lexicographic score beats the
/// incumbent's verified score.
fn explore(s: &Search, act: &[usize], v_basis: &[Vec<Q>], w: &mut Walk) -> Result<()> {
    if w.counter >= MAX_CANDIDATES {
        return Err(Error::capacity(format!(
            "arrangement enumeration exceeded {MAX_CANDIDATES} candidates"
        )));
    }
    w.counter += 1;
    if lex_score(&w.level_dots, s.labels) > w.best.0 {
        let (verified, _) = verified_score(s, &w.prefix)?;
        if verified > w.best.0 {
            w.best = (verified, w.prefix.clone());
        }
    }

    let q = v_basis.len();
    if q == 0 || act.is_empty() {
        return Ok(());
    }
    let mut seen: BTreeSet<Vec<Q>> = BTreeSet::new();
    for subset in act.iter().copied().combinations(q - 1) {
        let Some(u) = null_line(s, &subset, v_basis) else { continue };
        if !seen.insert(u.clone()) {
            continue;
        }
        branch(s, act, v_basis, &u, w)?;
    }
    Ok(())
}

/// Pushes `±u` as the next lex level and recurses on the points it ties.
fn branch(s: &Search, act: &[usize], v_basis: &[Vec<Q>], u: &[Q], w: &mut Walk) -> Result<()> {
    for flip in [1i32, -1] {
        let su: Vec<Q> = if flip == 1 {
            u.to_vec()
        } else {
            u.iter().map(|x| -x).collect()
        };
        let dots: Vec<Q> = s.phis.iter().map(|p| dot_q(p, &su)).collect();
        let tied: Vec<usize> = act.iter().copied().filter(|&i| dots[i].is_zero()).collect();
        let su_norm2 = dot_q(&su, &su);
        let next_basis = orthogonalize(tied.iter().map(|&i| {
            let mut p = project_into(&s.phis[i], v_basis);
            reject(&mut p, &su, &su_norm2);
            p
        }));
        w.prefix.push(su);
        w.level_dots.push(dots);
        explore(s, &tied, &next_basis, w)?;
        w.level_dots.pop();
        w.prefix.pop();
    }
    Ok(())
}

/// Exact maximum agreement of a degree-`d` PTF over the example set, by
/// arrangement enumeration in rational arithmetic, together with a witness
/// attaining it. The returned fraction is the agreement of the returned
/// polynomial under the `sign(0) = +1` rule. Capacity gate:
/// `n^(D'+1) ≤ 1e8` with `D' = binom(dim+d, d)`.
pub fn max_agreement_exact(
    examples: &[LabeledExample],
    dim: usize,
    d: usize,
) -> Result<(f64, Polynomial)> {
    let width = binomial(dim + d, d);
    let n = examples.len() as f64;
    if !(n.powf(width + 1.0) <= 1e8) {
        return Err(Error::capacity(format!(
            "{} examples at lifted width {width}: n^(D'+1) exceeds 1e8",
            examples.len()
        )));
    }
    let lifted = lift(examples, dim, d)?;
    let phis: Vec<Vec<Q>> =
        lifted.rows.iter().map(|r| r.iter().map(|&x| rational(x)).collect()).collect();
    let search = Search {
        phis: &phis,
        labels: &lifted.labels,
        monomials: &lifted.monomials,
        examples,
        width: lifted.width(),
        dim,
        degree: d,
    };

    // root candidate: everything tied, every prediction +1
    let (root_verified, _) = verified_score(&search, &[])?;
    let mut best: (usize, Vec<Vec<Q>>) = (root_verified, Vec::new());

    let top_basis = orthogonalize(phis.iter().cloned());
    let act: Vec<usize> = (0..phis.len()).collect();
    let q = top_basis.len();
    if q > 0 {
        // parallel over top-level hyperplane subsets, exact merge by
        // (verified score desc, subset asc, DFS order asc)
        let subsets: Vec<Vec<usize>> = act.iter().copied().combinations(q - 1).collect();
        let per_subset: Vec<Result<Option<(usize, Vec<Vec<Q>>)>>> =
            par::indexed_batch_map(subsets.len(), |si| {
                let Some(u) = null_line(&search, &subsets[si], &top_basis) else {
                    return Ok(None);
                };
                let mut walk = Walk {
                    prefix: Vec::new(),
                    level_dots: Vec::new(),
                    counter: 0,
                    best: (0, Vec::new()),
                };
                branch(&search, &act, &top_basis, &u, &mut walk)?;
                Ok((walk.best.0 > 0).then_some(walk.best))
            });
        for r in per_subset {
            if let Some((score, levels)) = r? {
                if score > best.0 {
                    best = (score, levels);
                }
            }
        }
    }

    let (_, p) = verified_score(&search, &best.1)?;
    let fraction = agreement(&p, examples)?.agreement;
    Ok((fraction, p))
}
