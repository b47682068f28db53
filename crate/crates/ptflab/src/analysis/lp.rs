//! Feasibility LP for perfectly consistent degree-d PTFs.
//!
//! The strict system `sign(p(yᵢ)) = bᵢ` is normalized to `bᵢ·p(yᵢ) ≥ 1`
//! (the standard scaling argument: a strictly consistent p exists iff a
//! margin-1 p does) and solved by two-phase simplex with Bland's rule.
//! When every lifted feature is a modest integer the tableau runs over
//! `BigRational` and the answer is exact; otherwise it runs over f64 with a
//! 1e-9 pivot tolerance.

use super::{lift, LiftedDataset};
use crate::gadgets::LabeledExample;
use crate::poly::{binomial, Polynomial};
use crate::{Error, Result};
use num::{BigRational, Signed, ToPrimitive, Zero};

/// Outcome of [`lp_consistent`].
#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    /// A polynomial with `b·p(y) ≥ 1` on every input example.
    Feasible(Polynomial),
    /// Certificate flag: no degree-d PTF is consistent with the set.
    Infeasible,
}

const MAX_WIDTH: f64 = 5000.0;
const MAX_EXAMPLES: usize = 100_000;
const MAX_TABLEAU: usize = 50_000_000;
const MAX_PIVOTS: usize = 200_000;

trait LpNum:
    Clone
    + PartialOrd
    + std::ops::Add<Output = Self>
    + std::ops::Sub<Output = Self>
    + std::ops::Mul<Output = Self>
    + std::ops::Div<Output = Self>
{
    fn zero() -> Self;
    fn one() -> Self;
    fn from_exact(v: f64) -> Self;
    fn to_f64(&self) -> f64;
    /// Strictly positive beyond the backend's pivot tolerance.
    fn is_pos(&self) -> bool;
    fn is_neg(&self) -> bool;
}

impl LpNum for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_exact(v: f64) -> Self {
        v
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn is_pos(&self) -> bool {
        *self > 1e-9
    }
    fn is_neg(&self) -> bool {
        *self < -1e-9
    }
}

impl LpNum for BigRational {
    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        num::One::one()
    }
    fn from_exact(v: f64) -> Self {
        BigRational::from_float(v).expect("finite float")
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn is_pos(&self) -> bool {
        self.is_positive()
    }
    fn is_neg(&self) -> bool {
        self.is_negative()
    }
}

/// Dense simplex tableau in canonical form: basis columns are kept as an
/// identity, reduced costs recomputed from the cost vector each pivot.
struct Tableau<T> {
    rows: Vec<Vec<T>>, // n x (cols + 1); last entry is the RHS
    basis: Vec<usize>,
    cols: usize,
}

impl<T: LpNum> Tableau<T> {
    fn rhs(&self, i: usize) -> &T {
        &self.rows[i][self.cols]
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let piv = self.rows[row][col].clone();
        for x in self.rows[row].iter_mut() {
            *x = x.clone() / piv.clone();
        }
        for i in 0..self.rows.len() {
            if i == row {
                continue;
            }
            let factor = self.rows[i][col].clone();
            if factor == T::zero() {
                continue;
            }
            for j in 0..=self.cols {
                let delta = factor.clone() * self.rows[row][j].clone();
                self.rows[i][j] = self.rows[i][j].clone() - delta;
            }
        }
        self.basis[row] = col;
    }

    /// Minimizes `cost·x` from the current basis by Bland's rule. Returns
    /// false if the LP is unbounded below (cannot happen for our phases, but
    /// guarded anyway).
    fn minimize(&mut self, cost: &[T], live: &dyn Fn(usize) -> bool) -> Result<bool> {
        for _ in 0..MAX_PIVOTS {
            // reduced cost of column j: c_j - c_B · column_j
            let mut entering = None;
            'cols: for j in 0..self.cols {
                if !live(j) || self.basis.contains(&j) {
                    continue;
                }
                let mut red = cost[j].clone();
                for (i, &b) in self.basis.iter().enumerate() {
                    red = red - cost[b].clone() * self.rows[i][j].clone();
                }
                if red.is_neg() {
                    entering = Some(j);
                    break 'cols;
                }
            }
            let Some(col) = entering else { return Ok(true) };
            let mut leaving: Option<(usize, T)> = None;
            for i in 0..self.rows.len() {
                if !self.rows[i][col].is_pos() {
                    continue;
                }
                let ratio = self.rhs(i).clone() / self.rows[i][col].clone();
                let better = match &leaving {
                    None => true,
                    Some((r, best)) => {
                        ratio < *best || (!(ratio > *best) && self.basis[i] < self.basis[*r])
                    }
                };
                if better {
                    leaving = Some((i, ratio));
                }
            }
            let Some((row, _)) = leaving else { return Ok(false) };
            self.pivot(row, col);
        }
        Err(Error::invalid("simplex exceeded the pivot budget"))
    }
}

fn solve_margin_lp<T: LpNum>(lifted: &LiftedDataset) -> Result<Option<Vec<f64>>> {
    let n = lifted.len();
    let d = lifted.width();
    // columns: c+ (d) | c- (d) | slack (n) | artificial (n)
    let cols = 2 * d + 2 * n;
    let mut rows = Vec::with_capacity(n);
    for (row, &label) in lifted.rows.iter().zip(&lifted.labels) {
        let mut r = vec![T::zero(); cols + 1];
        for (j, &v) in row.iter().enumerate() {
            let signed = T::from_exact(label as f64 * v);
            r[j] = signed.clone();
            r[d + j] = T::zero() - signed;
        }
        r[cols] = T::one();
        rows.push(r);
    }
    for (i, r) in rows.iter_mut().enumerate() {
        r[2 * d + i] = T::zero() - T::one();
        r[2 * d + n + i] = T::one();
    }
    let basis: Vec<usize> = (0..n).map(|i| 2 * d + n + i).collect();
    let mut t = Tableau { rows, basis, cols };

    // phase 1: drive the artificials to zero
    let mut cost1 = vec![T::zero(); cols];
    for c in cost1.iter_mut().skip(2 * d + n) {
        *c = T::one();
    }
    if !t.minimize(&cost1, &|_| true)? {
        return Err(Error::invalid("phase-1 LP unbounded"));
    }
    let mut objective = T::zero();
    for (i, &b) in t.basis.iter().enumerate() {
        if b >= 2 * d + n {
            objective = objective + t.rhs(i).clone();
        }
    }
    if objective.is_pos() {
        return Ok(None);
    }
    // pivot lingering zero-value artificials out where possible
    for i in 0..t.rows.len() {
        if t.basis[i] < 2 * d + n {
            continue;
        }
        if let Some(j) = (0..2 * d + n).find(|&j| {
            let x = &t.rows[i][j];
            x.is_pos() || x.is_neg()
        }) {
            t.pivot(i, j);
        }
    }

    // phase 2: minimize the l1 norm of the coefficients, artificials frozen
    let mut cost2 = vec![T::zero(); cols];
    for c in cost2.iter_mut().take(2 * d) {
        *c = T::one();
    }
    let live = |j: usize| j < 2 * d + n;
    if !t.minimize(&cost2, &live)? {
        return Err(Error::invalid("phase-2 LP unbounded"));
    }

    let mut c = vec![T::zero(); d];
    for (i, &b) in t.basis.iter().enumerate() {
        if b < d {
            c[b] = c[b].clone() + t.rhs(i).clone();
        } else if b < 2 * d {
            c[b - d] = c[b - d].clone() - t.rhs(i).clone();
        }
    }
    Ok(Some(c.iter().map(LpNum::to_f64).collect()))
}

fn integral_and_small(lifted: &LiftedDataset) -> bool {
    lifted
        .rows
        .iter()
        .flatten()
        .all(|&v| v.fract() == 0.0 && v.abs() <= (1u64 << 30) as f64)
}

fn coefficients_to_poly(lifted: &LiftedDataset, coeffs: &[f64]) -> Result<Polynomial> {
    let terms: Vec<_> = lifted
        .monomials
        .iter()
        .cloned()
        .zip(coeffs.iter().copied())
        .filter(|(_, c)| *c != 0.0)
        .collect();
    Polynomial::new(lifted.dim, lifted.degree, terms)
}

/// Searches for a degree-`d` polynomial with `bᵢ·p(yᵢ) ≥ 1` for every
/// example. Capacity gates: `binom(dim+d, d) ≤ 5000`, at most 1e5 examples.
pub fn lp_consistent(examples: &[LabeledExample], dim: usize, d: usize) -> Result<LpOutcome> {
    let width = binomial(dim + d, d);
    if !(width <= MAX_WIDTH) {
        return Err(Error::capacity(format!(
            "lifted width binom({dim}+{d},{d}) = {width} exceeds {MAX_WIDTH}"
        )));
    }
    if examples.len() > MAX_EXAMPLES {
        return Err(Error::capacity(format!(
            "{} examples exceed the {MAX_EXAMPLES} cap",
            examples.len()
        )));
    }
    let lifted = lift(examples, dim, d)?;
    let n = lifted.len();
    let cells = n * (2 * lifted.width() + 2 * n + 1);
    if cells > MAX_TABLEAU {
        return Err(Error::capacity(format!(
            "simplex tableau would hold {cells} cells, cap is {MAX_TABLEAU}"
        )));
    }
    let coeffs = if integral_and_small(&lifted) {
        solve_margin_lp::<BigRational>(&lifted)?
    } else {
        solve_margin_lp::<f64>(&lifted)?
    };
    match coeffs {
        None => Ok(LpOutcome::Infeasible),
        Some(c) => {
            let p = coefficients_to_poly(&lifted, &c)?;
            // the margin is 1; re-check against float round-off
            for (row, &label) in lifted.rows.iter().zip(&lifted.labels) {
                let val: f64 = row.iter().zip(&c).map(|(a, b)| a * b).sum();
                if label as f64 * val < 1.0 - 1e-6 {
                    return Err(Error::NotFinite {
                        what: format!("LP solution lost its margin ({val})"),
                    });
                }
            }
            Ok(LpOutcome::Feasible(p))
        }
    }
}
