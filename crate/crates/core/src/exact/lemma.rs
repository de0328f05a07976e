use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance for the sandwich inequality and the cell condition.
pub const LEMMA_TOL: f64 = 1e-12;

/// A probability space on outcomes `0..n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteSpace {
    pub probs: Vec<f64>,
}

impl FiniteSpace {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
            return Err(Error::InvalidParameter("outcome probabilities must be non-negative".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!("probabilities sum to {total}")));
        }
        Ok(Self { probs })
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }
}

/// The three sides of the sandwich and whether it holds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LemmaVerdict {
    #[serde(with = "crate::numfmt::ext_real")]
    pub lower: f64,
    pub middle: f64,
    #[serde(with = "crate::numfmt::ext_real")]
    pub upper: f64,
    pub holds: bool,
}

/// `p / (1 - p)` with `1 / 0 = inf`.
fn odds(p: f64) -> f64 {
    if p >= 1.0 {
        f64::INFINITY
    } else {
        p / (1.0 - p)
    }
}

/// Product with the measure-theoretic convention `inf * 0 = 0`.
fn mul0(a: f64, b: f64) -> f64 {
    if a == 0.0 || b == 0.0 {
        0.0
    } else {
        a * b
    }
}

/// Checks `(pi1/pi0) odds(p0) P(D|B^c) <= P(D|B) <= (pi1/pi0) odds(p1) P(D|B^c)`
/// where `pi0 = P(B)`.
///
/// `partition[i]` is the cell of outcome `i` and `d_cells` lists the cells
/// whose union is `D`. On every cell of `D` with positive probability the
/// conditional probability of `B` must lie in `[p0, p1]`.
pub fn verify_lemma(
    space: &FiniteSpace,
    b: &[bool],
    partition: &[usize],
    d_cells: &[usize],
    p0: f64,
    p1: f64,
) -> Result<LemmaVerdict> {
    let n = space.len();
    if b.len() != n || partition.len() != n {
        return Err(Error::InvalidParameter(
            "event and partition must label every outcome".into(),
        ));
    }
    if !(0.0 <= p0 && p0 <= p1 && p1 <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "need 0 <= p0 <= p1 <= 1, got p0 = {p0}, p1 = {p1}"
        )));
    }
    let pi0: f64 = (0..n).filter(|&i| b[i]).map(|i| space.probs[i]).sum();
    let pi1: f64 = (0..n).filter(|&i| !b[i]).map(|i| space.probs[i]).sum();
    if pi0 <= 0.0 || pi1 <= 0.0 {
        return Err(Error::DegenerateEvent(pi0));
    }
    let cells = partition.iter().copied().max().map_or(0, |m| m + 1);
    let mut cell_p = vec![0.0; cells];
    let mut cell_pb = vec![0.0; cells];
    for i in 0..n {
        cell_p[partition[i]] += space.probs[i];
        if b[i] {
            cell_pb[partition[i]] += space.probs[i];
        }
    }
    let mut in_d = vec![false; cells];
    for &cell in d_cells {
        if cell < cells {
            in_d[cell] = true;
        }
    }
    let (mut d_and_b, mut d_and_bc) = (0.0, 0.0);
    for cell in 0..cells {
        if !in_d[cell] || cell_p[cell] <= 0.0 {
            continue;
        }
        let cond = cell_pb[cell] / cell_p[cell];
        if cond < p0 - LEMMA_TOL || cond > p1 + LEMMA_TOL {
            return Err(Error::PreconditionViolation(format!(
                "P(B | cell {cell}) = {cond} is outside [{p0}, {p1}]"
            )));
        }
        d_and_b += cell_pb[cell];
        d_and_bc += cell_p[cell] - cell_pb[cell];
    }
    let middle = d_and_b / pi0;
    let given_bc = d_and_bc / pi1;
    let ratio = pi1 / pi0;
    let lower = mul0(ratio * odds(p0), given_bc);
    // p1 = 1 puts no constraint on P(D | B).
    let upper = if p1 >= 1.0 { f64::INFINITY } else { ratio * odds(p1) * given_bc };
    let holds = lower <= middle + LEMMA_TOL && middle <= upper + LEMMA_TOL;
    Ok(LemmaVerdict { lower, middle, upper, holds })
}
