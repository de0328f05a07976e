use serde::{Deserialize, Serialize};

use super::pair::{ConditionalPair, DOMINANCE_TOL};
use crate::chain::BinaryChannel;
use crate::error::{Error, Result};

/// Residual mass this small left over after pairing is treated as rounding.
const RESIDUAL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingPair {
    #[serde(with = "crate::numfmt::ext_real")]
    pub y0: f64,
    #[serde(with = "crate::numfmt::ext_real")]
    pub y1: f64,
    pub weight: f64,
}

/// Joint law of `(Y0, Y1)` in likelihood-ratio coordinates, where
/// `L = 0` corresponds to `A = pi0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coupling {
    pub depth: usize,
    pub pairs: Vec<CouplingPair>,
}

/// Couples the two laws of `pair` so that every pair of values either
/// coincides or straddles zero (`y1 <= 0 <= y0`).
///
/// The common part `min(w0, w1)` of each atom goes on the diagonal; what is
/// left of law 0 sits at `L >= 0` and what is left of law 1 at `L <= 0`, and
/// those residuals are matched in increasing order of value.
pub fn build_coupling(pair: &ConditionalPair, _c: &BinaryChannel) -> Result<Coupling> {
    pair.check_dominance(DOMINANCE_TOL)?;
    let mut pairs = Vec::new();
    let mut r0 = Vec::new();
    let mut r1 = Vec::new();
    let mut dropped = 0.0;
    for a in pair.atoms() {
        let diag = a.w0.min(a.w1);
        if diag > 0.0 {
            pairs.push(CouplingPair { y0: a.value, y1: a.value, weight: diag });
        }
        // Excess of law 0 below zero (or of law 1 above it) is rounding noise
        // within the dominance tolerance; it is left out of the coupling.
        if a.w0 > diag {
            if a.value >= 0.0 {
                r0.push((a.value, a.w0 - diag));
            } else {
                dropped += a.w0 - diag;
            }
        }
        if a.w1 > diag {
            if a.value <= 0.0 {
                r1.push((a.value, a.w1 - diag));
            } else {
                dropped += a.w1 - diag;
            }
        }
    }
    let (mut i, mut j) = (0, 0);
    while i < r0.len() && j < r1.len() {
        let m = r0[i].1.min(r1[j].1);
        pairs.push(CouplingPair { y0: r0[i].0, y1: r1[j].0, weight: m });
        r0[i].1 -= m;
        r1[j].1 -= m;
        if r0[i].1 <= 0.0 {
            i += 1;
        }
        if r1[j].1 <= 0.0 {
            j += 1;
        }
    }
    let left: f64 = r0[i..].iter().map(|r| r.1).sum::<f64>() + r1[j..].iter().map(|r| r.1).sum::<f64>();
    if left > RESIDUAL_TOL + dropped {
        return Err(Error::InvalidParameter(format!(
            "the two laws have unequal total mass (unmatched residual {left})"
        )));
    }
    Ok(Coupling { depth: pair.depth(), pairs })
}

fn marginal(pairs: impl Iterator<Item = (f64, f64)>) -> Vec<(f64, f64)> {
    let mut v: Vec<(f64, f64)> = pairs.collect();
    v.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(v.len());
    for (x, w) in v {
        match out.last_mut() {
            Some(last) if last.0 == x => last.1 += w,
            _ => out.push((x, w)),
        }
    }
    out
}

impl Coupling {
    /// Law of `Y0` as sorted `(value, weight)` pairs.
    pub fn marginal0(&self) -> Vec<(f64, f64)> {
        marginal(self.pairs.iter().map(|p| (p.y0, p.weight)))
    }

    /// Law of `Y1` as sorted `(value, weight)` pairs.
    pub fn marginal1(&self) -> Vec<(f64, f64)> {
        marginal(self.pairs.iter().map(|p| (p.y1, p.weight)))
    }

    /// Largest per-atom deviation of either marginal from the laws of `pair`.
    pub fn marginal_error(&self, pair: &ConditionalPair) -> f64 {
        let m0 = self.marginal0();
        let m1 = self.marginal1();
        let lookup = |m: &[(f64, f64)], x: f64| {
            m.binary_search_by(|p| p.0.total_cmp(&x)).map(|i| m[i].1).unwrap_or(0.0)
        };
        let mut err: f64 = 0.0;
        for a in pair.atoms() {
            err = err.max((lookup(&m0, a.value) - a.w0).abs());
            err = err.max((lookup(&m1, a.value) - a.w1).abs());
        }
        // Values present in a marginal but absent from the pair.
        for (x, w) in m0.iter().chain(m1.iter()) {
            if pair.atoms().binary_search_by(|a| a.value.total_cmp(x)).is_err() {
                err = err.max(*w);
            }
        }
        err
    }

    /// Pairs with positive weight that neither coincide nor straddle zero.
    pub fn crossing_violations(&self, tol: f64) -> Vec<CouplingPair> {
        self.pairs
            .iter()
            .filter(|p| p.weight > 0.0)
            .filter(|p| !(p.y0 == p.y1 || (p.y1 <= tol && p.y0 >= -tol)))
            .copied()
            .collect()
    }

    /// Total weight off the diagonal; equals the total variation distance.
    pub fn off_diagonal_mass(&self) -> f64 {
        self.pairs.iter().filter(|p| p.y0 != p.y1).map(|p| p.weight).sum()
    }

    /// `E(Y0 - Y1)`, `+inf` if an off-diagonal pair involves an infinity.
    pub fn expected_gap(&self) -> f64 {
        let mut s = 0.0;
        for p in self.pairs.iter().filter(|p| p.y0 != p.y1) {
            let d = p.y0 - p.y1;
            if !d.is_finite() {
                return f64::INFINITY;
            }
            s += p.weight * d;
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::pair::PairAtom;

    #[test]
    fn identical_laws_couple_on_the_diagonal() {
        let c = BinaryChannel::symmetric(0.5).unwrap();
        let pair = ConditionalPair::from_atoms(
            2,
            vec![PairAtom { value: 0.0, w0: 1.0, w1: 1.0 }],
        )
        .unwrap();
        let cp = build_coupling(&pair, &c).unwrap();
        assert_eq!(cp.pairs.len(), 1);
        assert_eq!(cp.expected_gap(), 0.0);
        assert_eq!(cp.off_diagonal_mass(), 0.0);
    }

    #[test]
    fn residuals_straddle_zero() {
        let c = BinaryChannel::symmetric(0.2).unwrap();
        let pair = ConditionalPair::from_atoms(
            1,
            vec![
                PairAtom { value: -1.0, w0: 0.1, w1: 0.3 },
                PairAtom { value: 0.5, w0: 0.4, w1: 0.5 },
                PairAtom { value: 2.0, w0: 0.5, w1: 0.2 },
            ],
        );
        // The middle atom violates dominance.
        let pair = pair.unwrap();
        assert!(build_coupling(&pair, &c).is_err());

        let pair = ConditionalPair::from_atoms(
            1,
            vec![
                PairAtom { value: -1.0, w0: 0.1, w1: 0.4 },
                PairAtom { value: -0.5, w0: 0.2, w1: 0.3 },
                PairAtom { value: 2.0, w0: 0.7, w1: 0.3 },
            ],
        )
        .unwrap();
        let cp = build_coupling(&pair, &c).unwrap();
        assert!(cp.crossing_violations(0.0).is_empty());
        assert!(cp.marginal_error(&pair) < 1e-15);
        assert!((cp.off_diagonal_mass() - 0.4).abs() < 1e-15);
    }
}
