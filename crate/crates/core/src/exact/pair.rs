use serde::{Deserialize, Serialize};

use super::atomic::{Atom, AtomicDistribution, WEIGHT_SUM_TOL};
use crate::chain::{f_eval, BinaryChannel};
use crate::error::{Error, Result};
use crate::ext::{ln_prob, logistic};
use crate::numfmt::parse_ext;

/// Tolerance of the per-atom dominance comparison.
pub const DOMINANCE_TOL: f64 = 1e-10;

/// One support point of a [`ConditionalPair`] with its weight under each root
/// value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairAtom {
    #[serde(with = "crate::numfmt::ext_real")]
    pub value: f64,
    pub w0: f64,
    pub w1: f64,
}

/// Laws of the depth-`d` log-likelihood ratio `L` given root value 0 and 1,
/// stored on a common sorted support.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionalPair {
    depth: usize,
    atoms: Vec<PairAtom>,
}

/// `A = P(root = 0 | observation)` as a function of `L = ln(q0/q1)`.
pub fn a_of_l(x: f64, c: &BinaryChannel) -> f64 {
    let (pi0, pi1) = (c.pi0(), c.pi1());
    if pi1 == 0.0 {
        return 1.0;
    }
    if pi0 == 0.0 {
        return 0.0;
    }
    logistic(x + pi0.ln() - pi1.ln())
}

/// `A - pi0` as a function of `L`, accurate when `L` is tiny:
/// `pi0 pi1 (e^L - 1) / (pi0 e^L + pi1)`.
pub fn a_minus_pi0(x: f64, c: &BinaryChannel) -> f64 {
    let (pi0, pi1) = (c.pi0(), c.pi1());
    if pi0 == 0.0 || pi1 == 0.0 {
        return 0.0;
    }
    if x == f64::INFINITY {
        return pi1;
    }
    if x == f64::NEG_INFINITY {
        return -pi0;
    }
    if x > 0.0 {
        // Divide through by e^L to avoid overflow.
        pi0 * pi1 * (-(-x).exp_m1()) / (pi0 + pi1 * (-x).exp())
    } else {
        pi0 * pi1 * x.exp_m1() / (pi0 * x.exp() + pi1)
    }
}

/// Inverse of [`a_of_l`].
pub fn l_of_a(a: f64, c: &BinaryChannel) -> f64 {
    if a <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if a >= 1.0 {
        return f64::INFINITY;
    }
    let logit = a.ln() - (-a).ln_1p();
    logit - ln_prob(c.pi0()) + ln_prob(c.pi1())
}

impl ConditionalPair {
    /// Builds a pair from joint atoms, sorting and combining equal values and
    /// validating each law's total weight.
    pub fn from_atoms(depth: usize, atoms: Vec<PairAtom>) -> Result<Self> {
        let mut atoms: Vec<PairAtom> = atoms
            .into_iter()
            .filter(|a| a.w0 > 0.0 || a.w1 > 0.0)
            .collect();
        for a in &atoms {
            if a.value.is_nan() || a.w0 < 0.0 || a.w1 < 0.0 {
                return Err(Error::InvalidParameter(format!("bad pair atom {a:?}")));
            }
        }
        atoms.sort_by(|a, b| a.value.total_cmp(&b.value));
        let mut merged: Vec<PairAtom> = Vec::with_capacity(atoms.len());
        for a in atoms {
            match merged.last_mut() {
                Some(last) if last.value == a.value => {
                    last.w0 += a.w0;
                    last.w1 += a.w1;
                }
                _ => merged.push(a),
            }
        }
        let pair = Self { depth, atoms: merged };
        for (side, total) in [(0, pair.total0()), (1, pair.total1())] {
            if (total - 1.0).abs() > WEIGHT_SUM_TOL {
                return Err(Error::InvalidParameter(format!(
                    "law{side} has total weight {total}"
                )));
            }
        }
        Ok(pair)
    }

    /// Internal constructor for atom lists that are already sorted and merged.
    pub(crate) fn from_sorted_unchecked(depth: usize, atoms: Vec<PairAtom>) -> Self {
        Self { depth, atoms }
    }

    pub fn from_laws(depth: usize, law0: &AtomicDistribution, law1: &AtomicDistribution) -> Result<Self> {
        let atoms = law0
            .atoms()
            .iter()
            .map(|a| PairAtom { value: a.value, w0: a.weight, w1: 0.0 })
            .chain(
                law1.atoms()
                    .iter()
                    .map(|a| PairAtom { value: a.value, w0: 0.0, w1: a.weight }),
            )
            .collect();
        Self::from_atoms(depth, atoms)
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn atoms(&self) -> &[PairAtom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn total0(&self) -> f64 {
        self.atoms.iter().map(|a| a.w0).sum()
    }

    pub fn total1(&self) -> f64 {
        self.atoms.iter().map(|a| a.w1).sum()
    }

    fn law(&self, pick: impl Fn(&PairAtom) -> f64) -> AtomicDistribution {
        let atoms: Vec<Atom> = self
            .atoms
            .iter()
            .filter(|a| pick(a) > 0.0)
            .map(|a| Atom { value: a.value, weight: pick(a) })
            .collect();
        AtomicDistribution::new(atoms.clone())
            .or_else(|_| AtomicDistribution::from_weighted(atoms.iter().map(|a| (a.value, a.weight))))
            .expect("pair laws are valid distributions")
    }

    /// Law of `L` given root value 0.
    pub fn law0(&self) -> AtomicDistribution {
        self.law(|a| a.w0)
    }

    /// Law of `L` given root value 1.
    pub fn law1(&self) -> AtomicDistribution {
        self.law(|a| a.w1)
    }

    /// Checks per-atom dominance: `w0 <= w1` where `L < 0` and `w0 >= w1`
    /// where `L > 0`, returning the first violation.
    pub fn check_dominance(&self, tol: f64) -> Result<()> {
        for a in &self.atoms {
            let bad = (a.value < 0.0 && a.w0 > a.w1 + tol) || (a.value > 0.0 && a.w0 + tol < a.w1);
            if bad {
                return Err(Error::DominanceViolation { value: a.value, w0: a.w0, w1: a.w1 });
            }
        }
        Ok(())
    }

    /// Largest `|ln(w0/w1) - L|` over atoms carrying weight under both laws.
    /// Zero for exactly computed laws, where each atom's value is its own
    /// likelihood ratio.
    pub fn likelihood_consistency(&self) -> f64 {
        self.atoms
            .iter()
            .filter(|a| a.w0 > 0.0 && a.w1 > 0.0 && a.value.is_finite())
            .map(|a| ((a.w0.ln() - a.w1.ln()) - a.value).abs())
            .fold(0.0, f64::max)
    }

    /// Tagged text form: a `depth` line followed by `law0` and `law1`
    /// sections in the two-column atom format.
    pub fn to_text(&self) -> String {
        let mut s = format!("depth\t{}\n[law0]\n", self.depth);
        s.push_str(&self.law0().to_text());
        s.push_str("[law1]\n");
        s.push_str(&self.law1().to_text());
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut depth = None;
        let mut section = None;
        let mut atoms = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            match line {
                "[law0]" => section = Some(0),
                "[law1]" => section = Some(1),
                _ if line.starts_with("depth") => {
                    let d = line["depth".len()..].trim();
                    depth = Some(d.parse::<usize>().map_err(|_| {
                        Error::Parse(format!("line {}: bad depth {d:?}", n + 1))
                    })?);
                }
                _ => {
                    let side = section.ok_or_else(|| {
                        Error::Parse(format!("line {}: atom outside a law section", n + 1))
                    })?;
                    let mut cols = line.split_whitespace();
                    let (Some(v), Some(w), None) = (cols.next(), cols.next(), cols.next()) else {
                        return Err(Error::Parse(format!("line {}: expected two columns", n + 1)));
                    };
                    let value = parse_ext(v)
                        .ok_or_else(|| Error::Parse(format!("line {}: bad value {v:?}", n + 1)))?;
                    let weight = parse_ext(w)
                        .ok_or_else(|| Error::Parse(format!("line {}: bad weight {w:?}", n + 1)))?;
                    let (w0, w1) = if side == 0 { (weight, 0.0) } else { (0.0, weight) };
                    atoms.push(PairAtom { value, w0, w1 });
                }
            }
        }
        let depth = depth.ok_or_else(|| Error::Parse("missing depth line".into()))?;
        Self::from_atoms(depth, atoms)
    }
}

/// `E[L | root 0] - E[L | root 1]`, `+inf` when either law has mass at an
/// infinite value.
pub fn mean_gap(pair: &ConditionalPair) -> f64 {
    if pair.atoms.iter().any(|a| !a.value.is_finite()) {
        return f64::INFINITY;
    }
    pair.atoms.iter().map(|a| a.value * (a.w0 - a.w1)).sum()
}

/// Finite-depth diagnostics of a pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Total variation distance between the two conditional laws.
    pub tv: f64,
    #[serde(with = "crate::numfmt::ext_real")]
    pub mean_gap: f64,
    /// Variance of `A` under the stationary mixture.
    pub var_a: f64,
    /// Mean of `A` under the stationary mixture; equals `pi0`.
    pub mean_a: f64,
}

pub fn diagnostics(pair: &ConditionalPair, c: &BinaryChannel) -> Diagnostics {
    let (pi0, pi1) = (c.pi0(), c.pi1());
    let mut tv = 0.0;
    let mut var_a = 0.0;
    let mut mean_a = 0.0;
    for a in &pair.atoms {
        tv += (a.w0 - a.w1).abs();
        let m = pi0 * a.w0 + pi1 * a.w1;
        let dev = a_minus_pi0(a.value, c);
        mean_a += m * dev;
        var_a += m * dev * dev;
    }
    Diagnostics {
        tv: 0.5 * tv,
        mean_gap: mean_gap(pair),
        var_a,
        mean_a: pi0 + mean_a,
    }
}

/// Both sides of the depth-`d` mean-gap identity and their difference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdentityCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
}

/// Compares `E(L0 - L1)` at depth `d` with `k (E f(L0) - E f(L1))` at depth
/// `d - 1`.
pub fn finite_depth_identity_check(
    pair_d: &ConditionalPair,
    pair_dm1: &ConditionalPair,
    c: &BinaryChannel,
    k: u32,
) -> Result<IdentityCheck> {
    if pair_d.depth != pair_dm1.depth + 1 {
        return Err(Error::InvalidParameter(format!(
            "depths {} and {} are not consecutive",
            pair_dm1.depth, pair_d.depth
        )));
    }
    let mut ef = 0.0;
    for a in &pair_dm1.atoms {
        let f = f_eval(c, a.value)?;
        if a.w0 != a.w1 {
            ef += f * (a.w0 - a.w1);
        }
    }
    let lhs = mean_gap(pair_d);
    let rhs = k as f64 * ef;
    Ok(IdentityCheck { lhs, rhs, residual: (lhs - rhs).abs() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn a_and_l_are_inverse() {
        let c = BinaryChannel::new(0.7, 0.4).unwrap();
        assert!((a_of_l(0.0, &c) - c.pi0()).abs() < 1e-15);
        assert_eq!(a_of_l(f64::INFINITY, &c), 1.0);
        assert_eq!(a_of_l(f64::NEG_INFINITY, &c), 0.0);
        assert_eq!(l_of_a(1.0, &c), f64::INFINITY);
        assert_eq!(l_of_a(0.0, &c), f64::NEG_INFINITY);
        for x in [-40.0, -1.0, -1e-12, 0.0, 3e-14, 0.5, 30.0, f64::INFINITY] {
            let direct = a_of_l(x, &c) - c.pi0();
            assert!((a_minus_pi0(x, &c) - direct).abs() < 1e-15, "x = {x}");
        }
        let tiny = a_minus_pi0(1e-20, &c);
        assert!((tiny / (c.pi0() * c.pi1() * 1e-20) - 1.0).abs() < 1e-12);
        for i in 1..100 {
            let x = -12.0 + 0.24 * i as f64;
            assert!((l_of_a(a_of_l(x, &c), &c) - x).abs() < 1e-9);
        }
    }

    #[test]
    fn pair_text_round_trip() {
        let pair = ConditionalPair::from_atoms(
            3,
            vec![
                PairAtom { value: -0.5, w0: 0.25, w1: 0.75 },
                PairAtom { value: f64::INFINITY, w0: 0.75, w1: 0.0 },
                PairAtom { value: 0.5, w0: 0.0, w1: 0.25 },
            ],
        )
        .unwrap();
        let back = ConditionalPair::from_text(&pair.to_text()).unwrap();
        assert_eq!(back, pair);
        assert_eq!(back.depth(), 3);
        assert_eq!(back.law0().len(), 2);
    }

    #[test]
    fn dominance_detects_violation() {
        let pair = ConditionalPair::from_atoms(
            1,
            vec![
                PairAtom { value: -1.0, w0: 0.6, w1: 0.4 },
                PairAtom { value: 1.0, w0: 0.4, w1: 0.6 },
            ],
        )
        .unwrap();
        assert!(matches!(
            pair.check_dominance(DOMINANCE_TOL),
            Err(Error::DominanceViolation { .. })
        ));
    }

    #[test]
    fn mean_gap_is_infinite_with_infinite_atoms() {
        let pair = ConditionalPair::from_atoms(
            1,
            vec![
                PairAtom { value: 0.0, w0: 0.5, w1: 1.0 },
                PairAtom { value: f64::INFINITY, w0: 0.5, w1: 0.0 },
            ],
        )
        .unwrap();
        assert_eq!(mean_gap(&pair), f64::INFINITY);
    }
}
