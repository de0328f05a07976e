use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::pair::{ConditionalPair, PairAtom};
use crate::chain::BinaryChannel;
use crate::error::{Error, Result};
use crate::ext::ln_prob;

/// Largest number of pairwise products materialised by a strict convolution.
pub const MAX_PRODUCTS: usize = 10_000_000;

/// Rows of the product table handled by one parallel task when binning.
const ROWS_PER_TASK: usize = 32;

/// How atoms are compressed onto a grid when a convolution would produce
/// more than `bins` products.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuantScheme {
    /// Each bin keeps the summed weights `W0`, `W1` and takes the value
    /// `ln(W0/W1)`. The result is the law of a coarsened observation, so it
    /// stays a valid pair of likelihood-ratio laws (dominance, coupling and
    /// the martingale mean survive) and can only lose information.
    LikelihoodConsistent,
    /// Each atom is split between the two neighbouring grid points so that
    /// both masses and both conditional means are preserved exactly.
    MeanPreserving,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Quantizer {
    pub bins: usize,
    pub scheme: QuantScheme,
}

/// Knobs of [`evolve`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PruningPolicy {
    /// Atoms whose values differ by at most this much are merged.
    pub merge_tol: f64,
    /// Atoms lighter than this under both laws are dropped; 0 disables.
    pub prune_floor: f64,
    /// Atom count above which evolution fails with `AtomExplosion`.
    pub max_atoms: usize,
    pub quantizer: Option<Quantizer>,
}

impl Default for PruningPolicy {
    fn default() -> Self {
        Self {
            merge_tol: 1e-12,
            prune_floor: 1e-15,
            max_atoms: 200_000,
            quantizer: None,
        }
    }
}

impl PruningPolicy {
    /// Exact evolution: merging of coincident values only, no pruning.
    pub fn no_pruning() -> Self {
        Self { prune_floor: 0.0, ..Self::default() }
    }

    /// Likelihood-consistent quantization onto about `bins` grid points.
    pub fn quantized(bins: usize) -> Self {
        Self {
            quantizer: Some(Quantizer { bins, scheme: QuantScheme::LikelihoodConsistent }),
            ..Self::default()
        }
    }

    /// Mean-preserving quantization onto about `bins` grid points, no pruning.
    pub fn mean_preserving(bins: usize) -> Self {
        Self {
            quantizer: Some(Quantizer { bins, scheme: QuantScheme::MeanPreserving }),
            ..Self::no_pruning()
        }
    }
}

/// Depth-1 pair: the `k` children are observed directly.
///
/// Configurations with the same number of ones share the same likelihood
/// ratio, so the law is a binomial over that count.
pub fn base_pair(c: &BinaryChannel, k: u32) -> Result<ConditionalPair> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be positive".into()));
    }
    let r0 = ln_prob(c.p00()) - ln_prob(c.p10());
    let r1 = ln_prob(c.p01()) - ln_prob(c.p11());
    let lp = [
        [ln_prob(c.p00()), ln_prob(c.p01())],
        [ln_prob(c.p10()), ln_prob(c.p11())],
    ];
    let weight = |root: usize, zeros: u32, ones: u32, ln_binom: f64| -> f64 {
        let mut s = ln_binom;
        if zeros > 0 {
            s += zeros as f64 * lp[root][0];
        }
        if ones > 0 {
            s += ones as f64 * lp[root][1];
        }
        s.exp()
    };
    let mut atoms = Vec::with_capacity(k as usize + 1);
    let mut ln_binom = 0.0;
    for j in 0..=k {
        if j > 0 {
            ln_binom += ((k - j + 1) as f64).ln() - (j as f64).ln();
        }
        let w0 = weight(0, k - j, j, ln_binom);
        let w1 = weight(1, k - j, j, ln_binom);
        if w0 == 0.0 && w1 == 0.0 {
            continue;
        }
        let mut value = 0.0;
        if j < k {
            value += (k - j) as f64 * r0;
        }
        if j > 0 {
            value += j as f64 * r1;
        }
        if value.is_nan() {
            return Err(Error::UndefinedLimit(format!(
                "likelihood ratio of a depth-1 configuration with {j} ones"
            )));
        }
        atoms.push(PairAtom { value, w0, w1 });
    }
    let mut pair = ConditionalPair::from_atoms(1, atoms)?;
    normalise(&mut pair);
    Ok(pair)
}

fn normalise(pair: &mut ConditionalPair) {
    let (t0, t1) = (pair.total0(), pair.total1());
    let atoms = pair
        .atoms()
        .iter()
        .map(|a| PairAtom { value: a.value, w0: a.w0 / t0, w1: a.w1 / t1 })
        .collect();
    *pair = ConditionalPair::from_sorted_unchecked(pair.depth(), atoms);
}

/// One step of density evolution: the pair at depth `d + 1` from the pair
/// at depth `d`.
pub fn evolve(
    pair: &ConditionalPair,
    c: &BinaryChannel,
    k: u32,
    policy: &PruningPolicy,
) -> Result<ConditionalPair> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be positive".into()));
    }
    c.require_finite_ratios()?;
    let pis = (c.pi0(), c.pi1());
    let mut child = Vec::with_capacity(pair.len());
    for a in pair.atoms() {
        let w0 = c.p00() * a.w0 + c.p01() * a.w1;
        let w1 = c.p10() * a.w0 + c.p11() * a.w1;
        if w0 == 0.0 && w1 == 0.0 {
            continue;
        }
        child.push(PairAtom { value: c.child_term(a.value)?, w0, w1 });
    }
    child.sort_by(|a, b| a.value.total_cmp(&b.value));
    let child = merge_sorted(child, policy.merge_tol);

    let mut acc = child.clone();
    for _ in 1..k {
        acc = convolve(&acc, &child, policy, pis)?;
        if acc.len() > policy.max_atoms {
            return Err(Error::AtomExplosion { count: acc.len(), cap: policy.max_atoms });
        }
    }
    if policy.prune_floor > 0.0 {
        acc.retain(|a| a.w0 >= policy.prune_floor || a.w1 >= policy.prune_floor);
    }
    if acc.len() > policy.max_atoms {
        return Err(Error::AtomExplosion { count: acc.len(), cap: policy.max_atoms });
    }
    let mut next = ConditionalPair::from_sorted_unchecked(pair.depth() + 1, acc);
    normalise(&mut next);
    Ok(next)
}

/// Runs density evolution from depth 1 to `depth`, returning every level.
pub fn evolve_to(
    c: &BinaryChannel,
    k: u32,
    depth: usize,
    policy: &PruningPolicy,
) -> Result<Vec<ConditionalPair>> {
    if depth == 0 {
        return Err(Error::InvalidParameter("depth must be at least 1".into()));
    }
    let mut out = vec![base_pair(c, k)?];
    while out.len() < depth {
        let next = evolve(out.last().expect("non-empty"), c, k, policy)?;
        out.push(next);
    }
    Ok(out)
}

fn sum_values(x: f64, y: f64) -> Option<f64> {
    let s = x + y;
    if s.is_nan() {
        None
    } else {
        Some(s)
    }
}

fn product(a: &PairAtom, b: &PairAtom) -> Result<Option<PairAtom>> {
    let w0 = a.w0 * b.w0;
    let w1 = a.w1 * b.w1;
    if w0 == 0.0 && w1 == 0.0 {
        return Ok(None);
    }
    match sum_values(a.value, b.value) {
        Some(value) => Ok(Some(PairAtom { value, w0, w1 })),
        None => Err(Error::UndefinedLimit(format!(
            "{} + {} carries positive weight",
            a.value, b.value
        ))),
    }
}

fn convolve(
    a: &[PairAtom],
    b: &[PairAtom],
    policy: &PruningPolicy,
    pis: (f64, f64),
) -> Result<Vec<PairAtom>> {
    let count = a.len().saturating_mul(b.len());
    if let Some(q) = policy.quantizer {
        if count > q.bins {
            return quantized_convolve(a, b, q, pis, policy.merge_tol);
        }
    }
    if count > MAX_PRODUCTS {
        return Err(Error::AtomExplosion { count, cap: policy.max_atoms });
    }
    let mut out = Vec::with_capacity(count);
    for x in a {
        for y in b {
            if let Some(p) = product(x, y)? {
                out.push(p);
            }
        }
    }
    out.par_sort_by(|p, q| p.value.total_cmp(&q.value));
    Ok(merge_sorted(out, policy.merge_tol))
}

/// Merges runs of sorted atoms whose values lie within `tol` of the first
/// atom of the run; the merged value is the mean weighted by `w0 + w1`.
fn merge_sorted(atoms: Vec<PairAtom>, tol: f64) -> Vec<PairAtom> {
    let mut out: Vec<PairAtom> = Vec::with_capacity(atoms.len());
    let mut start = f64::NAN;
    let mut moment = 0.0;
    for a in atoms {
        if let Some(last) = out.last_mut() {
            let same = if a.value.is_finite() {
                start.is_finite() && a.value - start <= tol
            } else {
                a.value == start
            };
            if same {
                if a.value.is_finite() {
                    moment += (a.w0 + a.w1) * a.value;
                    let mass = last.w0 + last.w1 + a.w0 + a.w1;
                    last.value = moment / mass;
                }
                last.w0 += a.w0;
                last.w1 += a.w1;
                continue;
            }
        }
        start = a.value;
        moment = if a.value.is_finite() { (a.w0 + a.w1) * a.value } else { 0.0 };
        out.push(a);
    }
    out
}

#[derive(Clone)]
struct Bins {
    w0: Vec<f64>,
    w1: Vec<f64>,
    moment: Vec<f64>,
    pos: (f64, f64),
    neg: (f64, f64),
}

impl Bins {
    fn new(n: usize) -> Self {
        Self {
            w0: vec![0.0; n],
            w1: vec![0.0; n],
            moment: vec![0.0; n],
            pos: (0.0, 0.0),
            neg: (0.0, 0.0),
        }
    }

    fn absorb(&mut self, other: &Bins) {
        for i in 0..self.w0.len() {
            self.w0[i] += other.w0[i];
            self.w1[i] += other.w1[i];
            self.moment[i] += other.moment[i];
        }
        self.pos.0 += other.pos.0;
        self.pos.1 += other.pos.1;
        self.neg.0 += other.neg.0;
        self.neg.1 += other.neg.1;
    }
}

/// Grid `s sinh(j h)`, `j = -half..=half`: fine near zero, where the laws
/// concentrate close to non-reconstruction, and geometric in the tails.
struct Grid {
    s: f64,
    h: f64,
    half: i64,
}

impl Grid {
    fn point(&self, j: i64) -> f64 {
        self.s * (j as f64 * self.h).sinh()
    }

    fn coordinate(&self, v: f64) -> f64 {
        (v / self.s).asinh() / self.h
    }
}

fn quantized_convolve(
    a: &[PairAtom],
    b: &[PairAtom],
    q: Quantizer,
    pis: (f64, f64),
    merge_tol: f64,
) -> Result<Vec<PairAtom>> {
    // First pass: spread of the finite products under the stationary mixture.
    let stats: Vec<[f64; 4]> = a
        .par_chunks(ROWS_PER_TASK)
        .map(|rows| {
            let mut s = [0.0f64; 4];
            for x in rows {
                for y in b {
                    let w0 = x.w0 * y.w0;
                    let w1 = x.w1 * y.w1;
                    let v = x.value + y.value;
                    if !v.is_finite() || (w0 == 0.0 && w1 == 0.0) {
                        continue;
                    }
                    let m = pis.0 * w0 + pis.1 * w1;
                    s[0] += m;
                    s[1] += m * v;
                    s[2] += m * v * v;
                    s[3] = s[3].max(v.abs());
                }
            }
            s
        })
        .collect();
    let mut tot = [0.0f64; 4];
    for s in &stats {
        tot[0] += s[0];
        tot[1] += s[1];
        tot[2] += s[2];
        tot[3] = tot[3].max(s[3]);
    }
    let range = tot[3];
    let half = (q.bins / 2).max(1) as i64;
    let grid = if range > 0.0 && tot[0] > 0.0 {
        let mean = tot[1] / tot[0];
        let var = (tot[2] / tot[0] - mean * mean).max(0.0);
        let s = var.sqrt().max(range * 1e-12).max(f64::MIN_POSITIVE);
        Some(Grid { s, h: (range / s).asinh() / half as f64, half })
    } else {
        None
    };
    let nbins = (2 * half + 1) as usize;

    let partials: Vec<Result<Bins>> = a
        .par_chunks(ROWS_PER_TASK)
        .map(|rows| {
            let mut bins = Bins::new(nbins);
            for x in rows {
                for y in b {
                    let Some(p) = product(x, y)? else { continue };
                    if p.value == f64::INFINITY {
                        bins.pos.0 += p.w0;
                        bins.pos.1 += p.w1;
                        continue;
                    }
                    if p.value == f64::NEG_INFINITY {
                        bins.neg.0 += p.w0;
                        bins.neg.1 += p.w1;
                        continue;
                    }
                    let Some(g) = &grid else {
                        let i = half as usize;
                        bins.w0[i] += p.w0;
                        bins.w1[i] += p.w1;
                        continue;
                    };
                    let u = g.coordinate(p.value);
                    match q.scheme {
                        QuantScheme::LikelihoodConsistent => {
                            let j = u.round().clamp(-g.half as f64, g.half as f64) as i64;
                            let i = (j + g.half) as usize;
                            bins.w0[i] += p.w0;
                            bins.w1[i] += p.w1;
                            bins.moment[i] += (p.w0 + p.w1) * p.value;
                        }
                        QuantScheme::MeanPreserving => {
                            let j0 = (u.floor() as i64).clamp(-g.half, g.half - 1);
                            let (g0, g1) = (g.point(j0), g.point(j0 + 1));
                            let theta = ((p.value - g0) / (g1 - g0)).clamp(0.0, 1.0);
                            let i = (j0 + g.half) as usize;
                            bins.w0[i] += (1.0 - theta) * p.w0;
                            bins.w1[i] += (1.0 - theta) * p.w1;
                            bins.w0[i + 1] += theta * p.w0;
                            bins.w1[i + 1] += theta * p.w1;
                        }
                    }
                }
            }
            Ok(bins)
        })
        .collect();
    let mut total = Bins::new(nbins);
    for p in partials {
        total.absorb(&p?);
    }

    let mut out = Vec::with_capacity(nbins + 2);
    if total.neg.0 > 0.0 || total.neg.1 > 0.0 {
        out.push(PairAtom { value: f64::NEG_INFINITY, w0: total.neg.0, w1: total.neg.1 });
    }
    for i in 0..nbins {
        let (w0, w1) = (total.w0[i], total.w1[i]);
        if w0 == 0.0 && w1 == 0.0 {
            continue;
        }
        let value = match (&grid, q.scheme) {
            (None, _) => 0.0,
            (Some(g), QuantScheme::MeanPreserving) => g.point(i as i64 - g.half),
            (Some(_), QuantScheme::LikelihoodConsistent) => {
                if w0 > 0.0 && w1 > 0.0 {
                    w0.ln() - w1.ln()
                } else {
                    total.moment[i] / (w0 + w1)
                }
            }
        };
        out.push(PairAtom { value, w0, w1 });
    }
    if total.pos.0 > 0.0 || total.pos.1 > 0.0 {
        out.push(PairAtom { value: f64::INFINITY, w0: total.pos.0, w1: total.pos.1 });
    }
    // Bin values are monotone in the bin index; the sort only guards against
    // rounding at bin edges.
    out.sort_by(|p, q| p.value.total_cmp(&q.value));
    Ok(merge_sorted(out, merge_tol))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::hardcore_channel;
    use crate::exact::pair::mean_gap;

    #[test]
    fn base_pair_symmetric_k1() {
        let eps = 0.2;
        let c = BinaryChannel::symmetric(eps).unwrap();
        let pair = base_pair(&c, 1).unwrap();
        let law0 = pair.law0();
        let hi = ((1.0 - eps) / eps).ln();
        assert_eq!(law0.len(), 2);
        assert!((law0.atoms()[1].value - hi).abs() < 1e-15);
        assert!((law0.atoms()[1].weight - (1.0 - eps)).abs() < 1e-15);
        assert!((law0.atoms()[0].value + hi).abs() < 1e-15);
        assert!((law0.atoms()[0].weight - eps).abs() < 1e-15);
    }

    #[test]
    fn base_pair_hardcore_root_one() {
        let (c, _) = hardcore_channel(1.0, 1).unwrap();
        let pair = base_pair(&c, 1).unwrap();
        let law1 = pair.law1();
        assert_eq!(law1.len(), 1);
        assert!((law1.atoms()[0].value - 0.5f64.ln()).abs() < 1e-15);
        assert_eq!(pair.law0().atoms().last().unwrap().value, f64::INFINITY);
    }

    #[test]
    fn uninformative_channel_is_a_fixed_point() {
        let c = BinaryChannel::symmetric(0.5).unwrap();
        let levels = evolve_to(&c, 3, 5, &PruningPolicy::default()).unwrap();
        for p in levels {
            assert_eq!(p.len(), 1);
            assert_eq!(p.atoms()[0].value, 0.0);
        }
    }

    #[test]
    fn equal_second_column_gives_point_mass() {
        let c = BinaryChannel::new(0.3, 0.3).unwrap();
        let levels = evolve_to(&c, 2, 3, &PruningPolicy::default()).unwrap();
        assert_eq!(levels[1].len(), 1);
        assert_eq!(mean_gap(&levels[2]), 0.0);
    }

    #[test]
    fn strict_convolution_refuses_huge_products() {
        let c = BinaryChannel::new(0.71, 0.23).unwrap();
        let policy = PruningPolicy { max_atoms: 50, ..PruningPolicy::no_pruning() };
        let err = evolve_to(&c, 3, 3, &policy).unwrap_err();
        assert!(matches!(err, Error::AtomExplosion { .. }));
    }

    #[test]
    fn quantized_evolution_keeps_weights() {
        let c = BinaryChannel::symmetric(0.2).unwrap();
        for policy in [PruningPolicy::quantized(64), PruningPolicy::mean_preserving(64)] {
            let levels = evolve_to(&c, 3, 5, &policy).unwrap();
            let last = levels.last().unwrap();
            assert!(last.len() <= 67);
            assert!((last.total0() - 1.0).abs() < 1e-12);
            assert!((last.total1() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn quantization_is_deterministic() {
        let c = BinaryChannel::new(0.8, 0.35).unwrap();
        let p = PruningPolicy::quantized(200);
        let a = evolve_to(&c, 3, 6, &p).unwrap();
        let b = evolve_to(&c, 3, 6, &p).unwrap();
        assert_eq!(a, b);
    }
}
