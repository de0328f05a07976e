use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::rng::stream;
use crate::chain::BinaryChannel;
use crate::error::{Error, Result};
use crate::exact::{a_minus_pi0, ConditionalPair};
use crate::ext::add;
use crate::numfmt::{g17, parse_ext};

/// Smallest population accepted by [`population_evolve`].
pub const MIN_POPULATION: usize = 1000;

/// Number of blocks in the jackknife standard errors.
pub const JACKKNIFE_BLOCKS: usize = 50;

/// Sampled laws of `L` at one depth: `samples0` given root 0 and `samples1`
/// given root 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Population {
    pub depth: usize,
    /// Seed of the step that produced this population.
    pub seed: u64,
    pub channel: BinaryChannel,
    pub samples0: Vec<f64>,
    pub samples1: Vec<f64>,
}

fn draw(cdf: &[f64], values: &[f64], u: f64) -> f64 {
    let i = cdf.partition_point(|&c| c <= u).min(values.len() - 1);
    values[i]
}

impl Population {
    pub fn len(&self) -> usize {
        self.samples0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples0.is_empty()
    }

    /// Draws `n` i.i.d. samples from each law of `pair`.
    pub fn from_pair(pair: &ConditionalPair, c: &BinaryChannel, n: usize, seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("population size must be positive".into()));
        }
        let depth = pair.depth();
        let sample_side = |side: u64| -> Vec<f64> {
            let law = if side == 0 { pair.law0() } else { pair.law1() };
            let values: Vec<f64> = law.atoms().iter().map(|a| a.value).collect();
            let mut acc = 0.0;
            let cdf: Vec<f64> = law
                .atoms()
                .iter()
                .map(|a| {
                    acc += a.weight;
                    acc
                })
                .collect();
            let scale = acc;
            (0..n as u64)
                .into_par_iter()
                .map(|i| {
                    let mut rng = stream(seed, &[depth as u64, side, i]);
                    draw(&cdf, &values, rng.gen::<f64>() * scale)
                })
                .collect()
        };
        Ok(Self {
            depth,
            seed,
            channel: *c,
            samples0: sample_side(0),
            samples1: sample_side(1),
        })
    }

    pub fn to_text(&self) -> String {
        let c = &self.channel;
        let mut s = format!(
            "# population\nn\t{}\ndepth\t{}\nseed\t{}\nchannel\t{}\t{}\t{}\t{}\n",
            self.len(),
            self.depth,
            self.seed,
            g17(c.p00()),
            g17(c.p01()),
            g17(c.p10()),
            g17(c.p11())
        );
        for (name, side) in [("[samples0]", &self.samples0), ("[samples1]", &self.samples1)] {
            s.push_str(name);
            s.push('\n');
            for &x in side {
                s.push_str(&g17(x));
                s.push('\n');
            }
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let bad = |n: usize, what: &str| Error::Parse(format!("line {}: {what}", n + 1));
        let (mut n_decl, mut depth, mut seed, mut channel) = (None, None, None, None);
        let mut section: Option<usize> = None;
        let mut sides: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split_whitespace().collect();
            match cols[0] {
                "[samples0]" => section = Some(0),
                "[samples1]" => section = Some(1),
                "n" if cols.len() == 2 => {
                    n_decl = Some(cols[1].parse::<usize>().map_err(|_| bad(i, "bad n"))?)
                }
                "depth" if cols.len() == 2 => {
                    depth = Some(cols[1].parse::<usize>().map_err(|_| bad(i, "bad depth"))?)
                }
                "seed" if cols.len() == 2 => {
                    seed = Some(cols[1].parse::<u64>().map_err(|_| bad(i, "bad seed"))?)
                }
                "channel" if cols.len() == 5 => {
                    let p: Vec<f64> = cols[1..]
                        .iter()
                        .map(|s| parse_ext(s).ok_or_else(|| bad(i, "bad channel entry")))
                        .collect::<Result<_>>()?;
                    channel = Some(BinaryChannel::from_matrix(p[0], p[1], p[2], p[3])?);
                }
                _ => {
                    let side = section.ok_or_else(|| bad(i, "sample outside a section"))?;
                    sides[side].push(parse_ext(line).ok_or_else(|| bad(i, "bad sample"))?);
                }
            }
        }
        let n = n_decl.ok_or_else(|| Error::Parse("missing n".into()))?;
        if sides[0].len() != n || sides[1].len() != n {
            return Err(Error::Parse(format!("expected {n} samples per side")));
        }
        let [samples0, samples1] = sides;
        Ok(Self {
            depth: depth.ok_or_else(|| Error::Parse("missing depth".into()))?,
            seed: seed.ok_or_else(|| Error::Parse("missing seed".into()))?,
            channel: channel.ok_or_else(|| Error::Parse("missing channel".into()))?,
            samples0,
            samples1,
        })
    }
}

/// One step of population dynamics.
///
/// Each new sample given root `i` has `k` children; a child's value is drawn
/// from row `i` of the channel and its `L` uniformly from the matching
/// sample array, and the children's terms are summed. Sample `j` on side `i`
/// uses its own stream derived from `(seed, depth, i, j)`. Finally both
/// populations are shifted so that the mixture mean of `A` is `pi0`.
pub fn population_evolve(pop: &Population, c: &BinaryChannel, k: u32, seed: u64) -> Result<Population> {
    let n = pop.len();
    if n < MIN_POPULATION {
        return Err(Error::PreconditionViolation(format!(
            "population size {n} is below {MIN_POPULATION}"
        )));
    }
    if pop.samples1.len() != n {
        return Err(Error::InvalidParameter("sides have different sizes".into()));
    }
    if k == 0 {
        return Err(Error::InvalidParameter("k must be positive".into()));
    }
    let terms0: Vec<f64> = pop.samples0.iter().map(|&x| c.child_term(x)).collect::<Result<_>>()?;
    let terms1: Vec<f64> = pop.samples1.iter().map(|&x| c.child_term(x)).collect::<Result<_>>()?;
    let depth = pop.depth + 1;
    let side = |root: u8| -> Result<Vec<f64>> {
        let p_one = c.p(root, 1);
        (0..n as u64)
            .into_par_iter()
            .map(|j| {
                let mut rng = stream(seed, &[depth as u64, root as u64, j]);
                let mut l = 0.0;
                for _ in 0..k {
                    let terms = if rng.gen::<f64>() < p_one { &terms1 } else { &terms0 };
                    l = add(l, terms[rng.gen_range(0..n)])?;
                }
                Ok(l)
            })
            .collect()
    };
    let mut samples0 = side(0)?;
    let mut samples1 = side(1)?;
    recenter(&mut samples0, &mut samples1, c);
    Ok(Population { depth, seed, channel: *c, samples0, samples1 })
}

/// Plug-in diagnostics of a population with block-jackknife standard errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PopulationDiagnostics {
    pub tv: f64,
    pub tv_se: f64,
    #[serde(with = "crate::numfmt::ext_real")]
    pub mean_gap: f64,
    #[serde(with = "crate::numfmt::ext_real")]
    pub mean_gap_se: f64,
    /// Fraction of samples (both sides) at an infinite value.
    pub inf_fraction: f64,
    pub var_a: f64,
    pub var_a_se: f64,
    pub mean_a: f64,
}

/// Per-side sums that determine every estimator.
#[derive(Debug, Clone, Copy, Default)]
struct Sums {
    n: f64,
    abs_dev: f64,
    dev: f64,
    dev2: f64,
    l: f64,
    infinite: f64,
}

impl Sums {
    fn add(&mut self, o: &Sums) {
        self.n += o.n;
        self.abs_dev += o.abs_dev;
        self.dev += o.dev;
        self.dev2 += o.dev2;
        self.l += o.l;
        self.infinite += o.infinite;
    }

    fn sub(&self, o: &Sums) -> Sums {
        Sums {
            n: self.n - o.n,
            abs_dev: self.abs_dev - o.abs_dev,
            dev: self.dev - o.dev,
            dev2: self.dev2 - o.dev2,
            l: self.l - o.l,
            infinite: self.infinite - o.infinite,
        }
    }
}

fn block_sums(samples: &[f64], c: &BinaryChannel, blocks: usize) -> Vec<Sums> {
    let n = samples.len();
    let mut out = vec![Sums::default(); blocks];
    for (i, &x) in samples.iter().enumerate() {
        let b = &mut out[i * blocks / n];
        let dev = a_minus_pi0(x, c);
        b.n += 1.0;
        b.abs_dev += dev.abs();
        b.dev += dev;
        b.dev2 += dev * dev;
        if x.is_finite() {
            b.l += x;
        } else {
            b.infinite += 1.0;
        }
    }
    out
}

/// `(tv, mean_gap, var_a, mean_a)` from the two sides' sums.
///
/// With `A - pi0 = pi0 pi1 (w0 - w1)/(pi0 w0 + pi1 w1)` per value, the total
/// variation distance is `E|A - pi0| / (2 pi0 pi1)` under the mixture.
fn estimates(s0: &Sums, s1: &Sums, c: &BinaryChannel) -> [f64; 4] {
    let (pi0, pi1) = (c.pi0(), c.pi1());
    let mix = |f: fn(&Sums) -> f64| pi0 * f(s0) / s0.n + pi1 * f(s1) / s1.n;
    let tv = if pi0 > 0.0 && pi1 > 0.0 { mix(|s| s.abs_dev) / (2.0 * pi0 * pi1) } else { 0.0 };
    let mean_gap = if s0.infinite + s1.infinite > 0.0 {
        f64::INFINITY
    } else {
        s0.l / s0.n - s1.l / s1.n
    };
    let mean_dev = mix(|s| s.dev);
    let var_a = (mix(|s| s.dev2) - mean_dev * mean_dev).clamp(0.0, pi0 * pi1);
    [tv, mean_gap, var_a, pi0 + mean_dev]
}

/// Shifts every finite value by the common `delta` that restores the
/// martingale identity `E[A] = pi0` under the stationary mixture.
///
/// The identity holds for the true laws, but resampling noise excites a
/// common translation of both populations which the recursion amplifies by
/// about `k (p00 - p10)` per level; without this projection that mode
/// swamps the diagnostics whenever `k |p00 - p10| > 1`.
fn recenter(samples0: &mut [f64], samples1: &mut [f64], c: &BinaryChannel) {
    let (pi0, pi1) = (c.pi0(), c.pi1());
    if !(pi0 > 0.0 && pi1 > 0.0) {
        return;
    }
    let (n0, n1) = (samples0.len() as f64, samples1.len() as f64);
    let eval = |delta: f64, s0: &[f64], s1: &[f64]| -> (f64, f64) {
        let side = |s: &[f64]| {
            s.iter().fold((0.0, 0.0), |(f, df), &x| {
                let d = a_minus_pi0(x + delta, c);
                let a = pi0 + d;
                let slope = if x.is_finite() { a * (1.0 - a) } else { 0.0 };
                (f + d, df + slope)
            })
        };
        let (f0, d0) = side(s0);
        let (f1, d1) = side(s1);
        (pi0 * f0 / n0 + pi1 * f1 / n1, pi0 * d0 / n0 + pi1 * d1 / n1)
    };
    let mut delta = 0.0;
    let (mut f, mut df) = eval(delta, samples0, samples1);
    for _ in 0..60 {
        if f == 0.0 || !(df > 0.0) {
            break;
        }
        let mut step = -f / df;
        let mut accepted = false;
        for _ in 0..30 {
            let (nf, ndf) = eval(delta + step, samples0, samples1);
            if nf.abs() < f.abs() {
                delta += step;
                f = nf;
                df = ndf;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted || step.abs() <= 1e-16 * delta.abs() {
            break;
        }
    }
    if delta != 0.0 {
        for x in samples0.iter_mut().chain(samples1.iter_mut()) {
            *x += delta;
        }
    }
}

pub fn estimate_diagnostics(pop: &Population, c: &BinaryChannel) -> Result<PopulationDiagnostics> {
    let n = pop.len();
    if n == 0 || pop.samples1.len() != n {
        return Err(Error::InvalidParameter("empty or unbalanced population".into()));
    }
    let blocks = JACKKNIFE_BLOCKS.min(n);
    let b0 = block_sums(&pop.samples0, c, blocks);
    let b1 = block_sums(&pop.samples1, c, blocks);
    let (mut t0, mut t1) = (Sums::default(), Sums::default());
    for b in &b0 {
        t0.add(b);
    }
    for b in &b1 {
        t1.add(b);
    }
    let full = estimates(&t0, &t1, c);
    let mut se = [0.0f64; 4];
    if blocks > 1 {
        let leave_out: Vec<[f64; 4]> = (0..blocks)
            .map(|g| estimates(&t0.sub(&b0[g]), &t1.sub(&b1[g]), c))
            .collect();
        let g = blocks as f64;
        for q in 0..4 {
            let mean = leave_out.iter().map(|e| e[q]).sum::<f64>() / g;
            let ss: f64 = leave_out.iter().map(|e| (e[q] - mean).powi(2)).sum();
            se[q] = ((g - 1.0) / g * ss).sqrt();
        }
    }
    let inf_fraction = (t0.infinite + t1.infinite) / (2 * n) as f64;
    Ok(PopulationDiagnostics {
        tv: full[0],
        tv_se: se[0],
        mean_gap: full[1],
        mean_gap_se: if full[1].is_finite() { se[1] } else { f64::INFINITY },
        inf_fraction,
        var_a: full[2],
        var_a_se: se[2],
        mean_a: full[3],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::base_pair;

    #[test]
    fn uninformative_population_stays_zero() {
        let c = BinaryChannel::symmetric(0.5).unwrap();
        let mut pop = Population::from_pair(&base_pair(&c, 2).unwrap(), &c, 2000, 3).unwrap();
        for s in 0..3 {
            pop = population_evolve(&pop, &c, 2, s).unwrap();
        }
        assert!(pop.samples0.iter().chain(&pop.samples1).all(|&x| x == 0.0));
        let d = estimate_diagnostics(&pop, &c).unwrap();
        assert_eq!(d.mean_gap, 0.0);
        assert_eq!(d.tv, 0.0);
    }

    #[test]
    fn small_populations_are_rejected() {
        let c = BinaryChannel::symmetric(0.2).unwrap();
        let pop = Population::from_pair(&base_pair(&c, 2).unwrap(), &c, 999, 3).unwrap();
        assert!(matches!(
            population_evolve(&pop, &c, 2, 0),
            Err(Error::PreconditionViolation(_))
        ));
    }

    #[test]
    fn text_round_trip() {
        let c = BinaryChannel::new(0.8, 0.4).unwrap();
        let pop = Population::from_pair(&base_pair(&c, 3).unwrap(), &c, 1000, 11).unwrap();
        let back = Population::from_text(&pop.to_text()).unwrap();
        assert_eq!(back, pop);
    }

    #[test]
    fn infinite_mass_is_reported() {
        let (c, _) = crate::chain::hardcore_channel(1.0, 2).unwrap();
        let pop = Population::from_pair(&base_pair(&c, 2).unwrap(), &c, 4000, 5).unwrap();
        let d = estimate_diagnostics(&pop, &c).unwrap();
        assert_eq!(d.mean_gap, f64::INFINITY);
        assert!(d.inf_fraction > 0.0);
    }
}
