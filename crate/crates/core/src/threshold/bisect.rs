use serde::{Deserialize, Serialize};

use super::decide::{decide_reconstruction, Decision, DecisionRule, Diagnostic, Engine, Verdict};
use super::family::ChannelFamily;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BisectConfig {
    pub lo: f64,
    pub hi: f64,
    /// Final bracket width, in `eps` for the symmetric family and in
    /// `ln lambda` for the hard-core family.
    pub tol: f64,
    pub depth: usize,
    pub engine: Engine,
    pub rule: DecisionRule,
    pub seed: u64,
    pub max_iter: usize,
}

impl BisectConfig {
    pub fn new(family: &ChannelFamily, depth: usize, engine: Engine, tol: f64, seed: u64) -> Result<Self> {
        let (lo, hi) = family.default_bracket()?;
        Ok(Self { lo, hi, tol, depth, engine, rule: DecisionRule::default(), seed, max_iter: 100 })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdEstimate {
    pub family: ChannelFamily,
    pub depth: usize,
    pub diagnostic: Diagnostic,
    pub rule: DecisionRule,
    pub engine: Engine,
    pub seed: u64,
    pub tol: f64,
    pub initial_bracket: (f64, f64),
    /// Final bracket `[lo, hi]` in parameter units.
    pub bracket: (f64, f64),
    pub estimate: f64,
    /// Hull of the final bracket and every inconclusive point.
    pub ambiguity_band: (f64, f64),
    /// Every evaluated point in order, endpoints first.
    pub history: Vec<Decision>,
}

/// Locates the threshold of `family` by bisection.
///
/// A midpoint that decays replaces the endpoint on the decaying side; a
/// persistent or inconclusive midpoint replaces the other endpoint, so the
/// bracket shrinks toward the decaying side and the final interval never
/// claims decay that was not observed. The same seed is used at every
/// point.
pub fn bisect_threshold(family: &ChannelFamily, cfg: &BisectConfig) -> Result<ThresholdEstimate> {
    if !(cfg.lo < cfg.hi) || !(cfg.tol > 0.0) {
        return Err(Error::BadBracket(format!(
            "need lo < hi and tol > 0, got [{}, {}] with tol {}",
            cfg.lo, cfg.hi, cfg.tol
        )));
    }
    let decide = |p: f64| decide_reconstruction(family, p, cfg.depth, cfg.engine, &cfg.rule, cfg.seed);
    // `dec` is the endpoint expected to decay, `per` the other one.
    let info_up = family.increasing_information();
    let (mut dec, mut per) = if info_up { (cfg.lo, cfg.hi) } else { (cfg.hi, cfg.lo) };
    let d_dec = decide(dec)?;
    let d_per = decide(per)?;
    let mut history = vec![d_dec.clone(), d_per.clone()];
    if d_dec.verdict != Verdict::Decaying || d_per.verdict == Verdict::Decaying {
        return Err(Error::BadBracket(format!(
            "endpoint verdicts {:?} at {} and {:?} at {} do not bracket a threshold",
            d_dec.verdict, dec, d_per.verdict, per
        )));
    }
    let mut band: Option<(f64, f64)> = None;
    let mut iter = 0;
    while (family.to_coord(dec) - family.to_coord(per)).abs() > cfg.tol {
        if iter == cfg.max_iter {
            return Err(Error::BadBracket(format!(
                "no convergence after {} iterations",
                cfg.max_iter
            )));
        }
        iter += 1;
        let mid = family.from_coord(0.5 * (family.to_coord(dec) + family.to_coord(per)));
        let d = decide(mid)?;
        check_monotone(&history, &d, info_up)?;
        match d.verdict {
            Verdict::Decaying => dec = mid,
            Verdict::Inconclusive => {
                band = Some(band.map_or((mid, mid), |(a, b)| (a.min(mid), b.max(mid))));
                per = mid;
            }
            Verdict::Persistent => per = mid,
        }
        history.push(d);
    }
    let (lo, hi) = if dec < per { (dec, per) } else { (per, dec) };
    let estimate = family.from_coord(0.5 * (family.to_coord(lo) + family.to_coord(hi)));
    let ambiguity_band = band.map_or((lo, hi), |(a, b)| (a.min(lo), b.max(hi)));
    Ok(ThresholdEstimate {
        family: *family,
        depth: cfg.depth,
        diagnostic: cfg.rule.diagnostic,
        rule: cfg.rule,
        engine: cfg.engine,
        seed: cfg.seed,
        tol: cfg.tol,
        initial_bracket: (cfg.lo, cfg.hi),
        bracket: (lo, hi),
        estimate,
        ambiguity_band,
        history,
    })
}

/// A decaying point must not be more informative than a persistent one.
fn check_monotone(history: &[Decision], new: &Decision, info_up: bool) -> Result<()> {
    let more_info = |a: f64, b: f64| if info_up { a > b } else { a < b };
    for old in history {
        let (decaying, persistent) = match (new.verdict, old.verdict) {
            (Verdict::Decaying, Verdict::Persistent) => (new, old),
            (Verdict::Persistent, Verdict::Decaying) => (old, new),
            _ => continue,
        };
        if more_info(decaying.param, persistent.param) {
            return Err(Error::MonotonicityViolation(format!(
                "decay at {} but persistence at the less informative {}",
                decaying.param, persistent.param
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn agreeing_endpoints_are_rejected() {
        let fam = ChannelFamily::symmetric(2);
        let cfg = BisectConfig {
            lo: 0.3,
            hi: 0.45,
            tol: 0.01,
            depth: 8,
            engine: Engine::Exact { bins: 200 },
            rule: DecisionRule::default(),
            seed: 1,
            max_iter: 50,
        };
        assert!(matches!(bisect_threshold(&fam, &cfg), Err(Error::BadBracket(_))));
        let cfg = BisectConfig { lo: 0.2, hi: 0.2, ..cfg };
        assert!(matches!(bisect_threshold(&fam, &cfg), Err(Error::BadBracket(_))));
    }
}
