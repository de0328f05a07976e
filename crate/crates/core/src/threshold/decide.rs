use serde::{Deserialize, Serialize};

use super::family::ChannelFamily;
use crate::error::{Error, Result};
use crate::exact::{base_pair, diagnostics, evolve, PruningPolicy};
use crate::montecarlo::rng::derive_seed;
use crate::montecarlo::{estimate_diagnostics, population_evolve, Population};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Engine {
    /// Density evolution on atoms; `bins = 0` is strict, otherwise
    /// likelihood-consistent quantization onto about `bins` points.
    Exact { bins: usize },
    Population { n: usize },
}

impl Engine {
    pub fn policy(bins: usize) -> PruningPolicy {
        if bins == 0 {
            PruningPolicy::default()
        } else {
            PruningPolicy::quantized(bins)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Diagnostic {
    Tv,
    VarA,
    MeanGap,
}

/// Diagnostic values at depths `1..=d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub depth: Vec<usize>,
    pub tv: Vec<f64>,
    #[serde(with = "ext_vec")]
    pub mean_gap: Vec<f64>,
    pub var_a: Vec<f64>,
    /// Standard errors, population engine only.
    pub tv_se: Option<Vec<f64>>,
    #[serde(with = "ext_opt_vec")]
    pub mean_gap_se: Option<Vec<f64>>,
    pub var_a_se: Option<Vec<f64>>,
}

mod ext_vec {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    struct E(#[serde(with = "crate::numfmt::ext_real")] f64);

    pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
        v.iter().map(|&x| E(x)).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        Ok(Vec::<E>::deserialize(d)?.into_iter().map(|e| e.0).collect())
    }
}

mod ext_opt_vec {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<Vec<f64>>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(v) => super::ext_vec::serialize(v, s),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Vec<f64>>, D::Error> {
        #[derive(Deserialize)]
        struct W(#[serde(with = "super::ext_vec")] Vec<f64>);
        Ok(Option::<W>::deserialize(d)?.map(|w| w.0))
    }
}

impl Curve {
    pub fn values(&self, diagnostic: Diagnostic) -> &[f64] {
        match diagnostic {
            Diagnostic::Tv => &self.tv,
            Diagnostic::VarA => &self.var_a,
            Diagnostic::MeanGap => &self.mean_gap,
        }
    }
}

/// Diagnostic curve of the channel at `param` from depth 1 to `depth`.
pub fn diagnostic_curve(
    family: &ChannelFamily,
    param: f64,
    depth: usize,
    engine: Engine,
    seed: u64,
) -> Result<Curve> {
    let c = family.channel(param)?;
    curve_for_channel(&c, family.k, depth, engine, seed)
}

pub fn curve_for_channel(
    c: &crate::chain::BinaryChannel,
    k: u32,
    depth: usize,
    engine: Engine,
    seed: u64,
) -> Result<Curve> {
    if depth == 0 {
        return Err(Error::InvalidParameter("depth must be at least 1".into()));
    }
    let base = base_pair(c, k)?;
    let mut curve = Curve {
        depth: Vec::new(),
        tv: Vec::new(),
        mean_gap: Vec::new(),
        var_a: Vec::new(),
        tv_se: None,
        mean_gap_se: None,
        var_a_se: None,
    };
    match engine {
        Engine::Exact { bins } => {
            let policy = Engine::policy(bins);
            let mut pair = base;
            loop {
                let d = diagnostics(&pair, c);
                curve.depth.push(pair.depth());
                curve.tv.push(d.tv);
                curve.mean_gap.push(d.mean_gap);
                curve.var_a.push(d.var_a);
                if pair.depth() >= depth {
                    break;
                }
                pair = evolve(&pair, c, k, &policy)?;
            }
        }
        Engine::Population { n } => {
            let (mut tv_se, mut gap_se, mut var_se) = (Vec::new(), Vec::new(), Vec::new());
            let mut pop = Population::from_pair(&base, c, n, derive_seed(seed, &[0]))?;
            loop {
                let d = estimate_diagnostics(&pop, c)?;
                curve.depth.push(pop.depth);
                curve.tv.push(d.tv);
                curve.mean_gap.push(d.mean_gap);
                curve.var_a.push(d.var_a);
                tv_se.push(d.tv_se);
                gap_se.push(d.mean_gap_se);
                var_se.push(d.var_a_se);
                if pop.depth >= depth {
                    break;
                }
                pop = population_evolve(&pop, c, k, derive_seed(seed, &[pop.depth as u64]))?;
            }
            curve.tv_se = Some(tv_se);
            curve.mean_gap_se = Some(gap_se);
            curve.var_a_se = Some(var_se);
        }
    }
    Ok(curve)
}

/// Least-squares geometric rate `exp(slope)` of `ln(value)` against depth.
///
/// Non-positive values are skipped; if the last value is 0 the sequence has
/// died out and the rate is 0.
pub fn fit_geometric_rate(points: &[(usize, f64)]) -> f64 {
    match points.last() {
        Some(&(_, v)) if v <= 0.0 => return 0.0,
        None => return f64::NAN,
        _ => {}
    }
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|p| p.1 > 0.0 && p.1.is_finite())
        .map(|&(d, v)| (d as f64, v.ln()))
        .collect();
    if pts.len() < 2 {
        return f64::NAN;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    (sxy / sxx).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Decaying,
    Persistent,
    Inconclusive,
}

/// Fitted rate below `1 - margin` is decay, at least `1 - margin/2` is
/// persistence, anything in between is inconclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecisionRule {
    pub diagnostic: Diagnostic,
    pub margin: f64,
}

impl Default for DecisionRule {
    fn default() -> Self {
        Self { diagnostic: Diagnostic::Tv, margin: 0.02 }
    }
}

impl DecisionRule {
    pub fn classify(&self, rate: f64) -> Verdict {
        if rate < 1.0 - self.margin {
            Verdict::Decaying
        } else if rate >= 1.0 - self.margin / 2.0 {
            Verdict::Persistent
        } else {
            Verdict::Inconclusive
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub param: f64,
    /// Diagnostic value at the decision depth.
    #[serde(with = "crate::numfmt::ext_real")]
    pub statistic: f64,
    pub rate: f64,
    pub window: (usize, usize),
    pub verdict: Verdict,
    pub decaying: bool,
}

/// Depth window `ceil(d/2) ..= d` used for the rate fit.
pub fn decision_window(depth: usize) -> (usize, usize) {
    (depth.div_ceil(2), depth)
}

pub fn decide_reconstruction(
    family: &ChannelFamily,
    param: f64,
    depth: usize,
    engine: Engine,
    rule: &DecisionRule,
    seed: u64,
) -> Result<Decision> {
    if depth < 2 {
        return Err(Error::InvalidParameter("decision depth must be at least 2".into()));
    }
    let curve = diagnostic_curve(family, param, depth, engine, seed)?;
    Ok(decide_from_curve(&curve, param, rule))
}

pub fn decide_from_curve(curve: &Curve, param: f64, rule: &DecisionRule) -> Decision {
    let depth = *curve.depth.last().expect("non-empty curve");
    let window = decision_window(depth);
    let values = curve.values(rule.diagnostic);
    let points: Vec<(usize, f64)> = curve
        .depth
        .iter()
        .zip(values)
        .filter(|(d, _)| **d >= window.0 && **d <= window.1)
        .map(|(&d, &v)| (d, v))
        .collect();
    let statistic = *values.last().expect("non-empty curve");
    let rate = if statistic == 0.0 { 0.0 } else { fit_geometric_rate(&points) };
    let verdict = if rate.is_nan() { Verdict::Inconclusive } else { rule.classify(rate) };
    Decision {
        param,
        statistic,
        rate,
        window,
        verdict,
        decaying: verdict == Verdict::Decaying,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rate_fit_recovers_geometric_sequences() {
        let pts: Vec<(usize, f64)> = (5..=10).map(|d| (d, 3.0 * 0.7f64.powi(d as i32))).collect();
        assert!((fit_geometric_rate(&pts) - 0.7).abs() < 1e-12);
        assert_eq!(fit_geometric_rate(&[(1, 0.5), (2, 0.0)]), 0.0);
    }

    #[test]
    fn rule_bands() {
        let r = DecisionRule::default();
        assert_eq!(r.classify(0.5), Verdict::Decaying);
        assert_eq!(r.classify(0.985), Verdict::Inconclusive);
        assert_eq!(r.classify(0.995), Verdict::Persistent);
        assert_eq!(r.classify(1.0), Verdict::Persistent);
    }

    #[test]
    fn uninformative_statistic_is_zero() {
        let fam = ChannelFamily::symmetric(2);
        let d = decide_reconstruction(&fam, 0.5, 6, Engine::Exact { bins: 0 }, &DecisionRule::default(), 0)
            .unwrap();
        assert_eq!(d.statistic, 0.0);
        assert!(d.decaying);
    }

    #[test]
    fn window_is_upper_half() {
        assert_eq!(decision_window(12), (6, 12));
        assert_eq!(decision_window(5), (3, 5));
    }
}
