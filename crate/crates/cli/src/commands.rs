use std::fmt::Write as _;

use serde::Serialize;
use treerecon::chain::{hardcore_channel, w_of_lambda};
use treerecon::exact::{build_coupling, evolve_to, CouplingPair};
use treerecon::hardcore::{brw_independence_check, gibbs_check_all, GibbsResidual, IndependenceVerdict, TruncatedTree};
use treerecon::montecarlo::RootSpec;
use treerecon::numfmt::{g17, to_json_line, to_json_string};
use treerecon::threshold::{bisect_threshold, bounds_report, curve_for_channel, BisectConfig, ChannelFamily, Curve, Engine, FamilyKind};

use crate::args::{ChannelSpec, Format, RunConfig};
use crate::error::CliError;
use crate::verify;

#[derive(Serialize)]
struct Output<'a, T: Serialize> {
    config: &'a RunConfig,
    result: T,
}

fn json<T: Serialize>(cfg: &RunConfig, result: T) -> Result<String, CliError> {
    Ok(to_json_string(&Output { config: cfg, result })?)
}

fn spec(cfg: &RunConfig) -> Result<ChannelSpec, CliError> {
    cfg.channel.ok_or_else(|| CliError::Usage("no channel given".into()))
}

fn family(cfg: &RunConfig) -> Result<ChannelFamily, CliError> {
    Ok(match spec(cfg)?.family()? {
        FamilyKind::Symmetric => ChannelFamily::symmetric(cfg.k),
        FamilyKind::Hardcore => ChannelFamily::hardcore(cfg.k),
    })
}

fn depth(cfg: &RunConfig) -> usize {
    cfg.depth.expect("resolved for this command")
}

fn engine(cfg: &RunConfig) -> Engine {
    cfg.engine.expect("resolved for this command")
}

pub fn bounds(cfg: &RunConfig) -> Result<String, CliError> {
    let kind = spec(cfg)?.family()?;
    json(cfg, bounds_report(cfg.k, kind)?)
}

pub fn evolve(cfg: &RunConfig) -> Result<String, CliError> {
    let c = spec(cfg)?.channel(cfg.k)?;
    let curve = curve_for_channel(&c, cfg.k, depth(cfg), engine(cfg), cfg.seed)?;
    match cfg.format {
        Format::Json => json(cfg, curve),
        Format::Csv => curve_csv(cfg, &curve),
    }
}

fn curve_csv(cfg: &RunConfig, curve: &Curve) -> Result<String, CliError> {
    let mut s = format!("# config: {}\n", to_json_line(cfg)?);
    let se = curve.tv_se.is_some();
    s.push_str("depth,tv,mean_gap,var_a");
    if se {
        s.push_str(",tv_se,mean_gap_se,var_a_se");
    }
    s.push('\n');
    for i in 0..curve.depth.len() {
        write!(s, "{},{},{},{}", curve.depth[i], g17(curve.tv[i]), g17(curve.mean_gap[i]), g17(curve.var_a[i]))
            .expect("write to string");
        if let (Some(a), Some(b), Some(c)) = (&curve.tv_se, &curve.mean_gap_se, &curve.var_a_se) {
            write!(s, ",{},{},{}", g17(a[i]), g17(b[i]), g17(c[i])).expect("write to string");
        }
        s.push('\n');
    }
    Ok(s)
}

pub fn threshold(cfg: &RunConfig) -> Result<String, CliError> {
    let fam = family(cfg)?;
    let mut bc = BisectConfig::new(&fam, depth(cfg), engine(cfg), cfg.tol.expect("resolved"), cfg.seed)?;
    if let Some(lo) = cfg.lo {
        bc.lo = lo;
    }
    if let Some(hi) = cfg.hi {
        bc.hi = hi;
    }
    json(cfg, bisect_threshold(&fam, &bc)?)
}

#[derive(Serialize)]
struct CouplingReport {
    depth: usize,
    marginal_error: f64,
    crossing_violations: usize,
    off_diagonal_mass: f64,
    #[serde(with = "treerecon::numfmt::ext_real")]
    expected_gap: f64,
    pairs: Vec<CouplingPair>,
}

pub fn couple(cfg: &RunConfig) -> Result<String, CliError> {
    let c = spec(cfg)?.channel(cfg.k)?;
    let Engine::Exact { bins } = engine(cfg) else {
        return Err(CliError::Usage("couple needs the exact engine".into()));
    };
    let pair = evolve_to(&c, cfg.k, depth(cfg), &Engine::policy(bins))?.pop().expect("depth >= 1");
    let cp = build_coupling(&pair, &c)?;
    json(
        cfg,
        CouplingReport {
            depth: pair.depth(),
            marginal_error: cp.marginal_error(&pair),
            crossing_violations: cp.crossing_violations(0.0).len(),
            off_diagonal_mass: cp.off_diagonal_mass(),
            expected_gap: cp.expected_gap(),
            pairs: cp.pairs,
        },
    )
}

#[derive(Serialize)]
struct GibbsReport {
    root_degree: u32,
    max_residual: f64,
    nodes: Vec<GibbsResidual>,
}

#[derive(Serialize)]
struct HardcoreReport {
    w: f64,
    lambda: f64,
    gibbs: Vec<GibbsReport>,
    independence: IndependenceVerdict,
    tolerance: f64,
    pass: bool,
}

const GIBBS_TOL: f64 = 1e-12;

pub fn hardcore_check(cfg: &RunConfig) -> Result<(String, bool), CliError> {
    let w = match spec(cfg)? {
        ChannelSpec::HardcoreFamily => 1.0,
        ChannelSpec::HardcoreW { w } => w,
        ChannelSpec::HardcoreLambda { lambda } => w_of_lambda(lambda, cfg.k)?,
        _ => return Err(CliError::Usage("hardcore-check needs --hardcore, --hardcore-w or --hardcore-lambda".into())),
    };
    let (c, params) = hardcore_channel(w, cfg.k)?;
    let d = depth(cfg);
    let mut gibbs = Vec::new();
    for root_degree in [cfg.k, cfg.k + 1] {
        let tree = TruncatedTree::new(cfg.k, d, root_degree)?;
        let nodes = gibbs_check_all(&c, &tree)?;
        let max_residual = nodes.iter().map(|r| r.max_residual).fold(0.0, f64::max);
        gibbs.push(GibbsReport { root_degree, max_residual, nodes });
    }
    let samples = cfg.samples.expect("resolved");
    let independence = brw_independence_check(&c, cfg.k, d, RootSpec::Stationary, samples, cfg.seed)?;
    let pass = independence.holds && gibbs.iter().all(|g| g.max_residual <= GIBBS_TOL);
    let report = HardcoreReport { w, lambda: params.lambda, gibbs, independence, tolerance: GIBBS_TOL, pass };
    Ok((json(cfg, report)?, pass))
}

pub fn verify(cfg: &RunConfig) -> Result<(String, bool), CliError> {
    let channel = match cfg.channel {
        Some(s) => Some(s.channel(cfg.k)?),
        None => None,
    };
    let checks = verify::run_all(channel.as_ref(), cfg.k, depth(cfg), cfg.samples.expect("resolved"), cfg.seed)?;
    let pass = checks.iter().all(|c| c.pass);
    Ok((json(cfg, checks)?, pass))
}
