//! The invariant suite behind `treerecon verify`.

use rand::Rng;
use serde::Serialize;
use treerecon::chain::{f_eval, hardcore_channel, mossel_peres_lhs, sup_fprime, thm1_lhs};
use treerecon::exact::{
    base_pair, build_coupling, diagnostics, evolve, evolve_to, finite_depth_identity_check, mean_gap,
    verify_lemma, FiniteSpace, PruningPolicy,
};
use treerecon::hardcore::{brw_independence_check, gibbs_check_all, TruncatedTree};
use treerecon::montecarlo::rng::stream;
use treerecon::montecarlo::RootSpec;
use treerecon::{BinaryChannel, ConditionalPair, Error};

use crate::error::CliError;

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub pass: bool,
    #[serde(with = "treerecon::numfmt::ext_real")]
    pub residual: f64,
    pub tolerance: f64,
    pub cases: usize,
    pub detail: String,
}

fn check(name: &'static str, residual: f64, tolerance: f64, cases: usize, detail: String) -> Check {
    Check { name, pass: residual <= tolerance, residual, tolerance, cases, detail }
}

fn random_channel(rng: &mut impl Rng, lo: f64, hi: f64) -> BinaryChannel {
    loop {
        if let Ok(c) = BinaryChannel::new(rng.gen_range(lo..hi), rng.gen_range(lo..hi)) {
            return c;
        }
    }
}

/// Pairs at depths `1..=depth`, strict while the atom cap allows and binned
/// after that.
pub fn pairs_to(c: &BinaryChannel, k: u32, depth: usize) -> Result<Vec<ConditionalPair>, Error> {
    let mut out = vec![base_pair(c, k)?];
    while out.len() < depth {
        let last = out.last().expect("non-empty");
        let next = match evolve(last, c, k, &PruningPolicy::default()) {
            Err(Error::AtomExplosion { .. }) => evolve(last, c, k, &PruningPolicy::quantized(20_000))?,
            r => r?,
        };
        out.push(next);
    }
    Ok(out)
}

fn bound_sweep(seed: u64) -> Check {
    let mut rng = stream(seed, &[1]);
    let n = 10_000;
    let worst = (0..n)
        .map(|_| {
            let c = random_channel(&mut rng, 0.0, 1.0);
            thm1_lhs(&c) - mossel_peres_lhs(&c).unwrap_or(f64::INFINITY)
        })
        .fold(f64::NEG_INFINITY, f64::max);
    check("thm1_le_mossel_peres", worst.max(0.0), 1e-12, n, format!("max(thm1 - mp) = {worst:e}"))
}

fn bound_equality(seed: u64) -> Result<Check, CliError> {
    let mut rng = stream(seed, &[2]);
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for _ in 0..100 {
        let u: f64 = rng.gen_range(0.001..0.999);
        let eps: f64 = rng.gen();
        for c in [
            BinaryChannel::symmetric(eps)?,
            BinaryChannel::new(0.0, u)?,
            BinaryChannel::new(1.0, u)?,
            BinaryChannel::new(u, 0.0)?,
            BinaryChannel::new(u, 1.0)?,
            BinaryChannel::new(u, u)?,
        ] {
            worst = worst.max((thm1_lhs(&c) - mossel_peres_lhs(&c)?).abs());
            cases += 1;
        }
    }
    Ok(check("bound_equality_cases", worst, 1e-12, cases, "symmetric, one zero entry, equal rows".into()))
}

fn sup_fprime_grid(seed: u64) -> Result<Check, CliError> {
    let mut rng = stream(seed, &[3]);
    let (n_channels, n_grid, h) = (100, 100_000, 1e-5);
    let mut worst: f64 = 0.0;
    for _ in 0..n_channels {
        let c = random_channel(&mut rng, 0.01, 0.99);
        let s = sup_fprime(&c)?;
        worst = worst.max((s.value - thm1_lhs(&c)).abs());
        let mut best = f64::NEG_INFINITY;
        for i in 0..n_grid {
            let x = -20.0 + 40.0 * i as f64 / (n_grid - 1) as f64;
            best = best.max((f_eval(&c, x + h)? - f_eval(&c, x - h)?) / (2.0 * h));
        }
        worst = worst.max((best - s.value).abs());
    }
    Ok(check("sup_fprime_grid", worst, 1e-6, n_channels, format!("{n_grid}-point grid on [-20, 20]")))
}

fn identity(seed: u64) -> Result<Check, CliError> {
    let mut rng = stream(seed, &[4]);
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for _ in 0..20 {
        let c = random_channel(&mut rng, 0.01, 0.99);
        for k in 1..=3u32 {
            let policy = if k == 3 { PruningPolicy::mean_preserving(2000) } else { PruningPolicy::no_pruning() };
            let pairs = evolve_to(&c, k, 4, &policy)?;
            for w in pairs.windows(2) {
                worst = worst.max(finite_depth_identity_check(&w[1], &w[0], &c, k)?.residual);
                cases += 1;
            }
        }
    }
    Ok(check("finite_depth_identity", worst, 1e-9, cases, "k in 1..=3, depths 2..=4".into()))
}

fn coupling_and_martingale() -> Result<[Check; 2], CliError> {
    let mut channels: Vec<BinaryChannel> =
        [0.1, 0.2, 0.3, 0.4].iter().map(|&e| BinaryChannel::symmetric(e)).collect::<Result<_, _>>()?;
    for w in [0.5, 1.0, 2.0] {
        channels.push(hardcore_channel(w, 2)?.0);
    }
    let (mut marg, mut crossings, mut mart, mut cases) = (0.0f64, 0, 0.0f64, 0);
    for c in &channels {
        for k in [1u32, 2] {
            for pair in pairs_to(c, k, 6)? {
                let cp = build_coupling(&pair, c)?;
                marg = marg.max(cp.marginal_error(&pair));
                crossings += cp.crossing_violations(0.0).len();
                mart = mart.max((diagnostics(&pair, c).mean_a - c.pi0()).abs());
                cases += 1;
            }
        }
    }
    let mut coupling = check("coupling", marg, 1e-12, cases, format!("{crossings} crossing pair(s)"));
    coupling.pass &= crossings == 0;
    Ok([coupling, check("martingale_mean", mart, 1e-10, cases, "|E[A] - pi0| under the mixture".into())])
}

fn lemma(seed: u64, n: usize) -> Result<Check, CliError> {
    let mut rng = stream(seed, &[5]);
    let mut worst: f64 = 0.0;
    let (mut done, mut failures) = (0, 0);
    while done < n {
        let size = rng.gen_range(2..=32usize);
        let raw: Vec<f64> = (0..size).map(|_| rng.gen::<f64>()).collect();
        let total: f64 = raw.iter().sum();
        let mut probs: Vec<f64> = raw.iter().map(|p| p / total).collect();
        let drift = 1.0 - probs.iter().sum::<f64>();
        probs[size - 1] += drift;
        let b: Vec<bool> = (0..size).map(|_| rng.gen()).collect();
        if b.iter().all(|&x| x) || b.iter().all(|&x| !x) {
            continue;
        }
        let cells = rng.gen_range(1..=size);
        let partition: Vec<usize> = (0..size).map(|_| rng.gen_range(0..cells)).collect();
        let d_cells: Vec<usize> = (0..cells).filter(|_| rng.gen()).collect();
        let (mut p0, mut p1) = (1.0f64, 0.0f64);
        for &cell in &d_cells {
            let (mut pc, mut pcb) = (0.0, 0.0);
            for i in (0..size).filter(|&i| partition[i] == cell) {
                pc += probs[i];
                if b[i] {
                    pcb += probs[i];
                }
            }
            if pc > 0.0 {
                p0 = p0.min(pcb / pc);
                p1 = p1.max(pcb / pc);
            }
        }
        if p0 > p1 {
            (p0, p1) = (0.0, 1.0);
        }
        let v = verify_lemma(&FiniteSpace::new(probs)?, &b, &partition, &d_cells, p0, p1)?;
        worst = worst.max(v.lower - v.middle).max(v.middle - v.upper);
        failures += usize::from(!v.holds);
        done += 1;
    }
    let mut out = check("lemma_sandwich", worst.max(0.0), 1e-12, n, format!("{failures} violation(s) on spaces of at most 32 outcomes"));
    out.pass &= failures == 0;
    Ok(out)
}

fn gibbs() -> Result<Check, CliError> {
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for w in [0.5, 1.0, 2.0] {
        let (c, _) = hardcore_channel(w, 2)?;
        for root_degree in [2, 3] {
            for r in gibbs_check_all(&c, &TruncatedTree::new(2, 3, root_degree)?)? {
                worst = worst.max(r.max_residual);
                cases += 1;
            }
        }
    }
    Ok(check("gibbs_conditional", worst, 1e-12, cases, "k = 2, depth 3, root degree 2 and 3".into()))
}

fn independence(seed: u64, n: usize) -> Result<Check, CliError> {
    let (c, _) = hardcore_channel(1.0, 2)?;
    let v = brw_independence_check(&c, 2, 6, RootSpec::Stationary, n, seed)?;
    Ok(check("brw_independence", v.violations as f64, 0.0, n, "adjacent occupied pairs, w = 1, k = 2, depth 6".into()))
}

fn channel_gap(c: &BinaryChannel, k: u32, depth: usize) -> Result<Check, CliError> {
    let gaps: Vec<f64> = pairs_to(c, k, depth)?.iter().map(mean_gap).collect();
    let worst = gaps.iter().fold(0.0f64, |m, &g| m.max(-g));
    let text: Vec<String> = gaps.iter().map(|&g| treerecon::numfmt::g17(g)).collect();
    let mut out = check("mean_gap", worst, 1e-10, gaps.len(), format!("E(L0 - L1) by depth: {}", text.join(", ")));
    out.residual = *gaps.last().expect("depth >= 1");
    Ok(out)
}

pub fn run_all(
    channel: Option<&BinaryChannel>,
    k: u32,
    depth: usize,
    samples: usize,
    seed: u64,
) -> Result<Vec<Check>, CliError> {
    let mut out = vec![bound_sweep(seed), bound_equality(seed)?, sup_fprime_grid(seed)?, identity(seed)?];
    out.extend(coupling_and_martingale()?);
    out.push(lemma(seed, samples)?);
    out.push(gibbs()?);
    out.push(independence(seed, samples)?);
    if let Some(c) = channel {
        out.push(channel_gap(c, k, depth)?);
    }
    Ok(out)
}
