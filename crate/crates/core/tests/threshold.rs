use treerecon::chain::kelly_threshold;
use treerecon::threshold::{
    bisect_threshold, bounds_report, decide_reconstruction, diagnostic_curve, BisectConfig,
    ChannelFamily, DecisionRule, Engine, FamilyKind, Verdict,
};
use treerecon::Error;

const EXACT: Engine = Engine::Exact { bins: 2000 };

#[test]
fn decisions_on_either_side_of_kesten_stigum() {
    let fam = ChannelFamily::symmetric(2);
    let rule = DecisionRule::default();
    let below = decide_reconstruction(&fam, 0.3, 12, EXACT, &rule, 0).unwrap();
    assert!(below.decaying, "{below:?}");
    let above = decide_reconstruction(&fam, 0.05, 12, EXACT, &rule, 0).unwrap();
    assert!(!above.decaying, "{above:?}");
    assert_eq!(above.verdict, Verdict::Persistent);
    let flat = decide_reconstruction(&fam, 0.5, 12, EXACT, &rule, 0).unwrap();
    assert_eq!(flat.statistic, 0.0);
    assert!(flat.decaying);
}

#[test]
fn population_and_exact_curves_agree_early() {
    let fam = ChannelFamily::symmetric(2);
    let e = diagnostic_curve(&fam, 0.25, 6, Engine::Exact { bins: 20_000 }, 0).unwrap();
    let p = diagnostic_curve(&fam, 0.25, 6, Engine::Population { n: 50_000 }, 4).unwrap();
    let se = p.tv_se.as_ref().unwrap();
    for (i, s) in se.iter().enumerate() {
        assert!((e.tv[i] - p.tv[i]).abs() <= 4.0 * s, "depth {}: {} vs {}", i + 1, e.tv[i], p.tv[i]);
    }
}

#[test]
fn exact_engine_bisection_lands_near_kesten_stigum() {
    let fam = ChannelFamily::symmetric(2);
    let cfg = BisectConfig::new(&fam, 30, Engine::Exact { bins: 1000 }, 0.005, 0).unwrap();
    let est = bisect_threshold(&fam, &cfg).unwrap();
    assert!((est.estimate - 0.1464466).abs() <= 0.02, "{est:?}");
    assert!(est.bracket.1 - est.bracket.0 <= 0.005);
    assert!(est.ambiguity_band.0 <= est.bracket.0 && est.bracket.1 <= est.ambiguity_band.1);
    assert!(est.bracket.0 < est.estimate && est.estimate < est.bracket.1);
}

#[test]
fn agreeing_endpoints_are_a_bad_bracket() {
    let fam = ChannelFamily::symmetric(2);
    let mut cfg = BisectConfig::new(&fam, 12, EXACT, 0.01, 0).unwrap();
    (cfg.lo, cfg.hi) = (0.3, 0.45);
    assert!(matches!(bisect_threshold(&fam, &cfg), Err(Error::BadBracket(_))));
}

#[test]
fn hardcore_bisection_exceeds_e_minus_one() {
    let fam = ChannelFamily::hardcore(3);
    let cfg = BisectConfig::new(&fam, 20, Engine::Exact { bins: 500 }, 0.05, 0).unwrap();
    let est = bisect_threshold(&fam, &cfg).unwrap();
    assert!(est.estimate > std::f64::consts::E - 1.0 - 0.05, "{est:?}");
}

#[test]
fn square_root_bound_certifies_exactly_up_to_kelly() {
    for k in 2..=8 {
        let report = bounds_report(k, FamilyKind::Hardcore).unwrap();
        let h = report.hardcore.unwrap();
        let kelly = kelly_threshold(k).unwrap();
        assert!((h.thm1_crossover_lambda - kelly).abs() <= 1e-6 * kelly.max(1.0));
        for row in &h.table {
            if (row.lambda - kelly).abs() > 1e-6 * kelly {
                assert_eq!(row.thm1_margin <= 0.0, row.lambda < kelly, "k = {k}, lambda = {}", row.lambda);
            }
            assert!(row.thm1_lhs <= row.mossel_peres_lhs + 1e-12);
        }
        assert_eq!(h.e_minus_one, std::f64::consts::E - 1.0);
    }
}
