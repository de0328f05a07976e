use treerecon::chain::hardcore_channel;
use treerecon::exact::{base_pair, build_coupling, evolve, mean_gap, PruningPolicy};
use treerecon::{BinaryChannel, ConditionalPair, Error};

/// Pairs for depths `1..=depth`, exact while the atom cap allows and
/// likelihood-consistent binning after that.
fn pairs_to(c: &BinaryChannel, k: u32, depth: usize) -> Vec<ConditionalPair> {
    let mut out = vec![base_pair(c, k).unwrap()];
    while out.len() < depth {
        let last = out.last().unwrap();
        let next = match evolve(last, c, k, &PruningPolicy::default()) {
            Ok(p) => p,
            Err(Error::AtomExplosion { .. }) => evolve(last, c, k, &PruningPolicy::quantized(20_000)).unwrap(),
            Err(e) => panic!("{e}"),
        };
        out.push(next);
    }
    out
}

#[test]
fn coupling_grid() {
    let mut channels: Vec<BinaryChannel> =
        [0.1, 0.2, 0.3, 0.4].iter().map(|&e| BinaryChannel::symmetric(e).unwrap()).collect();
    for k in [1, 2] {
        for w in [0.5, 1.0, 2.0] {
            channels.push(hardcore_channel(w, k).unwrap().0);
        }
    }
    for c in &channels {
        for k in [1u32, 2] {
            for pair in pairs_to(c, k, 6) {
                let cp = build_coupling(&pair, c).unwrap();
                let err = cp.marginal_error(&pair);
                assert!(err <= 1e-12, "{c:?} k = {k} d = {}: marginal error {err}", pair.depth());
                let bad = cp.crossing_violations(0.0);
                assert!(bad.is_empty(), "{c:?} k = {k} d = {}: {bad:?}", pair.depth());
                let tv: f64 = 0.5 * pair.atoms().iter().map(|a| (a.w0 - a.w1).abs()).sum::<f64>();
                assert!((cp.off_diagonal_mass() - tv).abs() <= 1e-12);
                if mean_gap(&pair).is_finite() {
                    assert!((cp.expected_gap() - mean_gap(&pair)).abs() <= 1e-9);
                }
            }
        }
    }
}

#[test]
fn identical_laws_couple_on_the_diagonal() {
    let c = BinaryChannel::symmetric(0.5).unwrap();
    for pair in pairs_to(&c, 2, 4) {
        let cp = build_coupling(&pair, &c).unwrap();
        assert_eq!(cp.pairs.len(), 1);
        assert_eq!((cp.pairs[0].y0, cp.pairs[0].y1), (0.0, 0.0));
        assert_eq!(cp.expected_gap(), 0.0);
    }
}

#[test]
fn symmetric_depth_two_example() {
    let c = BinaryChannel::symmetric(0.2).unwrap();
    let pair = pairs_to(&c, 2, 2).pop().unwrap();
    let cp = build_coupling(&pair, &c).unwrap();
    assert!(cp.marginal_error(&pair) <= 1e-12);
    for p in cp.pairs.iter().filter(|p| p.y0 != p.y1) {
        assert!(p.y1 <= 0.0 && 0.0 <= p.y0);
    }
}

#[test]
fn dominance_violation_is_rejected() {
    use treerecon::exact::PairAtom;
    let pair = ConditionalPair::from_atoms(
        1,
        vec![
            PairAtom { value: -1.0, w0: 0.7, w1: 0.3 },
            PairAtom { value: 1.0, w0: 0.3, w1: 0.7 },
        ],
    );
    if let Ok(pair) = pair {
        let c = BinaryChannel::symmetric(0.3).unwrap();
        assert!(matches!(build_coupling(&pair, &c), Err(Error::DominanceViolation { .. })));
    }
}
