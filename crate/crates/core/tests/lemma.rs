use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use treerecon::exact::{verify_lemma, FiniteSpace};
use treerecon::Error;

#[test]
fn sandwich_on_random_spaces() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let mut checked = 0;
    while checked < 10_000 {
        let n = rng.gen_range(2..=32);
        let raw: Vec<f64> = (0..n).map(|_| if rng.gen_bool(0.1) { 0.0 } else { rng.gen() }).collect();
        let total: f64 = raw.iter().sum();
        if total == 0.0 {
            continue;
        }
        let mut probs: Vec<f64> = raw.iter().map(|p| p / total).collect();
        let drift: f64 = 1.0 - probs.iter().sum::<f64>();
        let last = probs.iter().rposition(|&p| p > 0.0).unwrap();
        probs[last] += drift;
        let b: Vec<bool> = (0..n).map(|_| rng.gen()).collect();
        let pb: f64 = (0..n).filter(|&i| b[i]).map(|i| probs[i]).sum();
        let pbc: f64 = (0..n).filter(|&i| !b[i]).map(|i| probs[i]).sum();
        if pb <= 0.0 || pbc <= 0.0 {
            continue;
        }
        let cells = rng.gen_range(1..=n);
        let partition: Vec<usize> = (0..n).map(|_| rng.gen_range(0..cells)).collect();
        let d_cells: Vec<usize> = (0..cells).filter(|_| rng.gen()).collect();
        // Tightest [p0, p1] containing P(B | G) on the cells of D, then widened.
        let (mut p0, mut p1) = (1.0f64, 0.0f64);
        for &cell in &d_cells {
            let (mut pc, mut pcb) = (0.0, 0.0);
            for i in (0..n).filter(|&i| partition[i] == cell) {
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
        p0 *= rng.gen::<f64>().sqrt();
        p1 += (1.0 - p1) * rng.gen::<f64>().powi(2);
        let space = FiniteSpace::new(probs).unwrap();
        let v = verify_lemma(&space, &b, &partition, &d_cells, p0, p1).unwrap();
        assert!(v.holds, "{v:?}");
        assert!(v.lower <= v.middle + 1e-12 && v.middle <= v.upper + 1e-12);
        checked += 1;
    }
}

#[test]
fn cell_condition_is_enforced() {
    let s = FiniteSpace::new(vec![0.25; 4]).unwrap();
    let b = [true, true, false, false];
    let err = verify_lemma(&s, &b, &[0, 0, 1, 1], &[0, 1], 0.5, 1.0).unwrap_err();
    assert!(matches!(err, Error::PreconditionViolation(_)));
    let all = [true; 4];
    let err = verify_lemma(&s, &all, &[0; 4], &[0], 0.0, 1.0).unwrap_err();
    assert!(matches!(err, Error::DegenerateEvent(_)));
}

#[test]
fn unit_upper_bound_is_vacuous() {
    let s = FiniteSpace::new(vec![0.5, 0.5]).unwrap();
    let v = verify_lemma(&s, &[true, false], &[0, 1], &[0], 1.0, 1.0).unwrap();
    assert!(v.holds, "{v:?}");
    assert_eq!(v.upper, f64::INFINITY);
    assert_eq!(v.lower, 0.0);
}

#[test]
fn independence_gives_equalities() {
    let s = FiniteSpace::new(vec![0.1, 0.2, 0.3, 0.4]).unwrap();
    let b = [true, false, false, true];
    let v = verify_lemma(&s, &b, &[0; 4], &[0], 0.5, 0.5).unwrap();
    for x in [v.lower, v.middle, v.upper] {
        assert!((x - 1.0).abs() < 1e-15);
    }
}
