use treerecon::chain::{hardcore_channel, w_of_lambda};
use treerecon::hardcore::{
    brw_independence_check, enumerate_independent_sets, gibbs_check_all, gibbs_conditional_check,
    hardcore_measure, FiniteGraph, TruncatedTree,
};
use treerecon::montecarlo::RootSpec;
use treerecon::Error;

#[test]
fn gibbs_rule_at_every_interior_node() {
    for root_degree in [2, 3] {
        let tree = TruncatedTree::new(2, 3, root_degree).unwrap();
        for w in [0.5, 1.0, 2.0] {
            let (c, params) = hardcore_channel(w, 2).unwrap();
            let all = gibbs_check_all(&c, &tree).unwrap();
            assert_eq!(all.len(), tree.interior_nodes().len());
            assert!(!all.is_empty());
            for r in &all {
                assert!(r.max_residual <= 1e-12, "w = {w}, root degree {root_degree}: {r:?}");
                assert!((r.lambda - params.lambda).abs() <= 1e-12 * params.lambda);
                assert!(r.patterns > 1);
            }
        }
    }
}

#[test]
fn gibbs_free_conditional_example() {
    let (c, _) = hardcore_channel(1.0, 2).unwrap();
    let tree = TruncatedTree::new(2, 3, 2).unwrap();
    let r = gibbs_conditional_check(&c, &tree, 1).unwrap();
    assert!((r.free_conditional - 0.8).abs() < 1e-15);
    assert!(matches!(gibbs_conditional_check(&c, &tree, 0), Err(Error::NotInterior(0))));
    let leaf = tree.len() - 1;
    assert!(matches!(gibbs_conditional_check(&c, &tree, leaf), Err(Error::NotInterior(_))));
    let rooted = TruncatedTree::new(2, 3, 3).unwrap();
    assert!(gibbs_conditional_check(&c, &rooted, 0).unwrap().max_residual <= 1e-12);
}

#[test]
fn broadcasts_are_independent_sets() {
    for (w, root) in [(1.0, RootSpec::Stationary), (1.0, RootSpec::Fixed(1)), (50.0, RootSpec::Stationary)] {
        let (c, _) = hardcore_channel(w, 2).unwrap();
        let v = brw_independence_check(&c, 2, 6, root, 100_000, 41).unwrap();
        assert_eq!(v.violations, 0);
        assert!(v.holds);
    }
}

#[test]
fn path_partition_function_is_fibonacci() {
    let mut fib = vec![2.0, 3.0];
    for n in 2..15 {
        fib.push(fib[n - 1] + fib[n - 2]);
    }
    for n in 1..=15 {
        let m = hardcore_measure(&FiniteGraph::path(n), 1.0).unwrap();
        assert_eq!(m.z, fib[n - 1], "n = {n}");
        assert_eq!(enumerate_independent_sets(&FiniteGraph::path(n)).unwrap().len() as f64, fib[n - 1]);
        let total: f64 = m.weights.iter().map(|(_, p)| p).sum();
        // Each normalized weight and each partial sum rounds once.
        let tol = 2.0 * m.weights.len() as f64 * f64::EPSILON;
        assert!((total - 1.0).abs() <= tol, "n = {n}: {total:e}");
    }
}

#[test]
fn measure_support_and_weights() {
    let g = FiniteGraph::from_edge_list("0 1\n1 2\n2 3\n3 0\n0 2\n", 5).unwrap();
    let lambda = 1.7;
    let m = hardcore_measure(&g, lambda).unwrap();
    for (set, p) in &m.weights {
        let nodes = set.nodes();
        for &u in &nodes {
            assert!(g.neighbours(u).iter().all(|v| !set.contains(*v)));
        }
        assert!((p - lambda.powi(nodes.len() as i32) / m.z).abs() <= 1e-15);
    }
}

#[test]
fn activity_round_trip() {
    let (c, p) = hardcore_channel(w_of_lambda(3.0, 2).unwrap(), 2).unwrap();
    assert!((treerecon::hardcore::channel_activity(&c, 2).unwrap() - 3.0).abs() < 1e-12);
    assert!((p.lambda - 3.0).abs() < 1e-12);
}
