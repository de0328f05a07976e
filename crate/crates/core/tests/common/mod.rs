#![allow(dead_code)]

use treerecon::BinaryChannel;

/// `(leaves, q0, q1)` for every leaf pattern at `depth`, summing the
/// broadcast probability over all internal configurations by brute force.
pub fn leaf_likelihoods(c: &BinaryChannel, k: usize, depth: usize) -> Vec<(Vec<u8>, f64, f64)> {
    // Nodes below the root in breadth-first order; parent of node i (0-based
    // among non-root nodes) is root for i < k, otherwise node (i / k) - 1.
    let n: usize = (1..=depth).map(|l| k.pow(l as u32)).sum();
    let n_leaves = k.pow(depth as u32);
    let first_leaf = n - n_leaves;
    let mut q = vec![[0.0f64; 2]; 1 << n_leaves];
    for root in 0..2u8 {
        for mask in 0u64..1 << n {
            let value = |i: usize| (mask >> i & 1) as u8;
            let mut p = 1.0;
            for i in 0..n {
                let parent = if i < k { root } else { value(i / k - 1) };
                p *= c.p(parent, value(i));
                if p == 0.0 {
                    break;
                }
            }
            let leaves = (mask >> first_leaf) as usize;
            q[leaves][root as usize] += p;
        }
    }
    q.into_iter()
        .enumerate()
        .map(|(m, [q0, q1])| ((0..n_leaves).map(|i| (m >> i & 1) as u8).collect(), q0, q1))
        .collect()
}

/// Brute-force laws of `L = ln(q0/q1)` as `(value, w0, w1)` sorted by value,
/// merging values closer than `1e-9`.
pub fn brute_force_law(c: &BinaryChannel, k: usize, depth: usize) -> Vec<(f64, f64, f64)> {
    let mut atoms: Vec<(f64, f64, f64)> = leaf_likelihoods(c, k, depth)
        .into_iter()
        .filter(|&(_, q0, q1)| q0 > 0.0 || q1 > 0.0)
        .map(|(_, q0, q1)| {
            let l = if q1 == 0.0 {
                f64::INFINITY
            } else if q0 == 0.0 {
                f64::NEG_INFINITY
            } else {
                (q0 / q1).ln()
            };
            (l, q0, q1)
        })
        .collect();
    atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out: Vec<(f64, f64, f64)> = Vec::new();
    for a in atoms {
        match out.last_mut() {
            Some(last) if last.0 == a.0 || (last.0 - a.0).abs() < 1e-9 => {
                last.1 += a.1;
                last.2 += a.2;
            }
            _ => out.push(a),
        }
    }
    out
}
