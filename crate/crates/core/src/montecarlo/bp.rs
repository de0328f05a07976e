use crate::chain::BinaryChannel;
use crate::error::{Error, Result};
use crate::exact::a_of_l;
use crate::ext::{ln_add_exp, ln_prob};

fn infer_depth(len: usize, k: u32) -> Result<usize> {
    if k == 1 {
        if len == 1 {
            return Err(Error::InvalidParameter(
                "with k = 1 the depth cannot be inferred from the leaves; use bp_log_ratio".into(),
            ));
        }
    } else {
        let mut n = 1usize;
        let mut d = 0;
        while n < len {
            n = n.saturating_mul(k as usize);
            d += 1;
        }
        if n == len {
            return Ok(d);
        }
    }
    Err(Error::InvalidParameter(format!(
        "{len} leaves is not a power of k = {k}"
    )))
}

/// `L = ln(q0/q1)` of a leaf configuration at `depth` below the root,
/// computed bottom-up in log space.
pub fn bp_log_ratio(leaves: &[u8], c: &BinaryChannel, k: u32, depth: usize) -> Result<f64> {
    let expected = (k as usize).checked_pow(depth as u32);
    if k == 0 || expected != Some(leaves.len()) {
        return Err(Error::InvalidParameter(format!(
            "expected k^depth leaves, got {}",
            leaves.len()
        )));
    }
    let lp = [
        [ln_prob(c.p00()), ln_prob(c.p01())],
        [ln_prob(c.p10()), ln_prob(c.p11())],
    ];
    // (ln q0, ln q1) of each node on the current level.
    let mut level: Vec<(f64, f64)> = leaves
        .iter()
        .map(|&y| if y == 0 { (0.0, f64::NEG_INFINITY) } else { (f64::NEG_INFINITY, 0.0) })
        .collect();
    for _ in 0..depth {
        level = level
            .chunks(k as usize)
            .map(|children| {
                let mut out = (0.0, 0.0);
                for &(a, b) in children {
                    out.0 += ln_add_exp(lp[0][0] + a, lp[0][1] + b);
                    out.1 += ln_add_exp(lp[1][0] + a, lp[1][1] + b);
                }
                out
            })
            .collect();
    }
    let (lq0, lq1) = level[0];
    if lq0 == f64::NEG_INFINITY && lq1 == f64::NEG_INFINITY {
        return Err(Error::InvalidParameter(
            "leaf configuration has probability zero under both root values".into(),
        ));
    }
    Ok(lq0 - lq1)
}

/// Posterior probability that the root is 0 given the level-`d` values,
/// where `d` is inferred from `leaves.len() = k^d`.
pub fn bp_root_posterior(leaves: &[u8], c: &BinaryChannel, k: u32) -> Result<f64> {
    let depth = infer_depth(leaves.len(), k)?;
    Ok(a_of_l(bp_log_ratio(leaves, c, k, depth)?, c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::hardcore_channel;

    #[test]
    fn uninformative_channel_returns_prior() {
        let c = BinaryChannel::symmetric(0.5).unwrap();
        assert!((bp_root_posterior(&[0, 1, 1, 0], &c, 2).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn hardcore_occupied_child_rules_out_root_one() {
        let (c, _) = hardcore_channel(1.5, 3).unwrap();
        assert_eq!(bp_root_posterior(&[0, 1, 0], &c, 3).unwrap(), 1.0);
    }

    #[test]
    fn depth_inference() {
        let c = BinaryChannel::symmetric(0.2).unwrap();
        assert!(bp_root_posterior(&[0, 1, 0], &c, 2).is_err());
        assert!(bp_root_posterior(&[0; 9], &c, 3).is_ok());
        assert!(bp_root_posterior(&[0], &c, 1).is_err());
        assert!(bp_log_ratio(&[0], &c, 1, 4).is_ok());
    }
}
