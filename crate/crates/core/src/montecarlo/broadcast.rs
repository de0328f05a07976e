use rand::Rng;
use serde::{Deserialize, Serialize};

use super::rng::stream;
use crate::chain::BinaryChannel;
use crate::error::{Error, Result};

/// Default cap on the number of nodes in a sampled tree.
pub const DEFAULT_NODE_CAP: usize = 1 << 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RootSpec {
    Fixed(u8),
    Stationary,
}

/// One realisation of the broadcast process down to `depth`, stored level by
/// level in breadth-first order: the children of node `i` on level `l` are
/// `k*i .. k*i + k` on level `l + 1`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BroadcastSample {
    pub k: u32,
    pub depth: usize,
    pub levels: Vec<Vec<u8>>,
    pub root_value: u8,
    pub seed: u64,
}

impl BroadcastSample {
    pub fn leaves(&self) -> &[u8] {
        self.levels.last().expect("at least the root level")
    }

    /// Number of parent-child pairs with both values equal to 1.
    pub fn adjacent_ones(&self) -> usize {
        let k = self.k as usize;
        self.levels
            .windows(2)
            .map(|w| {
                w[1].iter()
                    .enumerate()
                    .filter(|&(j, &v)| v == 1 && w[0][j / k] == 1)
                    .count()
            })
            .sum()
    }
}

/// Total node count `1 + k + ... + k^depth`, or `None` on overflow.
pub fn node_count(k: u32, depth: usize) -> Option<usize> {
    let mut total: usize = 0;
    let mut level: usize = 1;
    for d in 0..=depth {
        total = total.checked_add(level)?;
        if d < depth {
            level = level.checked_mul(k as usize)?;
        }
    }
    Some(total)
}

pub fn sample_broadcast(
    c: &BinaryChannel,
    k: u32,
    depth: usize,
    root: RootSpec,
    seed: u64,
) -> Result<BroadcastSample> {
    sample_broadcast_capped(c, k, depth, root, seed, DEFAULT_NODE_CAP)
}

pub fn sample_broadcast_capped(
    c: &BinaryChannel,
    k: u32,
    depth: usize,
    root: RootSpec,
    seed: u64,
    node_cap: usize,
) -> Result<BroadcastSample> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be positive".into()));
    }
    match node_count(k, depth) {
        Some(n) if n <= node_cap => {}
        _ => {
            return Err(Error::ResourceLimit(format!(
                "a tree with k = {k} and depth {depth} exceeds the node cap {node_cap}"
            )))
        }
    }
    let mut rng = stream(seed, &[]);
    let root_value = match root {
        RootSpec::Fixed(v) if v <= 1 => v,
        RootSpec::Fixed(v) => {
            return Err(Error::InvalidParameter(format!("root value {v} is not binary")))
        }
        RootSpec::Stationary => u8::from(rng.gen::<f64>() >= c.pi0()),
    };
    let mut levels = vec![vec![root_value]];
    for _ in 0..depth {
        let parent = levels.last().expect("non-empty");
        let mut next = Vec::with_capacity(parent.len() * k as usize);
        for &v in parent {
            let p_one = c.p(v, 1);
            for _ in 0..k {
                next.push(u8::from(rng.gen::<f64>() < p_one));
            }
        }
        levels.push(next);
    }
    Ok(BroadcastSample { k, depth, levels, root_value, seed })
}
