//! The hard-core model: independent sets of small graphs, the finite-volume
//! hard-core measure, and checks that the broadcast law with `p11 = 0` has
//! the hard-core single-site conditionals.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chain::{lambda_of_w, BinaryChannel};
use crate::error::{Error, Result};
use crate::montecarlo::rng::derive_seed;
use crate::montecarlo::{sample_broadcast, RootSpec};

/// Largest graph accepted by the exhaustive enumeration.
pub const MAX_ENUM_NODES: usize = 25;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FiniteGraph {
    n: usize,
    adjacency: Vec<Vec<usize>>,
}

impl FiniteGraph {
    pub fn new(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut adjacency = vec![Vec::new(); n];
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::InvalidParameter(format!(
                    "edge ({u}, {v}) leaves the node range 0..{n}"
                )));
            }
            if u == v {
                return Err(Error::InvalidParameter(format!("self-loop at node {u}")));
            }
            if !adjacency[u].contains(&v) {
                adjacency[u].push(v);
                adjacency[v].push(u);
            }
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        Ok(Self { n, adjacency })
    }

    /// Path `0 - 1 - ... - (n-1)`.
    pub fn path(n: usize) -> Self {
        let edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        Self::new(n, &edges).expect("path edges are valid")
    }

    pub fn empty(n: usize) -> Self {
        Self::new(n, &[]).expect("no edges")
    }

    /// Parses one `u v` pair per line (0-indexed). The node count is one more
    /// than the largest index unless `min_nodes` is larger.
    pub fn from_edge_list(text: &str, min_nodes: usize) -> Result<Self> {
        let mut edges = Vec::new();
        let mut n = min_nodes;
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() != 2 {
                return Err(Error::Parse(format!("line {}: expected \"u v\"", i + 1)));
            }
            let parse = |s: &str| {
                s.parse::<usize>()
                    .map_err(|_| Error::Parse(format!("line {}: bad node {s:?}", i + 1)))
            };
            let (u, v) = (parse(parts[0])?, parse(parts[1])?);
            n = n.max(u + 1).max(v + 1);
            edges.push((u, v));
        }
        Self::new(n, &edges)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn neighbours(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }
}

/// A subset of at most 32 nodes as a bit mask.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeSet(pub u32);

impl NodeSet {
    pub fn contains(&self, v: usize) -> bool {
        self.0 >> v & 1 == 1
    }

    pub fn len(&self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.0 == 0
    }

    pub fn nodes(&self) -> Vec<usize> {
        (0..32).filter(|&v| self.contains(v)).collect()
    }

    pub fn from_nodes(nodes: &[usize]) -> Self {
        NodeSet(nodes.iter().fold(0, |m, &v| m | 1 << v))
    }
}

/// All independent sets of `g`, including the empty set, in increasing
/// order of their bit masks.
pub fn enumerate_independent_sets(g: &FiniteGraph) -> Result<Vec<NodeSet>> {
    if g.n > MAX_ENUM_NODES {
        return Err(Error::ResourceLimit(format!(
            "enumeration is limited to {MAX_ENUM_NODES} nodes, graph has {}",
            g.n
        )));
    }
    let nbr: Vec<u32> = (0..g.n)
        .map(|v| g.neighbours(v).iter().fold(0u32, |m, &u| m | 1 << u))
        .collect();
    let mut out = Vec::new();
    fn rec(v: usize, n: usize, set: u32, nbr: &[u32], out: &mut Vec<NodeSet>) {
        if v == n {
            out.push(NodeSet(set));
            return;
        }
        rec(v + 1, n, set, nbr, out);
        if set & nbr[v] == 0 {
            rec(v + 1, n, set | 1 << v, nbr, out);
        }
    }
    rec(0, g.n, 0, &nbr, &mut out);
    out.sort_unstable();
    Ok(out)
}

/// Hard-core measure with activity `lambda` on a finite graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HardCoreMeasure {
    pub graph: FiniteGraph,
    pub lambda: f64,
    /// Independent sets with their probabilities, in mask order.
    pub weights: Vec<(NodeSet, f64)>,
    pub z: f64,
}

impl HardCoreMeasure {
    pub fn probability(&self, set: NodeSet) -> f64 {
        self.weights
            .binary_search_by(|(s, _)| s.cmp(&set))
            .map(|i| self.weights[i].1)
            .unwrap_or(0.0)
    }

    /// Probability that node `v` is occupied.
    pub fn occupation(&self, v: usize) -> f64 {
        self.weights.iter().filter(|(s, _)| s.contains(v)).map(|(_, p)| p).sum()
    }
}

pub fn hardcore_measure(g: &FiniteGraph, lambda: f64) -> Result<HardCoreMeasure> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidParameter(format!("lambda = {lambda} must be positive")));
    }
    let sets = enumerate_independent_sets(g)?;
    let raw: Vec<f64> = sets.iter().map(|s| lambda.powi(s.len() as i32)).collect();
    let z: f64 = raw.iter().sum();
    let weights = sets.into_iter().zip(raw).map(|(s, w)| (s, w / z)).collect();
    Ok(HardCoreMeasure { graph: g.clone(), lambda, weights, z })
}

/// The rooted tree truncated at `depth`: the root has `root_degree` children
/// and every other non-leaf node has `k`. With `root_degree = k + 1` every
/// non-leaf node has `k + 1` neighbours, as in the regular tree.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruncatedTree {
    pub k: u32,
    pub depth: usize,
    pub root_degree: u32,
    parent: Vec<Option<usize>>,
    children: Vec<Vec<usize>>,
    level: Vec<usize>,
}

impl TruncatedTree {
    pub fn new(k: u32, depth: usize, root_degree: u32) -> Result<Self> {
        if k == 0 || root_degree == 0 {
            return Err(Error::InvalidParameter("degrees must be positive".into()));
        }
        let mut parent = vec![None];
        let mut children = vec![Vec::new()];
        let mut level = vec![0];
        let mut frontier = vec![0usize];
        for d in 1..=depth {
            let mut next = Vec::new();
            for &p in &frontier {
                let deg = if p == 0 { root_degree } else { k };
                for _ in 0..deg {
                    let id = parent.len();
                    parent.push(Some(p));
                    children.push(Vec::new());
                    level.push(d);
                    children[p].push(id);
                    next.push(id);
                }
            }
            if parent.len() > 1 << 22 {
                return Err(Error::ResourceLimit("truncated tree is too large".into()));
            }
            frontier = next;
        }
        Ok(Self { k, depth, root_degree, parent, children, level })
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn parent(&self, v: usize) -> Option<usize> {
        self.parent[v]
    }

    pub fn children(&self, v: usize) -> &[usize] {
        &self.children[v]
    }

    pub fn level(&self, v: usize) -> usize {
        self.level[v]
    }

    /// Neighbours of `v`: the parent (if any) followed by the children.
    pub fn neighbours(&self, v: usize) -> Vec<usize> {
        self.parent[v].into_iter().chain(self.children[v].iter().copied()).collect()
    }

    /// Nodes whose whole neighbourhood in the infinite tree is present: the
    /// non-leaf, non-root nodes, plus the root when it has `k + 1` children.
    pub fn is_interior(&self, v: usize) -> bool {
        if v >= self.len() || self.level[v] == self.depth {
            return false;
        }
        v != 0 || self.root_degree == self.k + 1
    }

    pub fn interior_nodes(&self) -> Vec<usize> {
        (0..self.len()).filter(|&v| self.is_interior(v)).collect()
    }

    /// Edges as (parent, child) pairs.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        (1..self.len()).map(|v| (self.parent[v].expect("non-root"), v)).collect()
    }
}

/// Largest deviation of the single-site conditionals from the hard-core
/// rule at one node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GibbsResidual {
    pub node: usize,
    pub lambda: f64,
    pub patterns: usize,
    pub max_residual: f64,
    /// Conditional occupation probability when all neighbours are empty.
    pub free_conditional: f64,
}

fn require_hardcore(c: &BinaryChannel) -> Result<()> {
    if c.p11() != 0.0 || c.p10() != 1.0 || !(c.p00() > 0.0) {
        return Err(Error::InvalidParameter(
            "expected a hard-core channel with p10 = 1, p11 = 0 and p00 > 0".into(),
        ));
    }
    Ok(())
}

/// Activity of a hard-core channel on the tree with branching `k`.
pub fn channel_activity(c: &BinaryChannel, k: u32) -> Result<f64> {
    require_hardcore(c)?;
    Ok(lambda_of_w(c.p01() / c.p00(), k))
}

/// Conditional probability that `node` is 1 given its neighbours' values
/// (parent first, then children), under the broadcast law on `tree`.
/// Returns `None` for neighbour patterns of probability zero.
pub fn broadcast_conditional(
    c: &BinaryChannel,
    tree: &TruncatedTree,
    node: usize,
    neighbour_values: &[u8],
) -> Option<f64> {
    let parent = tree.parent(node);
    let (head, kids) = match parent {
        Some(_) => (Some(neighbour_values[0]), &neighbour_values[1..]),
        None => (None, neighbour_values),
    };
    let factor = |v: u8| -> f64 {
        let mut f = match head {
            Some(p) => c.p(p, v),
            None if v == 0 => c.pi0(),
            None => c.pi1(),
        };
        for &ch in kids {
            f *= c.p(v, ch);
        }
        f
    };
    let (f0, f1) = (factor(0), factor(1));
    if f0 + f1 > 0.0 {
        Some(f1 / (f0 + f1))
    } else {
        None
    }
}

/// Compares the broadcast conditionals at `node` with
/// `lambda/(1+lambda) * 1{all neighbours are 0}` over every neighbour pattern.
pub fn gibbs_conditional_check(c: &BinaryChannel, tree: &TruncatedTree, node: usize) -> Result<GibbsResidual> {
    let lambda = channel_activity(c, tree.k)?;
    if !tree.is_interior(node) {
        return Err(Error::NotInterior(node));
    }
    let deg = tree.neighbours(node).len();
    let free = lambda / (1.0 + lambda);
    let mut max_residual: f64 = 0.0;
    let mut patterns = 0;
    let mut free_conditional = f64::NAN;
    for mask in 0u32..1 << deg {
        let values: Vec<u8> = (0..deg).map(|i| (mask >> i & 1) as u8).collect();
        let Some(cond) = broadcast_conditional(c, tree, node, &values) else { continue };
        patterns += 1;
        let expected = if mask == 0 { free } else { 0.0 };
        if mask == 0 {
            free_conditional = cond;
        }
        max_residual = max_residual.max((cond - expected).abs());
    }
    Ok(GibbsResidual { node, lambda, patterns, max_residual, free_conditional })
}

/// Runs [`gibbs_conditional_check`] at every interior node.
pub fn gibbs_check_all(c: &BinaryChannel, tree: &TruncatedTree) -> Result<Vec<GibbsResidual>> {
    tree.interior_nodes()
        .into_iter()
        .map(|v| gibbs_conditional_check(c, tree, v))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndependenceVerdict {
    pub samples: usize,
    pub violations: usize,
    pub holds: bool,
}

/// Samples `n_samples` broadcasts and counts parent-child pairs that are
/// both occupied; a hard-core channel must never produce one.
pub fn brw_independence_check(
    c: &BinaryChannel,
    k: u32,
    depth: usize,
    root: RootSpec,
    n_samples: usize,
    seed: u64,
) -> Result<IndependenceVerdict> {
    if c.p11() != 0.0 {
        return Err(Error::InvalidParameter("the independence check needs p11 = 0".into()));
    }
    let violations = (0..n_samples as u64)
        .into_par_iter()
        .map(|s| {
            sample_broadcast(c, k, depth, root, derive_seed(seed, &[s])).map(|b| b.adjacent_ones())
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .sum();
    Ok(IndependenceVerdict { samples: n_samples, violations, holds: violations == 0 })
}
