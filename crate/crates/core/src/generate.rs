//! Random graphs, the graph-problem formulations, and combinatorial auctions.

use std::collections::BTreeSet;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mip::{ConstraintRow, MipInstance, Relation, Sense};

pub(crate) fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Simple undirected graph; edges stored as `(u, v)` with `u < v`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UGraph {
    pub nnodes: usize,
    pub edges: BTreeSet<(usize, usize)>,
}

impl UGraph {
    pub fn new(nnodes: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut set = BTreeSet::new();
        for (u, v) in edges {
            if u == v {
                return Err(Error::InvalidArgument(format!("self-loop at node {u}")));
            }
            if u.max(v) >= nnodes {
                return Err(Error::InvalidArgument(format!("edge ({u}, {v}) out of range")));
            }
            set.insert((u.min(v), u.max(v)));
        }
        Ok(UGraph { nnodes, edges: set })
    }

    pub fn nedges(&self) -> usize {
        self.edges.len()
    }

    pub fn neighbors(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.nnodes];
        for &(u, v) in &self.edges {
            adj[u].push(v);
            adj[v].push(u);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        adj
    }
}

/// Erdős-Rényi graph where each pair is present with probability
/// `min(1, affinity / (n - 1))`, i.e. expected degree `affinity`.
pub fn gen_graph(n: usize, affinity: usize, seed: u64) -> Result<UGraph> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("graph needs at least 2 nodes, got {n}")));
    }
    if affinity < 1 {
        return Err(Error::InvalidArgument("affinity must be at least 1".into()));
    }
    let p = (affinity as f64 / (n - 1) as f64).min(1.0);
    let mut rng = rng(seed);
    let mut edges = BTreeSet::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.random_bool(p) {
                edges.insert((u, v));
            }
        }
    }
    Ok(UGraph { nnodes: n, edges })
}

fn unit_row(cols: impl IntoIterator<Item = usize>, rel: Relation) -> ConstraintRow {
    ConstraintRow::new(cols.into_iter().map(|j| (j, 1.0)), rel, 1.0)
}

/// Maximum independent set: `max Σx` s.t. `x_u + x_v <= 1` per edge.
pub fn formulate_misp(g: &UGraph) -> MipInstance {
    let rows = g.edges.iter().map(|&(u, v)| unit_row([u, v], Relation::Le)).collect();
    MipInstance::new("misp", Sense::Maximize, vec![1.0; g.nnodes], rows)
}

/// Minimum dominating set: `min Σx` s.t. `x_v + Σ_{u∈N(v)} x_u >= 1` per node.
pub fn formulate_dsp(g: &UGraph) -> MipInstance {
    let rows = g
        .neighbors()
        .into_iter()
        .enumerate()
        .map(|(v, nb)| unit_row(std::iter::once(v).chain(nb), Relation::Ge))
        .collect();
    MipInstance::new("dsp", Sense::Minimize, vec![1.0; g.nnodes], rows)
}

/// Minimum vertex cover: `min Σx` s.t. `x_u + x_v >= 1` per edge.
pub fn formulate_vcp(g: &UGraph) -> MipInstance {
    let rows = g.edges.iter().map(|&(u, v)| unit_row([u, v], Relation::Ge)).collect();
    MipInstance::new("vcp", Sense::Minimize, vec![1.0; g.nnodes], rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapBid {
    pub bundle: BTreeSet<usize>,
    pub price: f64,
}

/// Winner determination: `max Σ p_i x_i` with one `<= 1` row for each item
/// that appears in at least one bundle.
pub fn formulate_cap(n_items: usize, bids: &[CapBid]) -> Result<MipInstance> {
    let mut by_item = vec![Vec::new(); n_items];
    for (i, bid) in bids.iter().enumerate() {
        if bid.bundle.is_empty() {
            return Err(Error::InvalidArgument(format!("bid {i} has an empty bundle")));
        }
        if bid.price.is_nan() || bid.price <= 0.0 {
            return Err(Error::InvalidArgument(format!("bid {i} has non-positive price")));
        }
        for &item in &bid.bundle {
            if item >= n_items {
                return Err(Error::InvalidArgument(format!("bid {i} names item {item}")));
            }
            by_item[item].push(i);
        }
    }
    let rows = by_item
        .into_iter()
        .filter(|bidders| !bidders.is_empty())
        .map(|bidders| unit_row(bidders, Relation::Le))
        .collect();
    let obj = bids.iter().map(|b| b.price).collect();
    Ok(MipInstance::new("cap", Sense::Maximize, obj, rows))
}

const CAP_CONTINUE_PROB: f64 = 0.8;
const CAP_PRICE_SCALE: f64 = 10.0;
const CAP_PRICE_NOISE: f64 = 0.2;

/// Bids with correlated bundles: a symmetric item-compatibility matrix is
/// drawn first, then each bundle grows by a compatibility-weighted walk from a
/// random start item, continuing with probability 0.8 per step (mean size 5).
/// Price is `size * (1 + U(-0.2, 0.2)) * 10`.
pub fn gen_cap_bids(n_items: usize, n_bids: usize, seed: u64) -> Result<Vec<CapBid>> {
    if n_items < 1 || n_bids < 1 {
        return Err(Error::InvalidArgument("CAP needs at least one item and one bid".into()));
    }
    let mut rng = rng(seed);
    let mut compat = vec![0.0; n_items * n_items];
    for a in 0..n_items {
        for b in a + 1..n_items {
            let w: f64 = rng.random();
            compat[a * n_items + b] = w;
            compat[b * n_items + a] = w;
        }
    }
    let mut bids = Vec::with_capacity(n_bids);
    for _ in 0..n_bids {
        let mut current = rng.random_range(0..n_items);
        let mut bundle = BTreeSet::from([current]);
        while bundle.len() < n_items && rng.random_bool(CAP_CONTINUE_PROB) {
            let weights = &compat[current * n_items..(current + 1) * n_items];
            let total: f64 = (0..n_items)
                .filter(|k| !bundle.contains(k))
                .map(|k| weights[k])
                .sum();
            let next = if total > 0.0 {
                let mut target = rng.random::<f64>() * total;
                let mut pick = None;
                for k in (0..n_items).filter(|k| !bundle.contains(k)) {
                    pick = Some(k);
                    target -= weights[k];
                    if target <= 0.0 {
                        break;
                    }
                }
                pick.expect("an item outside the bundle exists")
            } else {
                let outside: Vec<usize> = (0..n_items).filter(|k| !bundle.contains(k)).collect();
                outside[rng.random_range(0..outside.len())]
            };
            bundle.insert(next);
            current = next;
        }
        let noise = rng.random_range(-CAP_PRICE_NOISE..CAP_PRICE_NOISE);
        let price = bundle.len() as f64 * (1.0 + noise) * CAP_PRICE_SCALE;
        bids.push(CapBid { bundle, price });
    }
    Ok(bids)
}

pub fn gen_cap(n_items: usize, n_bids: usize, seed: u64) -> Result<MipInstance> {
    let bids = gen_cap_bids(n_items, n_bids, seed)?;
    formulate_cap(n_items, &bids)
}
