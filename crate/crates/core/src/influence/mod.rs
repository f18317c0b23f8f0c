//! Node-influence scoring: attention-received (NAC) scores from the trained
//! model, four classical centrality baselines on the co-authorship
//! projection, and the top-K intersection comparison between them.

mod centrality;

pub use centrality::{centrality, CentralityKind, Projection};

use std::collections::BTreeMap;

use thiserror::Error;

use crate::graph::NodeId;
use crate::model::{AttentionSnapshot, ModelInputs};

#[derive(Debug, Error, PartialEq)]
pub enum InfluenceError {
    #[error("top-k intersection: K = {k} exceeds the {n} scored nodes")]
    KTooLarge { k: usize, n: usize },
    #[error("score maps cover different node sets")]
    NodeSetMismatch,
    #[error("centrality on an empty graph")]
    EmptyGraph,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InfluenceMethod {
    Nac,
    Degree,
    Betweenness,
    Closeness,
    Eigenvector,
}

impl InfluenceMethod {
    pub fn tag(&self) -> &'static str {
        match self {
            InfluenceMethod::Nac => "nac",
            InfluenceMethod::Degree => "dc",
            InfluenceMethod::Betweenness => "bc",
            InfluenceMethod::Closeness => "cc",
            InfluenceMethod::Eigenvector => "ec",
        }
    }
}

/// Nonnegative influence score per node; ranking ties break by ascending
/// node id.
#[derive(Debug, Clone)]
pub struct InfluenceScores {
    pub method: InfluenceMethod,
    scores: BTreeMap<NodeId, f64>,
}

impl InfluenceScores {
    pub fn new(method: InfluenceMethod, scores: BTreeMap<NodeId, f64>) -> Self {
        debug_assert!(scores.values().all(|s| s.is_finite() && *s >= 0.0));
        Self { method, scores }
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn score_of(&self, node: NodeId) -> Option<f64> {
        self.scores.get(&node).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (NodeId, f64)> + '_ {
        self.scores.iter().map(|(&n, &s)| (n, s))
    }

    /// All nodes by descending score, ties by ascending id.
    pub fn ranked(&self) -> Vec<(NodeId, f64)> {
        let mut v: Vec<(NodeId, f64)> = self.iter().collect();
        v.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
        v
    }

    pub fn top_k(&self, k: usize) -> Vec<NodeId> {
        self.ranked().into_iter().take(k).map(|(n, _)| n).collect()
    }
}

/// Convergence tolerance (L1 step difference) for the attention fixed
/// point.
const NAC_TOL: f64 = 1e-12;
const NAC_MAX_ITERS: usize = 500_000;

/// Attention-received influence: the fixed point of the attention flow.
///
/// Per meta-path the node-level coefficients form a row-stochastic walk
/// (each node spreads its mass over the neighbors it attends to). The
/// influence of a node is its mass in the stationary distribution of the
/// lazy version of that walk; nodes that receive no attention decay to 0.
/// The per-path distributions are averaged over meta-paths, so scores lie
/// in [0, 1]. A one-level received-attention average would normalize away
/// exactly the hub structure the score exists to surface (it degenerates to
/// an inverse-degree statistic once attention saturates), so the recursive
/// reading is used. Requires a full-neighborhood snapshot (inference pass,
/// no sampling).
pub fn nac_influence(inputs: &ModelInputs, snapshot: &AttentionSnapshot) -> InfluenceScores {
    let n = inputs.node_count();
    let m = inputs.path_count();
    let mut accumulated = vec![0.0f64; n];
    for rows in &snapshot.rows {
        let mass = stationary_attention_mass(rows, n);
        for (acc, v) in accumulated.iter_mut().zip(&mass) {
            *acc += v;
        }
    }
    let scores = inputs
        .nodes
        .iter()
        .enumerate()
        .map(|(pos, &id)| (id, accumulated[pos] / m as f64))
        .collect();
    InfluenceScores::new(InfluenceMethod::Nac, scores)
}

/// Stationary distribution of the lazy attention walk for one meta-path:
/// x <- (x_active + C^T x) / 2, renormalized each step. Rows without
/// neighbors drop their mass, so nodes outside the attention flow go to 0.
fn stationary_attention_mass(rows: &[Vec<(usize, f64)>], n: usize) -> Vec<f64> {
    if n == 0 {
        return Vec::new();
    }
    let mut x = vec![1.0 / n as f64; n];
    for _ in 0..NAC_MAX_ITERS {
        let mut next = vec![0.0f64; n];
        for (giver, row) in rows.iter().enumerate() {
            if row.is_empty() {
                continue;
            }
            next[giver] += 0.5 * x[giver];
            for &(receiver, coeff) in row {
                next[receiver] += 0.5 * x[giver] * coeff;
            }
        }
        let total: f64 = next.iter().sum();
        if total == 0.0 {
            return next;
        }
        for v in next.iter_mut() {
            *v /= total;
        }
        let diff: f64 = next.iter().zip(&x).map(|(a, b)| (a - b).abs()).sum();
        x = next;
        if diff < NAC_TOL {
            break;
        }
    }
    x
}

/// |topK(a) ∩ topK(b)| / K with deterministic tie-breaking. Both score maps
/// must cover the same node set.
pub fn topk_intersection(
    a: &InfluenceScores,
    b: &InfluenceScores,
    k: usize,
) -> Result<f64, InfluenceError> {
    if !a
        .scores
        .keys()
        .eq(b.scores.keys()) {
        return Err(InfluenceError::NodeSetMismatch);
    }
    if k == 0 || k > a.len() {
        return Err(InfluenceError::KTooLarge { k, n: a.len() });
    }
    let top_a = a.top_k(k);
    let top_b: std::collections::BTreeSet<NodeId> = b.top_k(k).into_iter().collect();
    let shared = top_a.iter().filter(|n| top_b.contains(n)).count();
    Ok(shared as f64 / k as f64)
}
