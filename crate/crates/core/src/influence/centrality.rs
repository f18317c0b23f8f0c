//! Classical centrality baselines on the co-authorship projection.
//!
//! The projection is the simple undirected graph whose vertices are the
//! meta-path start nodes with an edge wherever at least one path instance
//! connects the pair. Closeness is the harmonic variant so disconnected
//! projections stay well defined; eigenvector centrality is computed on the
//! largest connected component and 0 elsewhere.

use std::collections::{BTreeMap, VecDeque};

use crate::graph::{MetaPathAdjacency, NodeId};

use super::{InfluenceError, InfluenceMethod, InfluenceScores};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CentralityKind {
    Degree,
    Betweenness,
    Closeness,
    Eigenvector,
}

/// Simple undirected co-occurrence graph over positions 0..n.
#[derive(Debug, Clone)]
pub struct Projection {
    pub nodes: Vec<NodeId>,
    pub neighbors: Vec<Vec<usize>>,
}

impl Projection {
    /// Projects a meta-path adjacency: edge iff >= 1 path instance.
    pub fn from_adjacency(adj: &MetaPathAdjacency) -> Self {
        let nodes = adj.start_nodes().to_vec();
        let neighbors = (0..nodes.len())
            .map(|pos| {
                adj.row(pos)
                    .iter()
                    .filter_map(|e| adj.end_position(e.node))
                    .collect()
            })
            .collect();
        Self { nodes, neighbors }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn bfs_distances(&self, source: usize) -> Vec<Option<u32>> {
        let mut dist = vec![None; self.len()];
        dist[source] = Some(0);
        let mut queue = VecDeque::from([source]);
        while let Some(v) = queue.pop_front() {
            let dv = dist[v].unwrap();
            for &w in &self.neighbors[v] {
                if dist[w].is_none() {
                    dist[w] = Some(dv + 1);
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    fn components(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.len()];
        let mut out = Vec::new();
        for start in 0..self.len() {
            if seen[start] {
                continue;
            }
            let mut comp = Vec::new();
            let mut queue = VecDeque::from([start]);
            seen[start] = true;
            while let Some(v) = queue.pop_front() {
                comp.push(v);
                for &w in &self.neighbors[v] {
                    if !seen[w] {
                        seen[w] = true;
                        queue.push_back(w);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }
}

/// Computes one centrality measure over the projection.
pub fn centrality(
    projection: &Projection,
    kind: CentralityKind,
) -> Result<InfluenceScores, InfluenceError> {
    if projection.is_empty() {
        return Err(InfluenceError::EmptyGraph);
    }
    let values = match kind {
        CentralityKind::Degree => degree(projection),
        CentralityKind::Betweenness => betweenness(projection),
        CentralityKind::Closeness => harmonic_closeness(projection),
        CentralityKind::Eigenvector => eigenvector(projection),
    };
    let scores: BTreeMap<NodeId, f64> = projection
        .nodes
        .iter()
        .zip(values)
        .map(|(&id, v)| (id, v))
        .collect();
    let method = match kind {
        CentralityKind::Degree => InfluenceMethod::Degree,
        CentralityKind::Betweenness => InfluenceMethod::Betweenness,
        CentralityKind::Closeness => InfluenceMethod::Closeness,
        CentralityKind::Eigenvector => InfluenceMethod::Eigenvector,
    };
    Ok(InfluenceScores::new(method, scores))
}

fn degree(p: &Projection) -> Vec<f64> {
    let n = p.len();
    if n <= 1 {
        return vec![0.0; n];
    }
    p.neighbors
        .iter()
        .map(|nbrs| nbrs.len() as f64 / (n - 1) as f64)
        .collect()
}

/// Brandes' accumulation, normalized by 2/((n-1)(n-2)) for undirected graphs.
fn betweenness(p: &Projection) -> Vec<f64> {
    let n = p.len();
    let mut bc = vec![0.0f64; n];
    for source in 0..n {
        let mut stack = Vec::new();
        let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
        let mut sigma = vec![0.0f64; n];
        let mut dist = vec![-1i64; n];
        sigma[source] = 1.0;
        dist[source] = 0;
        let mut queue = VecDeque::from([source]);
        while let Some(v) = queue.pop_front() {
            stack.push(v);
            for &w in &p.neighbors[v] {
                if dist[w] < 0 {
                    dist[w] = dist[v] + 1;
                    queue.push_back(w);
                }
                if dist[w] == dist[v] + 1 {
                    sigma[w] += sigma[v];
                    preds[w].push(v);
                }
            }
        }
        let mut delta = vec![0.0f64; n];
        while let Some(w) = stack.pop() {
            for &v in &preds[w] {
                delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w]);
            }
            if w != source {
                bc[w] += delta[w];
            }
        }
    }
    // Each undirected pair was counted from both endpoints.
    for v in bc.iter_mut() {
        *v /= 2.0;
    }
    if n > 2 {
        let scale = 2.0 / ((n - 1) as f64 * (n - 2) as f64);
        for v in bc.iter_mut() {
            *v *= scale;
        }
    }
    bc
}

fn harmonic_closeness(p: &Projection) -> Vec<f64> {
    let n = p.len();
    if n <= 1 {
        return vec![0.0; n];
    }
    (0..n)
        .map(|v| {
            let dist = p.bfs_distances(v);
            let sum: f64 = dist
                .iter()
                .enumerate()
                .filter(|&(w, _)| w != v)
                .filter_map(|(_, d)| d.map(|d| 1.0 / f64::from(d)))
                .sum();
            sum / (n - 1) as f64
        })
        .collect()
}

/// Power iteration with a +I shift (keeps bipartite components from
/// oscillating), run on the largest component, L2-normalized; all other
/// nodes score 0. The largest component ties break toward the one holding
/// the smallest position.
fn eigenvector(p: &Projection) -> Vec<f64> {
    let n = p.len();
    let mut scores = vec![0.0f64; n];
    let components = p.components();
    let comp = components
        .iter()
        .max_by(|a, b| a.len().cmp(&b.len()).then(b[0].cmp(&a[0])))
        .expect("projection is nonempty");
    let m = comp.len();
    if m == 1 {
        scores[comp[0]] = 1.0;
        return scores;
    }
    let index: BTreeMap<usize, usize> = comp.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let mut x = vec![1.0 / (m as f64).sqrt(); m];
    for _ in 0..100_000 {
        let mut next = vec![0.0f64; m];
        for (i, &v) in comp.iter().enumerate() {
            next[i] = x[i]; // the +I shift
            for &w in &p.neighbors[v] {
                next[i] += x[index[&w]];
            }
        }
        let norm = next.iter().map(|v| v * v).sum::<f64>().sqrt();
        for v in next.iter_mut() {
            *v /= norm;
        }
        let residual = next
            .iter()
            .zip(&x)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        x = next;
        if residual < 1e-10 {
            break;
        }
    }
    for (i, &v) in comp.iter().enumerate() {
        scores[v] = x[i].max(0.0);
    }
    scores
}
