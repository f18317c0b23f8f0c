//! Weak classification baselines for the node-classification protocol:
//! majority class and multinomial logistic regression on raw
//! degree-per-edge-type features. Both are fully deterministic.

use hinforge_core::graph::{HeterogeneousGraph, NodeId};

/// Most frequent training label, ties to the smallest label id.
pub fn majority_baseline(train_labels: &[u16], num_labels: usize) -> u16 {
    let mut counts = vec![0usize; num_labels];
    for &l in train_labels {
        counts[l as usize] += 1;
    }
    counts
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
        .map(|(l, _)| l as u16)
        .unwrap_or(0)
}

/// Degree-per-edge-type feature rows for the given nodes, scaled by the
/// per-feature maximum over the training rows (plus a bias column).
pub fn degree_features(
    graph: &HeterogeneousGraph,
    nodes: &[NodeId],
    train_mask: &[bool],
) -> Vec<Vec<f64>> {
    let edge_types = graph.edge_type_names().len();
    let raw: Vec<Vec<f64>> = nodes
        .iter()
        .map(|&v| {
            (0..edge_types)
                .map(|et| f64::from(graph.degree(v, hinforge_core::graph::EdgeTypeId(et as u16))))
                .collect()
        })
        .collect();
    let mut scale = vec![1.0f64; edge_types];
    for (row, &is_train) in raw.iter().zip(train_mask) {
        if is_train {
            for (s, v) in scale.iter_mut().zip(row) {
                *s = s.max(*v);
            }
        }
    }
    raw.into_iter()
        .map(|row| {
            let mut out: Vec<f64> = row.iter().zip(&scale).map(|(v, s)| v / s).collect();
            out.push(1.0);
            out
        })
        .collect()
}

/// Full-batch gradient-descent multinomial logistic regression; zero init,
/// fixed schedule, no randomness.
pub struct LogisticBaseline {
    weights: Vec<Vec<f64>>, // per class: feature weights
}

impl LogisticBaseline {
    pub fn fit(
        features: &[Vec<f64>],
        labels: &[u16],
        num_labels: usize,
        iterations: usize,
        learning_rate: f64,
    ) -> Self {
        let dim = features[0].len();
        let n = features.len() as f64;
        let mut weights = vec![vec![0.0f64; dim]; num_labels];
        for _ in 0..iterations {
            let mut grad = vec![vec![0.0f64; dim]; num_labels];
            for (x, &y) in features.iter().zip(labels) {
                let p = softmax_scores(&weights, x);
                for (c, pc) in p.iter().enumerate() {
                    let err = pc - if c == y as usize { 1.0 } else { 0.0 };
                    for (g, xi) in grad[c].iter_mut().zip(x) {
                        *g += err * xi;
                    }
                }
            }
            for (wrow, grow) in weights.iter_mut().zip(&grad) {
                for (w, g) in wrow.iter_mut().zip(grow) {
                    *w -= learning_rate * g / n;
                }
            }
        }
        Self { weights }
    }

    pub fn predict(&self, features: &[Vec<f64>]) -> Vec<u16> {
        features
            .iter()
            .map(|x| {
                let p = softmax_scores(&self.weights, x);
                p.iter()
                    .enumerate()
                    .max_by(|a, b| a.1.partial_cmp(b.1).unwrap().then(b.0.cmp(&a.0)))
                    .unwrap()
                    .0 as u16
            })
            .collect()
    }
}

fn softmax_scores(weights: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    let logits: Vec<f64> = weights
        .iter()
        .map(|w| w.iter().zip(x).map(|(wi, xi)| wi * xi).sum())
        .collect();
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}
