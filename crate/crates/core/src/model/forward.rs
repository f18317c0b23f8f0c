//! Forward pass: structural attention per meta-path, semantic meta-path
//! attention, classification, and the cross-entropy batch loss. One
//! implementation serves training (gradients flow into the parameter
//! tensors) and inference (tape dropped afterwards).

use std::collections::HashMap;

use crate::autodiff::{Tape, Tensor};
use crate::graph::NodeId;

use super::{Hyperparams, ModelError, ModelInputs, ModelParams};

/// One forward computation over a fresh tape. Transformed adjacency rows are
/// cached per (meta-path, node) because neighbors repeat across centers
/// within a batch.
pub struct ForwardPass<'a> {
    pub tape: Tape,
    inputs: &'a ModelInputs,
    params: &'a ModelParams,
    transformed: HashMap<(usize, usize), Tensor>,
}

impl<'a> ForwardPass<'a> {
    pub fn new(inputs: &'a ModelInputs, params: &'a ModelParams) -> Self {
        Self {
            tape: Tape::new(),
            inputs,
            params,
            transformed: HashMap::new(),
        }
    }

    /// W_f^pi applied to the normalized adjacency row of `pos` (1 x d).
    fn transformed_row(&mut self, pi: usize, pos: usize) -> Result<Tensor, ModelError> {
        if let Some(t) = self.transformed.get(&(pi, pos)) {
            return Ok(t.clone());
        }
        let row = Tensor::row_vector(self.inputs.adjacency_row(pi, pos).to_vec());
        let z = self.tape.matmul(&row, &self.params.per_path[pi].w_f)?;
        self.transformed.insert((pi, pos), z.clone());
        Ok(z)
    }

    /// Node-level attention coefficients of `center` over `sample` under
    /// meta-path `pi`: softmax of the cosine similarities of transformed
    /// adjacency rows, taken over the sampled subset.
    pub fn node_attention(
        &mut self,
        pi: usize,
        center: usize,
        sample: &[usize],
    ) -> Result<Tensor, ModelError> {
        if sample.is_empty() {
            return Err(ModelError::EmptyNeighborhood {
                node: self.inputs.nodes[center],
                path: self.inputs.path_display(pi).to_string(),
            });
        }
        let z_center = self.transformed_row(pi, center)?;
        let mut scores = Vec::with_capacity(sample.len());
        for &j in sample {
            let z_j = self.transformed_row(pi, j)?;
            scores.push(self.tape.cosine_similarity(&z_center, &z_j)?);
        }
        let stacked = self.tape.stack_scalars(&scores)?;
        Ok(self.tape.softmax(&stacked)?)
    }

    /// Meta-path embedding of `center` (1 x d): relu-aggregated attention
    /// sum over the sample, spliced with the node's own transformed row,
    /// then combined through w_c. An empty sample contributes a zero
    /// aggregate and the formula still applies.
    pub fn structural_embedding(
        &mut self,
        pi: usize,
        center: usize,
        sample: &[usize],
    ) -> Result<Tensor, ModelError> {
        let coeffs = if sample.is_empty() {
            None
        } else {
            Some(self.node_attention(pi, center, sample)?)
        };
        self.structural_embedding_with(pi, center, sample, coeffs.as_ref())
    }

    fn structural_embedding_with(
        &mut self,
        pi: usize,
        center: usize,
        sample: &[usize],
        coeffs: Option<&Tensor>,
    ) -> Result<Tensor, ModelError> {
        let d = self.params.per_path[pi].w_c.shape().1;
        let z_center = self.transformed_row(pi, center)?;
        let aggregated = match coeffs {
            None => Tensor::zeros(1, d),
            Some(coeffs) => {
                let mut rows = Vec::with_capacity(sample.len());
                for &j in sample {
                    rows.push(self.transformed_row(pi, j)?);
                }
                let stacked = self.tape.vstack(&rows)?;
                let weighted = self.tape.matmul(coeffs, &stacked)?;
                self.tape.relu(&weighted)?
            }
        };
        let spliced = self.tape.concat(&aggregated, &z_center)?;
        Ok(self.tape.matmul(&spliced, &self.params.per_path[pi].w_c)?)
    }

    /// Semantic attention over the meta-path embeddings of `center`:
    /// tanh-transformed embeddings scored by cosine against the node's
    /// preference vector, softmax-normalized, then used to fuse the final
    /// embedding. Returns (weights 1 x M, fused 1 x d).
    pub fn semantic_attention(
        &mut self,
        center: usize,
        path_embeddings: &[Tensor],
    ) -> Result<(Tensor, Tensor), ModelError> {
        let pref = self.tape.row(&self.params.prefs, center)?;
        let mut scores = Vec::with_capacity(path_embeddings.len());
        for h in path_embeddings {
            let lin = self.tape.matmul(h, &self.params.w_p)?;
            let shifted = self.tape.add(&lin, &self.params.b_p)?;
            let transformed = self.tape.tanh(&shifted)?;
            scores.push(self.tape.cosine_similarity(&pref, &transformed)?);
        }
        let stacked = self.tape.stack_scalars(&scores)?;
        let weights = self.tape.softmax(&stacked)?;
        let matrix = self.tape.vstack(path_embeddings)?;
        let fused = self.tape.matmul(&weights, &matrix)?;
        Ok((weights, fused))
    }

    /// Class probabilities of a fused embedding (1 x L).
    pub fn classify(&mut self, fused: &Tensor) -> Result<Tensor, ModelError> {
        let logits = self.tape.matmul(fused, &self.params.w_cls)?;
        let shifted = self.tape.add(&logits, &self.params.b_cls)?;
        Ok(self.tape.softmax(&shifted)?)
    }

    /// Full per-node forward. `samples[pi]` is the neighbor subset for each
    /// meta-path (positions, in sample order).
    pub fn node_forward(
        &mut self,
        center: usize,
        samples: &[Vec<usize>],
    ) -> Result<NodeForward, ModelError> {
        debug_assert_eq!(samples.len(), self.inputs.path_count());
        let mut per_path = Vec::with_capacity(samples.len());
        let mut attention = Vec::with_capacity(samples.len());
        for (pi, sample) in samples.iter().enumerate() {
            let coeffs = if sample.is_empty() {
                None
            } else {
                Some(self.node_attention(pi, center, sample)?)
            };
            per_path.push(self.structural_embedding_with(pi, center, sample, coeffs.as_ref())?);
            attention.push(coeffs);
        }
        let (weights, fused) = self.semantic_attention(center, &per_path)?;
        Ok(NodeForward {
            per_path,
            attention,
            path_weights: weights,
            fused,
        })
    }

    /// Summed cross-entropy over a labeled batch: -sum_i ln p_i[y_i].
    pub fn batch_loss(
        &mut self,
        batch: &[(usize, Vec<Vec<usize>>)],
    ) -> Result<Tensor, ModelError> {
        let mut total: Option<Tensor> = None;
        for (center, samples) in batch {
            let label = self.inputs.labels[*center]
                .ok_or(ModelError::UnlabeledNodeInBatch(self.inputs.nodes[*center]))?;
            let fwd = self.node_forward(*center, samples)?;
            let probs = self.classify(&fwd.fused)?;
            let nll = self.tape.nll(&probs, label as usize)?;
            total = Some(match total {
                None => nll,
                Some(acc) => self.tape.add(&acc, &nll)?,
            });
        }
        total.ok_or(ModelError::EmptyTrainingSet)
    }
}

/// Tensors produced for one node by a forward pass. Attention is `None` for
/// meta-paths where the sample was empty.
pub struct NodeForward {
    pub per_path: Vec<Tensor>,
    pub attention: Vec<Option<Tensor>>,
    pub path_weights: Tensor,
    pub fused: Tensor,
}

/// Fused and per-meta-path embeddings plus semantic weights for every
/// target-type node.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    pub nodes: Vec<NodeId>,
    pub embed_dim: usize,
    /// fused[pos] = h_i, length d.
    pub fused: Vec<Vec<f64>>,
    /// per_path[pi][pos] = h_i^pi.
    pub per_path: Vec<Vec<Vec<f64>>>,
    /// path_weights[pos] = gamma_i over the M meta-paths.
    pub path_weights: Vec<Vec<f64>>,
}

impl EmbeddingTable {
    pub fn position_of(&self, node: NodeId) -> Option<usize> {
        self.nodes.binary_search(&node).ok()
    }
}

/// Full-neighborhood node-level attention, recorded during `embed_all`:
/// `rows[pi][pos]` lists (neighbor position, coefficient) over the complete
/// neighbor set of `pos`, in descending-weight neighbor order.
#[derive(Debug, Clone)]
pub struct AttentionSnapshot {
    pub rows: Vec<Vec<Vec<(usize, f64)>>>,
}

impl AttentionSnapshot {
    /// Attention `giver` pays to `receiver` under meta-path `pi`, if they
    /// are meta-path neighbors.
    pub fn paid(&self, pi: usize, giver: usize, receiver: usize) -> Option<f64> {
        self.rows[pi][giver]
            .iter()
            .find(|(j, _)| *j == receiver)
            .map(|(_, c)| *c)
    }
}

/// Deterministic full-neighborhood pass over every target-type node (no
/// sampling at inference).
pub fn embed_all(
    inputs: &ModelInputs,
    params: &ModelParams,
    hyper: &Hyperparams,
) -> Result<(EmbeddingTable, AttentionSnapshot), ModelError> {
    let n = inputs.node_count();
    let m = inputs.path_count();
    let d = hyper.embed_dim;
    let mut fused = Vec::with_capacity(n);
    let mut per_path = vec![Vec::with_capacity(n); m];
    let mut path_weights = Vec::with_capacity(n);
    let mut attention = vec![Vec::with_capacity(n); m];

    for pos in 0..n {
        let mut pass = ForwardPass::new(inputs, params);
        let samples: Vec<Vec<usize>> = (0..m)
            .map(|pi| inputs.neighbors_of(pi, pos).to_vec())
            .collect();
        let fwd = pass.node_forward(pos, &samples)?;
        fused.push(fwd.fused.to_vec());
        path_weights.push(fwd.path_weights.to_vec());
        for pi in 0..m {
            per_path[pi].push(fwd.per_path[pi].to_vec());
            let row = match &fwd.attention[pi] {
                Some(coeffs) => samples[pi]
                    .iter()
                    .copied()
                    .zip(coeffs.to_vec())
                    .collect::<Vec<_>>(),
                None => Vec::new(),
            };
            attention[pi].push(row);
        }
    }

    Ok((
        EmbeddingTable {
            nodes: inputs.nodes.clone(),
            embed_dim: d,
            fused,
            per_path,
            path_weights,
        },
        AttentionSnapshot { rows: attention },
    ))
}

/// Argmax class per position under full neighborhoods (ties break to the
/// smallest class index).
pub fn predict(
    inputs: &ModelInputs,
    params: &ModelParams,
    positions: &[usize],
) -> Result<Vec<u16>, ModelError> {
    let m = inputs.path_count();
    let mut out = Vec::with_capacity(positions.len());
    for &pos in positions {
        let mut pass = ForwardPass::new(inputs, params);
        let samples: Vec<Vec<usize>> = (0..m)
            .map(|pi| inputs.neighbors_of(pi, pos).to_vec())
            .collect();
        let fwd = pass.node_forward(pos, &samples)?;
        let probs = pass.classify(&fwd.fused)?.to_vec();
        let best = probs
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap().then(b.0.cmp(&a.0)))
            .map(|(i, _)| i as u16)
            .unwrap();
        out.push(best);
    }
    Ok(out)
}

/// Mean cross-entropy over labeled positions under full neighborhoods.
pub fn mean_loss(
    inputs: &ModelInputs,
    params: &ModelParams,
    positions: &[usize],
) -> Result<f64, ModelError> {
    let m = inputs.path_count();
    let batch: Vec<(usize, Vec<Vec<usize>>)> = positions
        .iter()
        .map(|&pos| {
            (
                pos,
                (0..m)
                    .map(|pi| inputs.neighbors_of(pi, pos).to_vec())
                    .collect(),
            )
        })
        .collect();
    let mut pass = ForwardPass::new(inputs, params);
    let loss = pass.batch_loss(&batch)?;
    Ok(loss.scalar_value() / positions.len() as f64)
}
