//! The embedding model: per-meta-path structural attention, semantic
//! meta-path attention with learnable per-node preference vectors, a linear
//! softmax classifier, and the mini-batch SGD training loop.

mod checkpoint;
mod forward;
mod train;

pub use checkpoint::{checkpoint_to_bytes, load_checkpoint, save_checkpoint, CheckpointHeader};
pub use forward::{
    embed_all, mean_loss, predict, AttentionSnapshot, EmbeddingTable, ForwardPass,
};
pub use train::{train, TrainContext};

use rand::Rng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::autodiff::{KernelError, Tensor};
use crate::graph::{GraphError, HeterogeneousGraph, LabelId, MetaPathAdjacency, NodeId, NodeTypeId};
use crate::rng::stream_rng;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("meta-path {0} does not start and end on the same node type; the model embeds one target type")]
    AsymmetricMetaPath(String),
    #[error("meta-paths disagree on the target node type")]
    MixedStartTypes,
    #[error("at least one meta-path is required")]
    NoMetaPaths,
    #[error("node {node} has no neighbors under meta-path {path}")]
    EmptyNeighborhood { node: NodeId, path: String },
    #[error("node {0} in training batch has no label")]
    UnlabeledNodeInBatch(NodeId),
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("class {0} has no labeled node in the training set")]
    ClassMissingFromTrainingSet(LabelId),
    #[error("invalid hyperparameter: {0}")]
    InvalidHyper(&'static str),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
}

/// Training and architecture knobs. The two activations are fixed (relu for
/// neighbor aggregation, tanh for the semantic transform); the number of
/// meta-paths is derived from the adjacency list, never stored here.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Hyperparams {
    /// Structural embedding dimension d.
    pub embed_dim: usize,
    /// Semantic transform dimension k.
    pub semantic_dim: usize,
    /// Neighbor sample cap S; `None` disables sampling (full neighborhoods).
    pub neighbor_cap: Option<usize>,
    pub learning_rate: f64,
    /// Local epochs e.
    pub epochs: usize,
    /// Mini-batch size B.
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Self {
            embed_dim: 8,
            semantic_dim: 4,
            neighbor_cap: Some(10),
            learning_rate: 0.5,
            epochs: 50,
            batch_size: 16,
            seed: 42,
        }
    }
}

impl Hyperparams {
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.embed_dim == 0 {
            return Err(ModelError::InvalidHyper("embed_dim must be >= 1"));
        }
        if self.semantic_dim == 0 {
            return Err(ModelError::InvalidHyper("semantic_dim must be >= 1"));
        }
        if self.neighbor_cap == Some(0) {
            return Err(ModelError::InvalidHyper("neighbor_cap must be >= 1"));
        }
        if self.epochs == 0 {
            return Err(ModelError::InvalidHyper("epochs must be >= 1"));
        }
        if self.batch_size == 0 {
            return Err(ModelError::InvalidHyper("batch_size must be >= 1"));
        }
        // learning_rate == 0 is allowed: it is the standard no-op sanity run.
        if !(self.learning_rate >= 0.0) {
            return Err(ModelError::InvalidHyper("learning_rate must be >= 0"));
        }
        Ok(())
    }
}

/// Frozen per-target-type view of the graph the model trains on: the dense
/// normalized adjacency matrix per meta-path, ordered neighbor lists, and
/// labels. Node positions index `nodes`; all meta-paths share that space.
pub struct ModelInputs {
    pub target_type: NodeTypeId,
    pub nodes: Vec<NodeId>,
    pub labels: Vec<Option<LabelId>>,
    pub num_labels: usize,
    adjacencies: Vec<MetaPathAdjacency>,
    /// Per meta-path: dense row-major n x n normalized adjacency.
    dense: Vec<Vec<f64>>,
    /// Per meta-path, per position: neighbor positions in descending-weight,
    /// ascending-id order.
    neighbor_positions: Vec<Vec<Vec<usize>>>,
}

impl ModelInputs {
    pub fn new(
        graph: &HeterogeneousGraph,
        adjacencies: Vec<MetaPathAdjacency>,
    ) -> Result<Self, ModelError> {
        if adjacencies.is_empty() {
            return Err(ModelError::NoMetaPaths);
        }
        let target_type = adjacencies[0].meta_path().start_type();
        for adj in &adjacencies {
            let mp = adj.meta_path();
            if mp.start_type() != mp.end_type() {
                return Err(ModelError::AsymmetricMetaPath(mp.display().to_string()));
            }
            if mp.start_type() != target_type {
                return Err(ModelError::MixedStartTypes);
            }
        }
        let nodes: Vec<NodeId> = graph.nodes_of_type(target_type).to_vec();
        let n = nodes.len();
        let labels = nodes.iter().map(|&id| graph.node(id).label).collect();
        let num_labels = graph.label_count().max(1);

        let mut dense = Vec::with_capacity(adjacencies.len());
        let mut neighbor_positions = Vec::with_capacity(adjacencies.len());
        for adj in &adjacencies {
            let mut mat = Vec::with_capacity(n * n);
            let mut nbrs_all = Vec::with_capacity(n);
            for (pos, &node) in nodes.iter().enumerate() {
                debug_assert_eq!(adj.start_nodes()[pos], node);
                mat.extend(adj.dense_row(pos));
                let ordered = adj
                    .neighbors_via(node)
                    .expect("start node is of the start type");
                nbrs_all.push(
                    ordered
                        .into_iter()
                        .map(|(j, _)| adj.end_position(j).expect("neighbor in end space"))
                        .collect::<Vec<_>>(),
                );
            }
            dense.push(mat);
            neighbor_positions.push(nbrs_all);
        }
        Ok(Self {
            target_type,
            nodes,
            labels,
            num_labels,
            adjacencies,
            dense,
            neighbor_positions,
        })
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn path_count(&self) -> usize {
        self.adjacencies.len()
    }

    pub fn adjacencies(&self) -> &[MetaPathAdjacency] {
        &self.adjacencies
    }

    pub fn path_display(&self, pi: usize) -> &str {
        self.adjacencies[pi].meta_path().display()
    }

    /// Normalized adjacency row of node `pos` under meta-path `pi`.
    pub fn adjacency_row(&self, pi: usize, pos: usize) -> &[f64] {
        let n = self.nodes.len();
        &self.dense[pi][pos * n..(pos + 1) * n]
    }

    /// Neighbor positions of `pos` under `pi`, descending weight then
    /// ascending id.
    pub fn neighbors_of(&self, pi: usize, pos: usize) -> &[usize] {
        &self.neighbor_positions[pi][pos]
    }

    /// Positions of labeled nodes, ascending.
    pub fn labeled_positions(&self) -> Vec<usize> {
        (0..self.nodes.len())
            .filter(|&p| self.labels[p].is_some())
            .collect()
    }
}

/// All learnable tensors. Per meta-path: the adjacency transform `w_f`
/// (n x d) and the combine matrix `w_c` (2d x d); shared: the semantic
/// transform `w_p` (d x k) with bias `b_p`, the per-node preference matrix
/// `prefs` (n x k, one row per node), and the linear classifier.
pub struct ModelParams {
    pub per_path: Vec<PathParams>,
    pub w_p: Tensor,
    pub b_p: Tensor,
    pub prefs: Tensor,
    pub w_cls: Tensor,
    pub b_cls: Tensor,
}

pub struct PathParams {
    pub w_f: Tensor,
    pub w_c: Tensor,
}

impl ModelParams {
    /// Seeded Xavier-uniform initialization (zeros for biases). The draw
    /// order is fixed, so identical (shapes, seed) give identical tensors.
    pub fn init(inputs: &ModelInputs, hyper: &Hyperparams) -> Self {
        let n = inputs.node_count();
        let d = hyper.embed_dim;
        let k = hyper.semantic_dim;
        let l = inputs.num_labels;
        let mut rng = stream_rng(hyper.seed, "init");

        let per_path = (0..inputs.path_count())
            .map(|_| PathParams {
                w_f: xavier(&mut rng, n, d),
                w_c: xavier(&mut rng, 2 * d, d),
            })
            .collect();
        Self {
            per_path,
            w_p: xavier(&mut rng, d, k),
            b_p: Tensor::param(1, k, vec![0.0; k]),
            prefs: xavier(&mut rng, n, k),
            w_cls: xavier(&mut rng, d, l),
            b_cls: Tensor::param(1, l, vec![0.0; l]),
        }
    }

    /// Tensors in the canonical declared order used by flattening,
    /// checkpoints, and the gradient checker.
    pub fn named_tensors(&self) -> Vec<(String, Tensor)> {
        let mut out = Vec::new();
        for (i, pp) in self.per_path.iter().enumerate() {
            out.push((format!("w_f.{i}"), pp.w_f.clone()));
            out.push((format!("w_c.{i}"), pp.w_c.clone()));
        }
        out.push(("w_p".to_string(), self.w_p.clone()));
        out.push(("b_p".to_string(), self.b_p.clone()));
        out.push(("prefs".to_string(), self.prefs.clone()));
        out.push(("w_cls".to_string(), self.w_cls.clone()));
        out.push(("b_cls".to_string(), self.b_cls.clone()));
        out
    }

    pub fn zero_grad(&self) {
        for (_, t) in self.named_tensors() {
            t.zero_grad();
        }
    }

    pub fn sgd_step(&self, step_size: f64) {
        for (_, t) in self.named_tensors() {
            t.apply_gradient_step(step_size);
        }
    }

    /// Canonical flattening for the parameter server and trajectory checks.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (_, t) in self.named_tensors() {
            out.extend(t.to_vec());
        }
        out
    }

    pub fn flat_len(&self) -> usize {
        self.named_tensors().iter().map(|(_, t)| t.len()).sum()
    }

    /// Writes a flat vector back into the tensors; the inverse of `flatten`.
    pub fn unflatten(&self, flat: &[f64]) {
        let mut offset = 0;
        for (_, t) in self.named_tensors() {
            let len = t.len();
            t.set_values(&flat[offset..offset + len]);
            offset += len;
        }
        assert_eq!(offset, flat.len(), "flat vector length mismatch");
    }

    /// Independent copy (fresh buffers with the same values).
    pub fn clone_deep(&self) -> Self {
        let copy = |t: &Tensor| {
            let (r, c) = t.shape();
            Tensor::param(r, c, t.to_vec())
        };
        Self {
            per_path: self
                .per_path
                .iter()
                .map(|pp| PathParams {
                    w_f: copy(&pp.w_f),
                    w_c: copy(&pp.w_c),
                })
                .collect(),
            w_p: copy(&self.w_p),
            b_p: copy(&self.b_p),
            prefs: copy(&self.prefs),
            w_cls: copy(&self.w_cls),
            b_cls: copy(&self.b_cls),
        }
    }
}

fn xavier(rng: &mut ChaCha12Rng, rows: usize, cols: usize) -> Tensor {
    let limit = (6.0 / (rows + cols) as f64).sqrt();
    let values = (0..rows * cols)
        .map(|_| rng.gen_range(-limit..limit))
        .collect();
    Tensor::param(rows, cols, values)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::graph::{GraphBuilder, MetaPath};

    pub(crate) fn toy_graph() -> HeterogeneousGraph {
        let mut b = GraphBuilder::new();
        let author = b.intern_node_type("author");
        let paper = b.intern_node_type("paper");
        let writes = b.intern_edge_type("writes");
        let l0 = b.intern_label("red");
        let l1 = b.intern_label("blue");
        for id in 0..4 {
            b.add_node(id, author, Some(if id < 2 { l0 } else { l1 }), None);
        }
        for id in 4..7 {
            b.add_node(id, paper, None, None);
        }
        // Two co-author pairs plus a bridge paper.
        b.add_edge(0, 4, writes);
        b.add_edge(1, 4, writes);
        b.add_edge(2, 5, writes);
        b.add_edge(3, 5, writes);
        b.add_edge(1, 6, writes);
        b.add_edge(2, 6, writes);
        b.freeze().unwrap()
    }

    pub(crate) fn toy_inputs() -> ModelInputs {
        let g = toy_graph();
        let mp = MetaPath::from_type_names(&g, &["author", "paper", "author"]).unwrap();
        let adj = MetaPathAdjacency::build(&g, &mp);
        ModelInputs::new(&g, vec![adj]).unwrap()
    }

    #[test]
    fn inputs_align_nodes_and_labels() {
        let inputs = toy_inputs();
        assert_eq!(inputs.nodes, vec![0, 1, 2, 3]);
        assert_eq!(inputs.num_labels, 2);
        assert_eq!(inputs.labeled_positions(), vec![0, 1, 2, 3]);
        assert_eq!(inputs.neighbors_of(0, 0), &[1]);
    }

    #[test]
    fn init_is_seeded_and_reproducible() {
        let inputs = toy_inputs();
        let hyper = Hyperparams::default();
        let a = ModelParams::init(&inputs, &hyper);
        let b = ModelParams::init(&inputs, &hyper);
        assert_eq!(a.flatten(), b.flatten());
        let other = ModelParams::init(
            &inputs,
            &Hyperparams {
                seed: 7,
                ..hyper.clone()
            },
        );
        assert_ne!(a.flatten(), other.flatten());
    }

    #[test]
    fn flatten_unflatten_round_trip() {
        let inputs = toy_inputs();
        let hyper = Hyperparams::default();
        let params = ModelParams::init(&inputs, &hyper);
        let flat = params.flatten();
        let copy = params.clone_deep();
        copy.unflatten(&flat);
        assert_eq!(copy.flatten(), flat);
    }
}
