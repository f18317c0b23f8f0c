//! Meta-paths, path-instance counting, and normalized adjacency vectors.

use std::collections::BTreeMap;

use super::{EdgeTypeId, GraphError, HeterogeneousGraph, NodeId, NodeTypeId};

/// An ordered node-type sequence with the edge type between consecutive
/// positions. A path instance is a concrete walk matching the sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MetaPath {
    node_types: Vec<NodeTypeId>,
    edge_types: Vec<EdgeTypeId>,
    symmetric: bool,
    /// Human-readable form kept for reports, e.g. "author-paper-author".
    display: String,
}

impl MetaPath {
    /// Path-instance counting is exponential in length; academic meta-paths
    /// are short, so longer sequences are a construction error.
    pub const MAX_LEN: usize = 5;

    /// Resolves a type-name sequence against the graph schema. The edge type
    /// between consecutive positions is the unique edge type connecting the
    /// two node types.
    pub fn from_type_names(
        graph: &HeterogeneousGraph,
        names: &[impl AsRef<str>],
    ) -> Result<Self, GraphError> {
        if names.len() < 2 {
            return Err(GraphError::MetaPathTooShort(names.len()));
        }
        if names.len() > Self::MAX_LEN {
            return Err(GraphError::MetaPathTooLong(names.len()));
        }
        let node_types: Vec<NodeTypeId> = names
            .iter()
            .map(|n| graph.node_type_id(n.as_ref()))
            .collect::<Result<_, _>>()?;
        let mut edge_types = Vec::with_capacity(node_types.len() - 1);
        for w in node_types.windows(2) {
            let pair = if w[0] <= w[1] {
                (w[0], w[1])
            } else {
                (w[1], w[0])
            };
            let et = (0..graph.edge_type_names().len())
                .map(|i| EdgeTypeId(i as u16))
                .find(|&et| graph.edge_schema(et) == Some(pair))
                .ok_or_else(|| {
                    GraphError::NoConnectingEdgeType(
                        graph.node_type_name(w[0]).to_string(),
                        graph.node_type_name(w[1]).to_string(),
                    )
                })?;
            edge_types.push(et);
        }
        let symmetric = node_types.first() == node_types.last();
        let display = names
            .iter()
            .map(|n| n.as_ref())
            .collect::<Vec<_>>()
            .join("-");
        Ok(Self {
            node_types,
            edge_types,
            symmetric,
            display,
        })
    }

    pub fn node_types(&self) -> &[NodeTypeId] {
        &self.node_types
    }

    pub fn start_type(&self) -> NodeTypeId {
        self.node_types[0]
    }

    pub fn end_type(&self) -> NodeTypeId {
        *self.node_types.last().unwrap()
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn display(&self) -> &str {
        &self.display
    }
}

/// Number of distinct walks from each start-type node to each end-type node
/// whose node-type sequence matches the meta-path. Walks that revisit the
/// start node internally are excluded, and the diagonal is omitted.
/// Multi-edge multiplicities multiply along the walk.
///
/// Returned as one sorted count map per start node, aligned with
/// `graph.nodes_of_type(start_type)`.
pub fn path_instance_counts(
    graph: &HeterogeneousGraph,
    path: &MetaPath,
) -> Vec<BTreeMap<NodeId, u64>> {
    let starts = graph.nodes_of_type(path.start_type());
    starts
        .iter()
        .map(|&start| {
            // Layered walk-count propagation along the type sequence.
            let mut frontier: BTreeMap<NodeId, u64> = BTreeMap::new();
            frontier.insert(start, 1);
            for (step, &et) in path.edge_types.iter().enumerate() {
                let next_type = path.node_types[step + 1];
                let mut next: BTreeMap<NodeId, u64> = BTreeMap::new();
                for (&node, &count) in &frontier {
                    for &(nbr, mult) in graph.neighbors(node, et) {
                        if graph.node_type_of(nbr) != next_type {
                            continue;
                        }
                        // The start node may not reappear: internally that is
                        // the walk constraint, at the endpoint the diagonal
                        // is omitted anyway.
                        if nbr == start {
                            continue;
                        }
                        *next.entry(nbr).or_insert(0) += count * u64::from(mult);
                    }
                }
                frontier = next;
            }
            frontier
        })
        .collect()
}

/// One row entry of a normalized meta-path adjacency vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdjEntry {
    pub node: NodeId,
    pub raw_count: f64,
    pub weight: f64,
}

/// Per-meta-path, L1 row-normalized path-instance vectors. Rows are indexed
/// by position in `start_nodes`; columns live in the `end_nodes` space.
#[derive(Debug, Clone)]
pub struct MetaPathAdjacency {
    meta_path: MetaPath,
    start_nodes: Vec<NodeId>,
    end_nodes: Vec<NodeId>,
    /// rows[i] sorted by neighbor node id.
    rows: Vec<Vec<AdjEntry>>,
    start_pos: BTreeMap<NodeId, usize>,
    end_pos: BTreeMap<NodeId, usize>,
}

impl MetaPathAdjacency {
    /// Builds the L1-normalized adjacency for `path` over `graph`. Empty rows
    /// stay empty; zero vectors are never normalized.
    pub fn build(graph: &HeterogeneousGraph, path: &MetaPath) -> Self {
        let counts = path_instance_counts(graph, path);
        let start_nodes = graph.nodes_of_type(path.start_type()).to_vec();
        let end_nodes = graph.nodes_of_type(path.end_type()).to_vec();
        let rows = counts
            .into_iter()
            .map(|row| {
                let total: u64 = row.values().sum();
                row.into_iter()
                    .map(|(node, c)| AdjEntry {
                        node,
                        raw_count: c as f64,
                        weight: c as f64 / total as f64,
                    })
                    .collect()
            })
            .collect();
        let start_pos = start_nodes
            .iter()
            .enumerate()
            .map(|(i, &n)| (n, i))
            .collect();
        let end_pos = end_nodes
            .iter()
            .enumerate()
            .map(|(i, &n)| (n, i))
            .collect();
        Self {
            meta_path: path.clone(),
            start_nodes,
            end_nodes,
            rows,
            start_pos,
            end_pos,
        }
    }

    pub fn meta_path(&self) -> &MetaPath {
        &self.meta_path
    }

    pub fn start_nodes(&self) -> &[NodeId] {
        &self.start_nodes
    }

    pub fn end_nodes(&self) -> &[NodeId] {
        &self.end_nodes
    }

    pub fn row_count(&self) -> usize {
        self.rows.len()
    }

    /// Row by position in `start_nodes`, sorted by neighbor id.
    pub fn row(&self, pos: usize) -> &[AdjEntry] {
        &self.rows[pos]
    }

    pub fn start_position(&self, node: NodeId) -> Option<usize> {
        self.start_pos.get(&node).copied()
    }

    pub fn end_position(&self, node: NodeId) -> Option<usize> {
        self.end_pos.get(&node).copied()
    }

    /// The normalized row as a dense vector over the end-node space.
    pub fn dense_row(&self, pos: usize) -> Vec<f64> {
        let mut v = vec![0.0; self.end_nodes.len()];
        for e in &self.rows[pos] {
            v[self.end_pos[&e.node]] = e.weight;
        }
        v
    }

    /// Neighbors of `node` sorted by descending weight, ties by ascending id.
    pub fn neighbors_via(&self, node: NodeId) -> Result<Vec<(NodeId, f64)>, GraphError> {
        let pos = self
            .start_position(node)
            .ok_or(GraphError::WrongStartType(node))?;
        let mut out: Vec<(NodeId, f64)> = self.rows[pos]
            .iter()
            .map(|e| (e.node, e.weight))
            .collect();
        out.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
        Ok(out)
    }
}
