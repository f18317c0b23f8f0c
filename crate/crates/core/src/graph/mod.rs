//! Typed heterogeneous graph storage.
//!
//! Graphs are built through [`GraphBuilder`] and frozen into an immutable
//! [`HeterogeneousGraph`] with a per-type adjacency index. All downstream
//! modules consume frozen graphs only. Edges are undirected: adding
//! `(u, v, t)` makes `v` reachable from `u` and `u` from `v` under `t`.
//! Repeated edges between the same pair collapse into one entry with an
//! integer multiplicity.

mod meta_path;

pub use meta_path::{AdjEntry, MetaPath, MetaPathAdjacency};

use std::collections::BTreeMap;
use thiserror::Error;

/// Dense node identifier, 0..N-1.
pub type NodeId = u32;

/// Interned node type identifier, dense starting at 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeTypeId(pub u16);

/// Interned edge type identifier, dense starting at 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EdgeTypeId(pub u16);

/// Interned label identifier (class id), dense starting at 0.
pub type LabelId = u16;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("duplicate node id {0}")]
    DuplicateNodeId(NodeId),
    #[error("node ids are not dense: missing id {0}")]
    NonDenseIds(NodeId),
    #[error("edge endpoint {0} does not exist")]
    DanglingEdge(NodeId),
    #[error("edge type {edge_type:?} connects ({seen_a:?}, {seen_b:?}) but was declared over ({decl_a:?}, {decl_b:?})")]
    TypeMismatch {
        edge_type: String,
        decl_a: String,
        decl_b: String,
        seen_a: String,
        seen_b: String,
    },
    #[error("unknown type name {0:?}")]
    UnknownType(String),
    #[error("no edge type of the graph connects {0:?} and {1:?}")]
    NoConnectingEdgeType(String, String),
    #[error("meta-path has {0} node types; the cap is {max}", max = MetaPath::MAX_LEN)]
    MetaPathTooLong(usize),
    #[error("meta-path needs at least 2 node types, got {0}")]
    MetaPathTooShort(usize),
    #[error("node {0} is not of the meta-path start type")]
    WrongStartType(NodeId),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeRecord {
    pub id: NodeId,
    pub node_type: NodeTypeId,
    pub label: Option<LabelId>,
    pub display_name: Option<String>,
}

/// Raw edge as supplied to the builder (src, dst, type).
pub type RawEdge = (NodeId, NodeId, EdgeTypeId);

/// Mutable construction stage; `freeze` produces the immutable graph.
#[derive(Debug, Default)]
pub struct GraphBuilder {
    node_type_names: Vec<String>,
    edge_type_names: Vec<String>,
    label_names: Vec<String>,
    nodes: Vec<NodeRecord>,
    edges: Vec<RawEdge>,
}

impl GraphBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn intern_node_type(&mut self, name: &str) -> NodeTypeId {
        NodeTypeId(intern(&mut self.node_type_names, name))
    }

    pub fn intern_edge_type(&mut self, name: &str) -> EdgeTypeId {
        EdgeTypeId(intern(&mut self.edge_type_names, name))
    }

    pub fn intern_label(&mut self, name: &str) -> LabelId {
        intern(&mut self.label_names, name)
    }

    pub fn add_node(
        &mut self,
        id: NodeId,
        node_type: NodeTypeId,
        label: Option<LabelId>,
        display_name: Option<String>,
    ) {
        self.nodes.push(NodeRecord {
            id,
            node_type,
            label,
            display_name,
        });
    }

    pub fn add_edge(&mut self, src: NodeId, dst: NodeId, edge_type: EdgeTypeId) {
        self.edges.push((src, dst, edge_type));
    }

    /// Validates and freezes the graph. Node ids must be dense, endpoints
    /// must exist, and each edge type must connect one consistent unordered
    /// pair of node types (the first occurrence declares the schema).
    pub fn freeze(self) -> Result<HeterogeneousGraph, GraphError> {
        let n = self.nodes.len();
        let mut records: Vec<Option<NodeRecord>> = vec![None; n];
        for rec in self.nodes {
            let id = rec.id as usize;
            if id >= n {
                return Err(GraphError::NonDenseIds(rec.id));
            }
            if records[id].is_some() {
                return Err(GraphError::DuplicateNodeId(rec.id));
            }
            records[id] = Some(rec);
        }
        let nodes: Vec<NodeRecord> = records
            .into_iter()
            .enumerate()
            .map(|(id, r)| r.ok_or(GraphError::NonDenseIds(id as NodeId)))
            .collect::<Result<_, _>>()?;

        // Infer the endpoint schema per edge type and validate consistency.
        let mut schema: Vec<Option<(NodeTypeId, NodeTypeId)>> =
            vec![None; self.edge_type_names.len()];
        for &(src, dst, et) in &self.edges {
            for endpoint in [src, dst] {
                if endpoint as usize >= n {
                    return Err(GraphError::DanglingEdge(endpoint));
                }
            }
            let ta = nodes[src as usize].node_type;
            let tb = nodes[dst as usize].node_type;
            let pair = if ta <= tb { (ta, tb) } else { (tb, ta) };
            match schema[et.0 as usize] {
                None => schema[et.0 as usize] = Some(pair),
                Some(decl) if decl == pair => {}
                Some(decl) => {
                    let name = |t: NodeTypeId| self.node_type_names[t.0 as usize].clone();
                    return Err(GraphError::TypeMismatch {
                        edge_type: self.edge_type_names[et.0 as usize].clone(),
                        decl_a: name(decl.0),
                        decl_b: name(decl.1),
                        seen_a: name(pair.0),
                        seen_b: name(pair.1),
                    });
                }
            }
        }

        // Undirected adjacency with multi-edges collapsed into multiplicities.
        let mut adjacency: Vec<BTreeMap<EdgeTypeId, BTreeMap<NodeId, u32>>> =
            vec![BTreeMap::new(); n];
        for &(src, dst, et) in &self.edges {
            *adjacency[src as usize]
                .entry(et)
                .or_default()
                .entry(dst)
                .or_insert(0) += 1;
            if src != dst {
                *adjacency[dst as usize]
                    .entry(et)
                    .or_default()
                    .entry(src)
                    .or_insert(0) += 1;
            }
        }
        let adjacency = adjacency
            .into_iter()
            .map(|per_type| {
                per_type
                    .into_iter()
                    .map(|(et, nbrs)| (et, nbrs.into_iter().collect::<Vec<_>>()))
                    .collect()
            })
            .collect();

        let mut by_type: Vec<Vec<NodeId>> = vec![Vec::new(); self.node_type_names.len()];
        for rec in &nodes {
            by_type[rec.node_type.0 as usize].push(rec.id);
        }

        let mut edges = self.edges;
        edges.sort_unstable();

        Ok(HeterogeneousGraph {
            node_type_names: self.node_type_names,
            edge_type_names: self.edge_type_names,
            label_names: self.label_names,
            nodes,
            edges,
            adjacency,
            by_type,
            schema,
        })
    }
}

fn intern(names: &mut Vec<String>, name: &str) -> u16 {
    if let Some(pos) = names.iter().position(|s| s == name) {
        pos as u16
    } else {
        names.push(name.to_string());
        (names.len() - 1) as u16
    }
}

/// Immutable typed graph with a per-type adjacency index.
#[derive(Debug, Clone, PartialEq)]
pub struct HeterogeneousGraph {
    node_type_names: Vec<String>,
    edge_type_names: Vec<String>,
    label_names: Vec<String>,
    nodes: Vec<NodeRecord>,
    edges: Vec<RawEdge>,
    /// adjacency[v] -> sorted (edge type, sorted (neighbor, multiplicity)).
    adjacency: Vec<Vec<(EdgeTypeId, Vec<(NodeId, u32)>)>>,
    by_type: Vec<Vec<NodeId>>,
    schema: Vec<Option<(NodeTypeId, NodeTypeId)>>,
}

impl HeterogeneousGraph {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn node(&self, id: NodeId) -> &NodeRecord {
        &self.nodes[id as usize]
    }

    pub fn nodes(&self) -> &[NodeRecord] {
        &self.nodes
    }

    pub fn edges(&self) -> &[RawEdge] {
        &self.edges
    }

    pub fn node_type_of(&self, id: NodeId) -> NodeTypeId {
        self.nodes[id as usize].node_type
    }

    pub fn node_type_id(&self, name: &str) -> Result<NodeTypeId, GraphError> {
        self.node_type_names
            .iter()
            .position(|s| s == name)
            .map(|p| NodeTypeId(p as u16))
            .ok_or_else(|| GraphError::UnknownType(name.to_string()))
    }

    pub fn edge_type_id(&self, name: &str) -> Result<EdgeTypeId, GraphError> {
        self.edge_type_names
            .iter()
            .position(|s| s == name)
            .map(|p| EdgeTypeId(p as u16))
            .ok_or_else(|| GraphError::UnknownType(name.to_string()))
    }

    pub fn node_type_name(&self, t: NodeTypeId) -> &str {
        &self.node_type_names[t.0 as usize]
    }

    pub fn edge_type_name(&self, t: EdgeTypeId) -> &str {
        &self.edge_type_names[t.0 as usize]
    }

    pub fn node_type_names(&self) -> &[String] {
        &self.node_type_names
    }

    pub fn edge_type_names(&self) -> &[String] {
        &self.edge_type_names
    }

    pub fn label_names(&self) -> &[String] {
        &self.label_names
    }

    pub fn label_count(&self) -> usize {
        self.label_names.len()
    }

    /// All nodes of the given type, ascending by id.
    pub fn nodes_of_type(&self, t: NodeTypeId) -> &[NodeId] {
        &self.by_type[t.0 as usize]
    }

    /// Neighbors of `v` under edge type `et` with multiplicities, ascending by id.
    pub fn neighbors(&self, v: NodeId, et: EdgeTypeId) -> &[(NodeId, u32)] {
        self.adjacency[v as usize]
            .iter()
            .find(|(t, _)| *t == et)
            .map(|(_, nbrs)| nbrs.as_slice())
            .unwrap_or(&[])
    }

    /// Sum of multiplicities of all edges incident to `v` under `et`.
    pub fn degree(&self, v: NodeId, et: EdgeTypeId) -> u32 {
        self.neighbors(v, et).iter().map(|&(_, m)| m).sum()
    }

    /// The unordered node-type pair an edge type connects, if any edge of
    /// that type exists.
    pub fn edge_schema(&self, et: EdgeTypeId) -> Option<(NodeTypeId, NodeTypeId)> {
        self.schema[et.0 as usize]
    }

    /// A builder pre-loaded with this graph's exact contents; freezing it
    /// reproduces the graph (freeze is idempotent on its own output).
    pub fn to_builder(&self) -> GraphBuilder {
        GraphBuilder {
            node_type_names: self.node_type_names.clone(),
            edge_type_names: self.edge_type_names.clone(),
            label_names: self.label_names.clone(),
            nodes: self.nodes.clone(),
            edges: self.edges.clone(),
        }
    }
}
