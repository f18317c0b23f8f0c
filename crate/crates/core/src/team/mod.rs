//! Research-team identification: co-authorship prefiltering, the iterative
//! leader / core-member / non-core-member extraction procedure, and the
//! evaluation metrics.

mod metrics;

pub use metrics::{f1_scores, nmi};

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{GraphBuilder, GraphError, HeterogeneousGraph, NodeId, NodeTypeId};
use crate::influence::InfluenceScores;
use crate::model::{AttentionSnapshot, EmbeddingTable, ModelInputs};

#[derive(Debug, Error)]
pub enum TeamError {
    #[error("partitions cover different node universes")]
    UniverseMismatch,
    #[error("clusters within one partition overlap")]
    OverlappingClusters,
    #[error("empty partition")]
    EmptyPartition,
    #[error("label vectors have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("no embedding for author node {0}")]
    MissingEmbedding(NodeId),
    #[error("no influence score for author node {0}")]
    MissingInfluence(NodeId),
    #[error("identification config: {0}")]
    InvalidConfig(&'static str),
    #[error("prefilter removed every author node")]
    EmptyAfterFilter,
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Thresholds and counts steering identification. `similar_count` is the
/// number of embedding-similar candidates considered per leader;
/// `influential_count` the number of top attention-ranked leader neighbors
/// intersected with them.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IdentificationConfig {
    pub similar_count: usize,
    pub influential_count: usize,
    pub min_publications: u32,
    pub min_coauthor_frequency: u32,
    pub max_teams: Option<usize>,
    /// Emit unassignable authors as singleton teams (keeps NMI universes
    /// aligned); `false` sends them to the residual set instead.
    pub singleton_teams: bool,
}

impl Default for IdentificationConfig {
    fn default() -> Self {
        Self {
            similar_count: 15,
            influential_count: 10,
            min_publications: 10,
            min_coauthor_frequency: 5,
            max_teams: None,
            singleton_teams: true,
        }
    }
}

impl IdentificationConfig {
    pub fn validate(&self) -> Result<(), TeamError> {
        if self.similar_count == 0 {
            return Err(TeamError::InvalidConfig("similar_count must be >= 1"));
        }
        if self.influential_count == 0 {
            return Err(TeamError::InvalidConfig("influential_count must be >= 1"));
        }
        if self.max_teams == Some(0) {
            return Err(TeamError::InvalidConfig("max_teams must be >= 1 when set"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Team {
    pub leader: NodeId,
    pub core_members: Vec<NodeId>,
    pub non_core_members: Vec<NodeId>,
}

impl Team {
    pub fn members(&self) -> Vec<NodeId> {
        let mut v = Vec::with_capacity(1 + self.core_members.len() + self.non_core_members.len());
        v.push(self.leader);
        v.extend(&self.core_members);
        v.extend(&self.non_core_members);
        v
    }

    pub fn size(&self) -> usize {
        1 + self.core_members.len() + self.non_core_members.len()
    }
}

/// Disjoint teams in discovery order plus the residual unassigned authors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TeamPartition {
    pub teams: Vec<Team>,
    pub residual: Vec<NodeId>,
}

impl TeamPartition {
    /// Clusters for NMI: one per team, plus a singleton per residual node.
    pub fn clusters(&self) -> Vec<Vec<NodeId>> {
        let mut out: Vec<Vec<NodeId>> = self.teams.iter().map(Team::members).collect();
        out.extend(self.residual.iter().map(|&n| vec![n]));
        out
    }

    pub fn assigned_count(&self) -> usize {
        self.teams.iter().map(Team::size).sum()
    }
}

/// Keeps authors meeting the publication threshold whose strongest
/// co-author relation meets the frequency threshold, prunes publication
/// edges that realize no retained co-author pair, and keeps non-author
/// nodes only while they stay connected to the retained co-authorship
/// structure. Returns the re-frozen graph plus an old-id -> new-id map.
pub fn prefilter_graph(
    graph: &HeterogeneousGraph,
    author_type: NodeTypeId,
    cfg: &IdentificationConfig,
) -> Result<(HeterogeneousGraph, Vec<Option<NodeId>>), TeamError> {
    let n = graph.node_count();
    let pub_edge_types: Vec<_> = (0..graph.edge_type_names().len())
        .map(|i| crate::graph::EdgeTypeId(i as u16))
        .filter(|&et| match graph.edge_schema(et) {
            Some((a, b)) => (a == author_type) != (b == author_type),
            None => false,
        })
        .collect();

    // Distinct publication neighbors per author.
    let mut publications: BTreeMap<NodeId, BTreeSet<NodeId>> = BTreeMap::new();
    for &author in graph.nodes_of_type(author_type) {
        let mut pubs = BTreeSet::new();
        for &et in &pub_edge_types {
            pubs.extend(graph.neighbors(author, et).iter().map(|&(p, _)| p));
        }
        publications.insert(author, pubs);
    }

    // Shared-publication counts per author pair.
    let mut shared: BTreeMap<(NodeId, NodeId), u32> = BTreeMap::new();
    for &et in &pub_edge_types {
        let other_type = {
            let (a, b) = graph.edge_schema(et).unwrap();
            if a == author_type {
                b
            } else {
                a
            }
        };
        for &work in graph.nodes_of_type(other_type) {
            let authors: Vec<NodeId> = graph
                .neighbors(work, et)
                .iter()
                .map(|&(a, _)| a)
                .filter(|&a| graph.node_type_of(a) == author_type)
                .collect();
            for (i, &a) in authors.iter().enumerate() {
                for &b in &authors[i + 1..] {
                    *shared.entry((a.min(b), a.max(b))).or_insert(0) += 1;
                }
            }
        }
    }
    let shared_of = |a: NodeId, b: NodeId| *shared.get(&(a.min(b), a.max(b))).unwrap_or(&0);

    let retained: BTreeSet<NodeId> = graph
        .nodes_of_type(author_type)
        .iter()
        .copied()
        .filter(|&a| {
            if (publications[&a].len() as u32) < cfg.min_publications {
                return false;
            }
            if cfg.min_coauthor_frequency == 0 {
                return true;
            }
            shared
                .range((a, 0)..=(a, NodeId::MAX))
                .map(|(_, &c)| c)
                .chain(
                    shared
                        .iter()
                        .filter(|((_, b), _)| *b == a)
                        .map(|(_, &c)| c),
                )
                .any(|c| c >= cfg.min_coauthor_frequency)
        })
        .collect();
    if retained.is_empty() {
        return Err(TeamError::EmptyAfterFilter);
    }

    // A publication edge survives when its author is retained and the work
    // realizes at least one sufficiently frequent co-author pair for them.
    let keep_pub_edge = |author: NodeId, work: NodeId, et: crate::graph::EdgeTypeId| -> bool {
        if !retained.contains(&author) {
            return false;
        }
        if cfg.min_coauthor_frequency == 0 {
            return true;
        }
        graph
            .neighbors(work, et)
            .iter()
            .map(|&(b, _)| b)
            .any(|b| {
                b != author
                    && retained.contains(&b)
                    && shared_of(author, b) >= cfg.min_coauthor_frequency
            })
    };

    let is_pub_type = |et: crate::graph::EdgeTypeId| pub_edge_types.contains(&et);
    let mut kept_edges: Vec<(NodeId, NodeId, crate::graph::EdgeTypeId)> = Vec::new();
    let mut kept_non_authors: BTreeSet<NodeId> = BTreeSet::new();
    for &(src, dst, et) in graph.edges() {
        if is_pub_type(et) {
            let (author, work) = if graph.node_type_of(src) == author_type {
                (src, dst)
            } else {
                (dst, src)
            };
            if keep_pub_edge(author, work, et) {
                kept_edges.push((src, dst, et));
                kept_non_authors.insert(work);
            }
        }
    }
    // Non-author nodes chain outward from kept works (venues via papers).
    loop {
        let mut grew = false;
        for &(src, dst, et) in graph.edges() {
            if is_pub_type(et)
                || graph.node_type_of(src) == author_type
                || graph.node_type_of(dst) == author_type
            {
                continue;
            }
            if kept_non_authors.contains(&src) && kept_non_authors.insert(dst) {
                grew = true;
            }
            if kept_non_authors.contains(&dst) && kept_non_authors.insert(src) {
                grew = true;
            }
        }
        if !grew {
            break;
        }
    }
    for &(src, dst, et) in graph.edges() {
        if is_pub_type(et) {
            continue;
        }
        let author_endpoints =
            graph.node_type_of(src) == author_type || graph.node_type_of(dst) == author_type;
        let keep = if author_endpoints {
            // Author-author relations survive between retained authors.
            [src, dst].iter().all(|v| {
                (graph.node_type_of(*v) == author_type && retained.contains(v))
                    || kept_non_authors.contains(v)
            })
        } else {
            kept_non_authors.contains(&src) && kept_non_authors.contains(&dst)
        };
        if keep {
            kept_edges.push((src, dst, et));
        }
    }

    // Dense remap in old-id order.
    let mut remap: Vec<Option<NodeId>> = vec![None; n];
    let mut next: NodeId = 0;
    for old in 0..n as NodeId {
        let keep = if graph.node_type_of(old) == author_type {
            retained.contains(&old)
        } else {
            kept_non_authors.contains(&old)
        };
        if keep {
            remap[old as usize] = Some(next);
            next += 1;
        }
    }

    let mut builder = graph.to_builder_schema();
    for old in 0..n as NodeId {
        if let Some(new) = remap[old as usize] {
            let rec = graph.node(old);
            builder.add_node(new, rec.node_type, rec.label, rec.display_name.clone());
        }
    }
    for (src, dst, et) in kept_edges {
        builder.add_edge(remap[src as usize].unwrap(), remap[dst as usize].unwrap(), et);
    }
    Ok((builder.freeze()?, remap))
}

/// Iterative extraction: pick the most influential unrecognized author as
/// leader, gather the embedding-similar candidates, intersect with the
/// leader's most attended neighbors to form the core, sweep the leader's
/// remaining unrecognized neighbors as non-core, and repeat.
pub fn identify_teams(
    inputs: &ModelInputs,
    embeddings: &EmbeddingTable,
    influence: &InfluenceScores,
    attention: &AttentionSnapshot,
    cfg: &IdentificationConfig,
) -> Result<TeamPartition, TeamError> {
    cfg.validate()?;
    let n = inputs.node_count();
    for &id in &inputs.nodes {
        if embeddings.position_of(id).is_none() {
            return Err(TeamError::MissingEmbedding(id));
        }
        if influence.score_of(id).is_none() {
            return Err(TeamError::MissingInfluence(id));
        }
    }

    let mut unrecognized: BTreeSet<usize> = (0..n).collect();
    let mut teams = Vec::new();
    let mut residual = Vec::new();

    while !unrecognized.is_empty() {
        if let Some(max) = cfg.max_teams {
            if teams.len() >= max {
                residual.extend(unrecognized.iter().map(|&p| inputs.nodes[p]));
                unrecognized.clear();
                break;
            }
        }
        // (1) Leader: max influence, ties to the ascending node id.
        let leader = *unrecognized
            .iter()
            .max_by(|&&a, &&b| {
                let sa = influence.score_of(inputs.nodes[a]).unwrap();
                let sb = influence.score_of(inputs.nodes[b]).unwrap();
                sa.partial_cmp(&sb)
                    .unwrap()
                    .then(inputs.nodes[b].cmp(&inputs.nodes[a]))
            })
            .unwrap();
        unrecognized.remove(&leader);

        // (2) Embedding-similar candidates among the unrecognized.
        let leader_h = &embeddings.fused[embeddings.position_of(inputs.nodes[leader]).unwrap()];
        let mut by_similarity: Vec<(usize, f64)> = unrecognized
            .iter()
            .map(|&p| {
                let h = &embeddings.fused[embeddings.position_of(inputs.nodes[p]).unwrap()];
                (p, cosine(leader_h, h))
            })
            .collect();
        by_similarity.sort_by(|a, b| {
            b.1.partial_cmp(&a.1)
                .unwrap()
                .then(inputs.nodes[a.0].cmp(&inputs.nodes[b.0]))
        });
        let candidates: BTreeSet<usize> = by_similarity
            .iter()
            .take(cfg.similar_count)
            .map(|&(p, _)| p)
            .collect();

        // (3) Core: candidates ∩ the leader's top attended unrecognized
        // neighbors.
        let mut attended: Vec<(usize, f64)> = {
            let mut sums: BTreeMap<usize, (f64, u32)> = BTreeMap::new();
            for rows in &attention.rows {
                for &(nbr, coeff) in &rows[leader] {
                    let e = sums.entry(nbr).or_insert((0.0, 0));
                    e.0 += coeff;
                    e.1 += 1;
                }
            }
            sums.into_iter()
                .filter(|(p, _)| unrecognized.contains(p))
                .map(|(p, (sum, cnt))| (p, sum / f64::from(cnt)))
                .collect()
        };
        attended.sort_by(|a, b| {
            b.1.partial_cmp(&a.1)
                .unwrap()
                .then(inputs.nodes[a.0].cmp(&inputs.nodes[b.0]))
        });
        let influential: BTreeSet<usize> = attended
            .iter()
            .take(cfg.influential_count)
            .map(|&(p, _)| p)
            .collect();
        let core: Vec<usize> = candidates.intersection(&influential).copied().collect();
        for &p in &core {
            unrecognized.remove(&p);
        }

        // (4) Non-core: the leader's remaining unrecognized direct author
        // neighbors under any meta-path.
        let mut neighbor_set: BTreeSet<usize> = BTreeSet::new();
        for pi in 0..inputs.path_count() {
            neighbor_set.extend(inputs.neighbors_of(pi, leader).iter().copied());
        }
        let non_core: Vec<usize> = neighbor_set
            .into_iter()
            .filter(|p| unrecognized.contains(p))
            .collect();
        for &p in &non_core {
            unrecognized.remove(&p);
        }

        let team = Team {
            leader: inputs.nodes[leader],
            core_members: core.iter().map(|&p| inputs.nodes[p]).collect(),
            non_core_members: non_core.iter().map(|&p| inputs.nodes[p]).collect(),
        };
        if team.size() == 1 && !cfg.singleton_teams {
            residual.push(team.leader);
        } else {
            teams.push(team);
        }
    }
    residual.sort_unstable();
    Ok(TeamPartition { teams, residual })
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na < 1e-12 || nb < 1e-12 {
        return 0.0;
    }
    dot / (na * nb)
}

impl HeterogeneousGraph {
    /// Builder carrying only the interned name tables, for filtered rebuilds.
    fn to_builder_schema(&self) -> GraphBuilder {
        let mut b = GraphBuilder::new();
        for name in self.node_type_names() {
            b.intern_node_type(name);
        }
        for name in self.edge_type_names() {
            b.intern_edge_type(name);
        }
        for name in self.label_names() {
            b.intern_label(name);
        }
        b
    }
}
