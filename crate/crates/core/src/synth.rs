//! Synthetic planted-team heterogeneous graphs: the desk-scale evaluation
//! corpus. Authors are grouped into planted teams, each team owns a paper
//! pool and a dominant venue, and co-authorship is drawn per paper with an
//! intra-team probability and a (small) cross-team probability. Ground
//! truth is the planted team partition; author labels are the team ids.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{GraphBuilder, HeterogeneousGraph, NodeId};
use crate::rng::stream_rng;

#[derive(Debug, Error, PartialEq)]
pub enum SynthError {
    #[error("infeasible config: {0}")]
    InfeasibleConfig(String),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlantedConfig {
    pub team_count: usize,
    /// Inclusive team size range [min, max].
    pub team_size: (usize, usize),
    /// Inclusive papers-per-team range [min, max].
    pub papers_per_team: (usize, usize),
    /// Probability that a team member co-authors one of the team's papers.
    pub p_in: f64,
    /// Probability that any outside author joins one of the team's papers.
    pub p_out: f64,
    pub seed: u64,
}

impl Default for PlantedConfig {
    fn default() -> Self {
        Self {
            team_count: 5,
            team_size: (8, 15),
            papers_per_team: (8, 14),
            p_in: 0.6,
            p_out: 0.02,
            seed: 42,
        }
    }
}

impl PlantedConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        if self.team_count == 0 {
            return Err(SynthError::InfeasibleConfig("team_count must be >= 1".into()));
        }
        if self.team_size.0 < 2 || self.team_size.0 > self.team_size.1 {
            return Err(SynthError::InfeasibleConfig(
                "team_size range must satisfy 2 <= min <= max".into(),
            ));
        }
        if self.papers_per_team.0 < 1 || self.papers_per_team.0 > self.papers_per_team.1 {
            return Err(SynthError::InfeasibleConfig(
                "papers_per_team range must satisfy 1 <= min <= max".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.p_in) || !(0.0..=1.0).contains(&self.p_out) {
            return Err(SynthError::InfeasibleConfig(
                "probabilities must lie in [0, 1]".into(),
            ));
        }
        if self.p_out >= self.p_in {
            return Err(SynthError::InfeasibleConfig(
                "p_out must be strictly below p_in".into(),
            ));
        }
        if (self.team_size.0 as f64) * self.p_in < 1.0 {
            return Err(SynthError::InfeasibleConfig(
                "expected intra-team authors per paper is below 1".into(),
            ));
        }
        Ok(())
    }
}

/// Generator output: the frozen graph, the planted team partition (author
/// node ids per team, in team order), and (author node id, label) pairs.
pub struct PlantedGraph {
    pub graph: HeterogeneousGraph,
    pub truth: Vec<Vec<NodeId>>,
    pub labels: Vec<(NodeId, u16)>,
}

/// Draws a planted-team graph. Deterministic given the seed. Each team's
/// intra-team co-authorship is repaired into a single connected component
/// (bridging papers between fragments), so with `p_out = 0` the planted
/// teams are exactly the connected components of the co-authorship
/// projection.
pub fn gen_synthetic(cfg: &PlantedConfig) -> Result<PlantedGraph, SynthError> {
    cfg.validate()?;
    let mut rng = stream_rng(cfg.seed, "graph-gen");

    let team_sizes: Vec<usize> = (0..cfg.team_count)
        .map(|_| rng.gen_range(cfg.team_size.0..=cfg.team_size.1))
        .collect();
    let paper_counts: Vec<usize> = (0..cfg.team_count)
        .map(|_| rng.gen_range(cfg.papers_per_team.0..=cfg.papers_per_team.1))
        .collect();

    let mut truth: Vec<Vec<NodeId>> = Vec::with_capacity(cfg.team_count);
    let mut next: NodeId = 0;
    for &size in &team_sizes {
        truth.push((next..next + size as NodeId).collect());
        next += size as NodeId;
    }
    let author_count = next;
    let all_authors: Vec<NodeId> = (0..author_count).collect();

    // Paper author sets, drawn then repaired for intra-team connectivity.
    let mut papers: Vec<(usize, Vec<NodeId>)> = Vec::new();
    for (team, &count) in paper_counts.iter().enumerate() {
        for _ in 0..count {
            let mut authors: Vec<NodeId> = Vec::new();
            for &member in &truth[team] {
                if rng.gen_range(0.0..1.0) < cfg.p_in {
                    authors.push(member);
                }
            }
            if authors.is_empty() {
                // A paper needs an author; draw one member uniformly.
                let pick = rng.gen_range(0..truth[team].len());
                authors.push(truth[team][pick]);
            }
            for &outside in &all_authors {
                if outside >= truth[team][0] && outside <= *truth[team].last().unwrap() {
                    continue;
                }
                if cfg.p_out > 0.0 && rng.gen_range(0.0..1.0) < cfg.p_out {
                    authors.push(outside);
                }
            }
            authors.sort_unstable();
            papers.push((team, authors));
        }
    }

    // Repair: each team's intra-team co-authorship graph must be connected
    // and cover every member; bridge fragments with two-author papers.
    for (team, members) in truth.iter().enumerate() {
        loop {
            let comps = intra_components(members, &papers, team);
            if comps.len() <= 1 {
                break;
            }
            let a = comps[0][rng.gen_range(0..comps[0].len())];
            let b = comps[1][rng.gen_range(0..comps[1].len())];
            papers.push((team, vec![a.min(b), a.max(b)]));
        }
    }

    let mut b = GraphBuilder::new();
    let author_t = b.intern_node_type("author");
    let paper_t = b.intern_node_type("paper");
    let venue_t = b.intern_node_type("venue");
    let writes = b.intern_edge_type("writes");
    let published_in = b.intern_edge_type("published_in");

    let mut labels: Vec<(NodeId, u16)> = Vec::with_capacity(author_count as usize);
    for (team, members) in truth.iter().enumerate() {
        let label = b.intern_label(&format!("team{team}"));
        for &a in members {
            b.add_node(a, author_t, Some(label), Some(format!("a{a}")));
            labels.push((a, label));
        }
    }
    let venue_base = author_count;
    for team in 0..cfg.team_count {
        b.add_node(
            venue_base + team as NodeId,
            venue_t,
            None,
            Some(format!("v{team}")),
        );
    }
    let paper_base = venue_base + cfg.team_count as NodeId;
    for (i, (team, authors)) in papers.iter().enumerate() {
        let pid = paper_base + i as NodeId;
        b.add_node(pid, paper_t, None, Some(format!("t{team}_p{i}")));
        for &a in authors {
            b.add_edge(a, pid, writes);
        }
        b.add_edge(pid, venue_base + *team as NodeId, published_in);
    }

    let graph = b.freeze().expect("generator produces dense valid ids");

    // Separability assertion baked into the generator.
    if cfg.p_out == 0.0 {
        let comps = coauthor_components(&graph, author_count);
        assert_eq!(
            comps.len(),
            cfg.team_count,
            "planted teams must be the co-authorship components at p_out = 0"
        );
    }

    Ok(PlantedGraph {
        graph,
        truth,
        labels,
    })
}

/// Connected components of a team's intra-team co-authorship graph.
fn intra_components(
    members: &[NodeId],
    papers: &[(usize, Vec<NodeId>)],
    team: usize,
) -> Vec<Vec<NodeId>> {
    let index = |id: NodeId| members.iter().position(|&m| m == id);
    let mut parent: Vec<usize> = (0..members.len()).collect();
    fn find(parent: &mut Vec<usize>, x: usize) -> usize {
        if parent[x] != x {
            let root = find(parent, parent[x]);
            parent[x] = root;
        }
        parent[x]
    }
    for (t, authors) in papers {
        if *t != team {
            continue;
        }
        let local: Vec<usize> = authors.iter().filter_map(|&a| index(a)).collect();
        for w in local.windows(2) {
            let (ra, rb) = (find(&mut parent, w[0]), find(&mut parent, w[1]));
            if ra != rb {
                parent[ra] = rb;
            }
        }
    }
    let mut comps: std::collections::BTreeMap<usize, Vec<NodeId>> = Default::default();
    for (i, &m) in members.iter().enumerate() {
        let root = find(&mut parent, i);
        comps.entry(root).or_default().push(m);
    }
    comps.into_values().collect()
}

/// Connected components of the full co-authorship projection (authors
/// sharing at least one paper).
pub fn coauthor_components(graph: &HeterogeneousGraph, author_count: NodeId) -> Vec<Vec<NodeId>> {
    let writes = graph.edge_type_id("writes").expect("generator edge type");
    let mut parent: Vec<usize> = (0..author_count as usize).collect();
    fn find(parent: &mut Vec<usize>, x: usize) -> usize {
        if parent[x] != x {
            let root = find(parent, parent[x]);
            parent[x] = root;
        }
        parent[x]
    }
    let paper_t = graph.node_type_id("paper").expect("generator node type");
    for &p in graph.nodes_of_type(paper_t) {
        let authors: Vec<NodeId> = graph.neighbors(p, writes).iter().map(|&(a, _)| a).collect();
        for w in authors.windows(2) {
            let (ra, rb) = (
                find(&mut parent, w[0] as usize),
                find(&mut parent, w[1] as usize),
            );
            if ra != rb {
                parent[ra] = rb;
            }
        }
    }
    let mut comps: std::collections::BTreeMap<usize, Vec<NodeId>> = Default::default();
    for a in 0..author_count {
        let root = find(&mut parent, a as usize);
        comps.entry(root).or_default().push(a);
    }
    comps.into_values().collect()
}
