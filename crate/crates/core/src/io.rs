//! Line-oriented, tab-separated file formats.
//!
//! Graph files:
//!   `N <node_id> <type_name> [<label_name>] [<display_name>]`
//!   `E <src_id> <dst_id> <edge_type_name>`
//! Blank lines and `#` comments are skipped. Label and display name are
//! optional; a literal `-` in the label column means "no label" when a
//! display name follows.
//!
//! Embedding exports are TSV with a header row and full round-trip f64
//! precision (shortest representation that parses back exactly).

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::graph::{GraphBuilder, GraphError, HeterogeneousGraph, NodeId};
use crate::model::EmbeddingTable;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

/// Parses a graph file and freezes it.
pub fn read_graph(path: &Path) -> Result<HeterogeneousGraph, IoError> {
    let text = fs::read_to_string(path)?;
    parse_graph(&text, &path.display().to_string())
}

pub fn parse_graph(text: &str, path: &str) -> Result<HeterogeneousGraph, IoError> {
    let mut b = GraphBuilder::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim_end_matches('\r');
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |message: String| IoError::Parse {
            path: path.to_string(),
            line: lineno + 1,
            message,
        };
        let fields: Vec<&str> = line.split('\t').collect();
        match fields[0] {
            "N" => {
                if fields.len() < 3 || fields.len() > 5 {
                    return Err(err(format!(
                        "node lines take 3-5 fields, got {}",
                        fields.len()
                    )));
                }
                let id: NodeId = fields[1]
                    .parse()
                    .map_err(|_| err(format!("bad node id {:?}", fields[1])))?;
                let node_type = b.intern_node_type(fields[2]);
                let label = match fields.get(3) {
                    Some(&"-") | None => None,
                    Some(name) => Some(b.intern_label(name)),
                };
                let display = fields.get(4).map(|s| s.to_string());
                b.add_node(id, node_type, label, display);
            }
            "E" => {
                if fields.len() != 4 {
                    return Err(err(format!(
                        "edge lines take 4 fields, got {}",
                        fields.len()
                    )));
                }
                let src: NodeId = fields[1]
                    .parse()
                    .map_err(|_| err(format!("bad src id {:?}", fields[1])))?;
                let dst: NodeId = fields[2]
                    .parse()
                    .map_err(|_| err(format!("bad dst id {:?}", fields[2])))?;
                let et = b.intern_edge_type(fields[3]);
                b.add_edge(src, dst, et);
            }
            other => return Err(err(format!("unknown record kind {other:?}"))),
        }
    }
    Ok(b.freeze()?)
}

/// Serializes a graph in the same format `read_graph` accepts; reading the
/// result back reproduces the graph.
pub fn write_graph(graph: &HeterogeneousGraph, path: &Path) -> Result<(), IoError> {
    fs::write(path, render_graph(graph))?;
    Ok(())
}

pub fn render_graph(graph: &HeterogeneousGraph) -> String {
    let mut out = String::new();
    for rec in graph.nodes() {
        let type_name = graph.node_type_name(rec.node_type);
        let label = rec
            .label
            .map(|l| graph.label_names()[l as usize].clone())
            .unwrap_or_else(|| "-".to_string());
        match &rec.display_name {
            Some(name) => {
                writeln!(out, "N\t{}\t{}\t{}\t{}", rec.id, type_name, label, name).unwrap()
            }
            None if rec.label.is_some() => {
                writeln!(out, "N\t{}\t{}\t{}", rec.id, type_name, label).unwrap()
            }
            None => writeln!(out, "N\t{}\t{}", rec.id, type_name).unwrap(),
        }
    }
    for &(src, dst, et) in graph.edges() {
        writeln!(out, "E\t{}\t{}\t{}", src, dst, graph.edge_type_name(et)).unwrap();
    }
    out
}

/// Embedding export: header `node_id\tv1..vd`, rows sorted by node id, full
/// f64 round-trip precision.
pub fn write_embeddings(table: &EmbeddingTable, path: &Path) -> Result<(), IoError> {
    fs::write(path, render_embeddings(table))?;
    Ok(())
}

pub fn render_embeddings(table: &EmbeddingTable) -> String {
    let mut out = String::new();
    out.push_str("node_id");
    for i in 0..table.embed_dim {
        write!(out, "\tv{}", i + 1).unwrap();
    }
    out.push('\n');
    for (pos, &node) in table.nodes.iter().enumerate() {
        write!(out, "{node}").unwrap();
        for v in &table.fused[pos] {
            write!(out, "\t{v}").unwrap();
        }
        out.push('\n');
    }
    out
}

/// Parses an embedding TSV back into (node, vector) rows.
pub fn read_embeddings(path: &Path) -> Result<Vec<(NodeId, Vec<f64>)>, IoError> {
    let text = fs::read_to_string(path)?;
    let mut rows = Vec::new();
    for (lineno, line) in text.lines().enumerate().skip(1) {
        if line.is_empty() {
            continue;
        }
        let err = |message: String| IoError::Parse {
            path: path.display().to_string(),
            line: lineno + 1,
            message,
        };
        let mut fields = line.split('\t');
        let node: NodeId = fields
            .next()
            .unwrap()
            .parse()
            .map_err(|_| err("bad node id".to_string()))?;
        let values: Vec<f64> = fields
            .map(|f| f.parse().map_err(|_| err(format!("bad value {f:?}"))))
            .collect::<Result<_, _>>()?;
        rows.push((node, values));
    }
    Ok(rows)
}

/// Sidecar label file for coloring exported embeddings: `node_id\tlabel`.
pub fn write_label_sidecar(labels: &[(NodeId, u16)], path: &Path) -> Result<(), IoError> {
    fs::write(path, render_label_sidecar(labels))?;
    Ok(())
}

pub fn render_label_sidecar(labels: &[(NodeId, u16)]) -> String {
    let mut out = String::from("node_id\tlabel\n");
    let mut sorted = labels.to_vec();
    sorted.sort_unstable();
    for (node, label) in sorted {
        writeln!(out, "{node}\t{label}").unwrap();
    }
    out
}

/// Ground-truth team file: `node_id\tteam_id` rows (header optional).
pub fn read_truth(path: &Path) -> Result<Vec<(NodeId, u32)>, IoError> {
    let text = fs::read_to_string(path)?;
    let mut rows = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.is_empty() || line.starts_with('#') || line.starts_with("node_id") {
            continue;
        }
        let err = |message: String| IoError::Parse {
            path: path.display().to_string(),
            line: lineno + 1,
            message,
        };
        let mut fields = line.split('\t');
        let node: NodeId = fields
            .next()
            .unwrap()
            .parse()
            .map_err(|_| err("bad node id".to_string()))?;
        let team: u32 = fields
            .next()
            .ok_or_else(|| err("missing team id".to_string()))?
            .parse()
            .map_err(|_| err("bad team id".to_string()))?;
        rows.push((node, team));
    }
    Ok(rows)
}

pub fn write_truth(truth: &[Vec<NodeId>], path: &Path) -> Result<(), IoError> {
    fs::write(path, render_truth(truth))?;
    Ok(())
}

pub fn render_truth(truth: &[Vec<NodeId>]) -> String {
    let mut out = String::from("node_id\tteam_id\n");
    let mut rows: Vec<(NodeId, usize)> = truth
        .iter()
        .enumerate()
        .flat_map(|(team, members)| members.iter().map(move |&m| (m, team)))
        .collect();
    rows.sort_unstable();
    for (node, team) in rows {
        writeln!(out, "{node}\t{team}").unwrap();
    }
    out
}
