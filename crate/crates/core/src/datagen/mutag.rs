//! TU-collection graph ingestion (the MUTAG dataset format).
//!
//! A dataset directory holds three text files — an edge list `A.txt` with
//! 1-indexed `i, j` pairs, `graph_indicator.txt` mapping each node to its
//! graph, and `graph_labels.txt` with one class label per graph. Files may
//! also carry the conventional `<DatasetName>_` prefix.

use crate::error::{Error, Result};
use crate::persistence::Graph;
use std::path::Path;

/// Graphs plus one binary class label per graph (normalized to {0, 1}).
#[derive(Debug, Clone)]
pub struct LabeledGraphSet {
    pub graphs: Vec<Graph>,
    pub labels: Vec<usize>,
}

impl LabeledGraphSet {
    pub fn len(&self) -> usize {
        self.graphs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.graphs.is_empty()
    }
}

fn parse_error(file: &str, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        file: file.to_string(),
        line,
        message: message.into(),
    }
}

/// Parse the three TU files given as strings. Exposed for fixture tests; use
/// [`load_mutag`] for directories.
pub fn parse_tu_dataset(
    edges_txt: &str,
    indicator_txt: &str,
    labels_txt: &str,
) -> Result<LabeledGraphSet> {
    // Node -> graph assignment (both 1-indexed in the files).
    let mut node_graph: Vec<usize> = Vec::new();
    for (lineno, line) in indicator_txt.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let graph: usize = line.parse().map_err(|_| {
            parse_error("graph_indicator.txt", lineno + 1, format!("bad graph id {line:?}"))
        })?;
        if graph == 0 {
            return Err(parse_error(
                "graph_indicator.txt",
                lineno + 1,
                "graph ids are 1-indexed",
            ));
        }
        node_graph.push(graph - 1);
    }
    let n_graphs = node_graph.iter().max().map(|&g| g + 1).unwrap_or(0);
    for (i, window) in node_graph.windows(2).enumerate() {
        if window[1] < window[0] {
            return Err(Error::InconsistentIndices {
                file: "graph_indicator.txt".to_string(),
                message: format!("graph ids not nondecreasing at node {}", i + 2),
            });
        }
    }

    // Per-graph node counts and local renumbering.
    let mut node_local: Vec<usize> = Vec::with_capacity(node_graph.len());
    let mut graph_sizes = vec![0usize; n_graphs];
    for &g in &node_graph {
        node_local.push(graph_sizes[g]);
        graph_sizes[g] += 1;
    }

    let mut edges: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n_graphs];
    for (lineno, line) in edges_txt.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split(',').map(str::trim);
        let (a, b) = match (parts.next(), parts.next(), parts.next()) {
            (Some(a), Some(b), None) => (a, b),
            _ => return Err(parse_error("A.txt", lineno + 1, "expected two comma-separated ids")),
        };
        let parse_node = |s: &str| -> Result<usize> {
            let id: usize = s
                .parse()
                .map_err(|_| parse_error("A.txt", lineno + 1, format!("bad node id {s:?}")))?;
            if id == 0 || id > node_graph.len() {
                return Err(Error::InconsistentIndices {
                    file: "A.txt".to_string(),
                    message: format!("node id {id} out of range 1..={}", node_graph.len()),
                });
            }
            Ok(id - 1)
        };
        let (u, v) = (parse_node(a)?, parse_node(b)?);
        if node_graph[u] != node_graph[v] {
            return Err(Error::InconsistentIndices {
                file: "A.txt".to_string(),
                message: format!(
                    "edge ({}, {}) crosses graphs {} and {}",
                    u + 1,
                    v + 1,
                    node_graph[u] + 1,
                    node_graph[v] + 1
                ),
            });
        }
        edges[node_graph[u]].push((node_local[u], node_local[v]));
    }

    let mut raw_labels: Vec<i64> = Vec::new();
    for (lineno, line) in labels_txt.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        raw_labels.push(line.parse().map_err(|_| {
            parse_error("graph_labels.txt", lineno + 1, format!("bad label {line:?}"))
        })?);
    }
    if raw_labels.len() != n_graphs {
        return Err(Error::InconsistentIndices {
            file: "graph_labels.txt".to_string(),
            message: format!("{} labels for {} graphs", raw_labels.len(), n_graphs),
        });
    }
    let mut distinct = raw_labels.clone();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() > 2 {
        return Err(Error::InconsistentIndices {
            file: "graph_labels.txt".to_string(),
            message: format!("expected a binary label set, got {distinct:?}"),
        });
    }
    let labels: Vec<usize> = raw_labels
        .iter()
        .map(|l| distinct.iter().position(|d| d == l).unwrap())
        .collect();

    let graphs = graph_sizes
        .iter()
        .zip(edges)
        .map(|(&size, graph_edges)| Graph::new(size, graph_edges))
        .collect::<Result<Vec<_>>>()?;
    Ok(LabeledGraphSet { graphs, labels })
}

fn read_tu_file(dir: &Path, name: &str) -> Result<String> {
    let bare = dir.join(name);
    let candidates = if bare.exists() {
        vec![bare]
    } else {
        let prefix = dir
            .file_name()
            .map(|s| s.to_string_lossy().to_string())
            .unwrap_or_default();
        vec![dir.join(format!("{prefix}_{name}")), bare]
    };
    for path in &candidates {
        if path.exists() {
            return std::fs::read_to_string(path).map_err(|source| Error::Io {
                path: path.display().to_string(),
                source,
            });
        }
    }
    Err(Error::Io {
        path: dir.join(name).display().to_string(),
        source: std::io::Error::new(std::io::ErrorKind::NotFound, "missing TU dataset file"),
    })
}

/// Load a TU-format dataset from a directory.
pub fn load_mutag(dir: impl AsRef<Path>) -> Result<LabeledGraphSet> {
    let dir = dir.as_ref();
    let edges = read_tu_file(dir, "A.txt")?;
    let indicator = read_tu_file(dir, "graph_indicator.txt")?;
    let labels = read_tu_file(dir, "graph_labels.txt")?;
    parse_tu_dataset(&edges, &indicator, &labels)
}
