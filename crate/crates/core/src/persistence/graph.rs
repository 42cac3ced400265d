//! Simple undirected graphs (the MUTAG-style inputs).

use crate::error::{Error, Result};

/// A simple undirected graph on nodes `0..n_nodes`. Edges are stored
/// normalized (`u < v`) and deduplicated.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n_nodes: usize,
    edges: Vec<(usize, usize)>,
}

impl Graph {
    pub fn new(n_nodes: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut normalized = Vec::new();
        for (u, v) in edges {
            if u == v {
                return Err(Error::InvalidGraph(format!("self-loop at node {u}")));
            }
            if u >= n_nodes || v >= n_nodes {
                return Err(Error::InvalidGraph(format!(
                    "edge ({u}, {v}) references a node outside 0..{n_nodes}"
                )));
            }
            normalized.push(if u < v { (u, v) } else { (v, u) });
        }
        normalized.sort_unstable();
        normalized.dedup();
        Ok(Self {
            n_nodes,
            edges: normalized,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n_nodes];
        for &(u, v) in &self.edges {
            deg[u] += 1;
            deg[v] += 1;
        }
        deg
    }

    /// Number of connected components (isolated nodes included).
    pub fn component_count(&self) -> usize {
        let mut parent: Vec<usize> = (0..self.n_nodes).collect();
        fn find(parent: &mut Vec<usize>, x: usize) -> usize {
            if parent[x] != x {
                let root = find(parent, parent[x]);
                parent[x] = root;
            }
            parent[x]
        }
        for &(u, v) in &self.edges {
            let (ru, rv) = (find(&mut parent, u), find(&mut parent, v));
            if ru != rv {
                parent[ru] = rv;
            }
        }
        (0..self.n_nodes)
            .filter(|&x| find(&mut parent, x) == x)
            .count()
    }

    /// Cycle rank `|E| - |V| + #components` (first Betti number).
    pub fn cycle_rank(&self) -> usize {
        self.edges.len() + self.component_count() - self.n_nodes
    }
}
