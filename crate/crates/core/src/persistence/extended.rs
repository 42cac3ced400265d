//! Extended persistence of a real-valued function on a graph's nodes.
//!
//! Computed via the cone construction: the ascending sublevel filtration of
//! the graph followed by the descending superlevel filtration of the cone.
//! Reduction of the combined boundary matrix yields the four pair types:
//!
//! * `Ord0`  — ascending birth, ascending death (merge-tree pairs),
//! * `Ext0+` — one per connected component, `(component min, component max)`,
//! * `Ext1-` — one per independent cycle, `(cycle max, cycle min)`,
//! * `Rel1`  — descending birth, descending death.
//!
//! Every coordinate is finite. Zero-persistence `Ord0`/`Rel1` pairs are
//! reduction artifacts and are dropped; extended pairs are structural (they
//! count components and cycles) and are always kept.

use crate::diagram::{DiagramPoint, ExtType, PersistenceDiagram};
use crate::error::{Error, Result};
use crate::persistence::graph::Graph;
use crate::persistence::reduce::reduce_columns;

#[derive(Debug, Clone, Copy, PartialEq)]
enum Cell {
    ConeVertex,
    AscVertex(usize),
    AscEdge(usize, usize),
    ConeEdge(usize),
    ConeTriangle(usize, usize),
}

impl Cell {
    fn dim(&self) -> u8 {
        match self {
            Cell::ConeVertex | Cell::AscVertex(_) => 0,
            Cell::AscEdge(..) | Cell::ConeEdge(_) => 1,
            Cell::ConeTriangle(..) => 2,
        }
    }
}

/// Extended persistence diagram of `(graph, node values)`.
///
/// Edges enter the ascending pass at the max endpoint value and the
/// descending pass at the min endpoint value.
pub fn extended_persistence_graph(graph: &Graph, values: &[f64]) -> Result<PersistenceDiagram> {
    let n = graph.n_nodes();
    if values.len() != n {
        return Err(Error::InvalidGraph(format!(
            "{} node values for {} nodes",
            values.len(),
            n
        )));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::DegenerateInput("non-finite node value"));
    }
    if n == 0 {
        return Ok(PersistenceDiagram::default());
    }

    // Ascending part: (value, dim, vertices) ascending.
    let mut ascending: Vec<(f64, Cell)> = (0..n).map(|v| (values[v], Cell::AscVertex(v))).collect();
    for &(u, v) in graph.edges() {
        ascending.push((values[u].max(values[v]), Cell::AscEdge(u, v)));
    }
    ascending.sort_by(|a, b| order_key(a).partial_cmp(&order_key(b)).unwrap());

    // Descending part: (value, dim, vertices) with value descending.
    let mut descending: Vec<(f64, Cell)> = (0..n).map(|v| (values[v], Cell::ConeEdge(v))).collect();
    for &(u, v) in graph.edges() {
        descending.push((values[u].min(values[v]), Cell::ConeTriangle(u, v)));
    }
    descending.sort_by(|a, b| {
        b.0.partial_cmp(&a.0)
            .unwrap()
            .then(a.1.dim().cmp(&b.1.dim()))
            .then(cell_verts(&a.1).cmp(&cell_verts(&b.1)))
    });

    let mut cells: Vec<(f64, Cell)> = Vec::with_capacity(1 + ascending.len() + descending.len());
    cells.push((f64::NEG_INFINITY, Cell::ConeVertex));
    cells.extend(ascending);
    cells.extend(descending);

    // Position lookup for boundary assembly. The cone vertex sits at 0.
    let cone_vertex = 0usize;
    debug_assert_eq!(cells[cone_vertex].1, Cell::ConeVertex);
    let mut asc_vertex_pos = vec![0usize; n];
    let mut cone_edge_pos = vec![0usize; n];
    let mut asc_edge_pos = std::collections::HashMap::new();
    for (i, (_, c)) in cells.iter().enumerate() {
        match *c {
            Cell::AscVertex(v) => asc_vertex_pos[v] = i,
            Cell::ConeEdge(v) => cone_edge_pos[v] = i,
            Cell::AscEdge(u, v) => {
                asc_edge_pos.insert((u, v), i);
            }
            _ => {}
        }
    }

    let columns: Vec<(u8, Vec<usize>)> = cells
        .iter()
        .map(|(_, c)| {
            let mut boundary = match *c {
                Cell::ConeVertex | Cell::AscVertex(_) => Vec::new(),
                Cell::AscEdge(u, v) => vec![asc_vertex_pos[u], asc_vertex_pos[v]],
                Cell::ConeEdge(v) => vec![cone_vertex, asc_vertex_pos[v]],
                Cell::ConeTriangle(u, v) => {
                    vec![asc_edge_pos[&(u, v)], cone_edge_pos[u], cone_edge_pos[v]]
                }
            };
            boundary.sort_unstable();
            (c.dim(), boundary)
        })
        .collect();

    let reduced = reduce_columns(&columns);
    let mut points = Vec::new();
    for (b, d) in reduced.pairs {
        let (birth_value, birth_cell) = cells[b];
        let (death_value, death_cell) = cells[d];
        let point = match (birth_cell, death_cell) {
            (Cell::AscVertex(_), Cell::AscEdge(..)) => {
                if birth_value == death_value {
                    continue;
                }
                DiagramPoint::extended(birth_value, death_value, 0, ExtType::Ordinary)
            }
            (Cell::AscVertex(_), Cell::ConeEdge(_)) => {
                DiagramPoint::extended(birth_value, death_value, 0, ExtType::ExtendedPlus)
            }
            (Cell::AscEdge(..), Cell::ConeTriangle(..)) => {
                DiagramPoint::extended(birth_value, death_value, 1, ExtType::ExtendedMinus)
            }
            (Cell::ConeEdge(_), Cell::ConeTriangle(..)) => {
                if birth_value == death_value {
                    continue;
                }
                DiagramPoint::extended(birth_value, death_value, 1, ExtType::Relative)
            }
            other => unreachable!("impossible pair {other:?}"),
        };
        points.push(point);
    }
    // The only essential class is the cone vertex itself.
    debug_assert_eq!(reduced.essential, vec![cone_vertex]);
    Ok(PersistenceDiagram::new(points))
}

fn order_key(entry: &(f64, Cell)) -> (f64, u8, [usize; 2]) {
    (entry.0, entry.1.dim(), cell_verts(&entry.1))
}

fn cell_verts(cell: &Cell) -> [usize; 2] {
    match *cell {
        Cell::ConeVertex => [usize::MAX, usize::MAX],
        Cell::AscVertex(v) | Cell::ConeEdge(v) => [v, usize::MAX],
        Cell::AscEdge(u, v) | Cell::ConeTriangle(u, v) => [u, v],
    }
}

impl PersistenceDiagram {
    /// Count points of one extended-persistence type.
    pub fn count_ext_type(&self, ext_type: ExtType) -> usize {
        self.points.iter().filter(|p| p.ext_type == ext_type).count()
    }
}
