//! Persistence-diagram computation: alpha complexes of planar point clouds,
//! Vietoris-Rips complexes of distance matrices, and extended persistence of
//! node-valued graphs.

pub mod alpha;
pub mod extended;
pub mod filtration;
pub mod graph;
pub mod hks;
pub mod reduce;
pub mod rips;

pub use alpha::{alpha_filtration, delaunay_2d};
pub use extended::extended_persistence_graph;
pub use filtration::{Filtration, Simplex};
pub use graph::Graph;
pub use hks::{hks, jacobi_eigen, normalized_laplacian};
pub use reduce::{reduce_boundary_matrix, PairKind, PersistencePair, PersistencePairs};
pub use rips::{euclidean_distance_matrix, rips_filtration, vietoris_rips_h1, MAX_RIPS_POINTS};

use crate::diagram::{DiagramPoint, PersistenceDiagram};
use crate::error::Result;

/// Turn reduction output into a network-ready diagram: essential classes are
/// dropped (the model needs finite coordinates) and dimensions above
/// `max_hom_dim` are discarded.
pub fn pairs_to_diagram(pairs: &PersistencePairs, max_hom_dim: usize) -> PersistenceDiagram {
    let mut points = Vec::new();
    for dim in 0..=max_hom_dim {
        for pair in pairs.dim(dim) {
            if pair.kind == PairKind::Finite {
                points.push(DiagramPoint::new(pair.birth, pair.death, dim));
            }
        }
    }
    PersistenceDiagram::new(points)
}

/// Alpha-complex persistence diagram (H0 + H1) of a planar point cloud.
pub fn alpha_diagram(points: &[(f64, f64)]) -> Result<PersistenceDiagram> {
    let filtration = alpha_filtration(points)?;
    let pairs = reduce_boundary_matrix(&filtration)?;
    Ok(pairs_to_diagram(&pairs, 1))
}

/// Rips H1 persistence diagram of a distance matrix.
pub fn rips_h1_diagram(dist: &[f64], n: usize, max_scale: f64) -> Result<PersistenceDiagram> {
    let pairs = vietoris_rips_h1(dist, n, max_scale)?;
    let full = pairs_to_diagram(&pairs, 1);
    Ok(PersistenceDiagram::new(
        full.points.into_iter().filter(|p| p.hom_dim == 1).collect(),
    ))
}
