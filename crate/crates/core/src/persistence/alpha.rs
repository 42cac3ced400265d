//! Two-dimensional alpha-complex filtrations on top of a Delaunay
//! triangulation.
//!
//! Filtration values are radii (not squared radii): vertices enter at 0,
//! each triangle at its circumradius, and each edge at the radius of its
//! smallest enclosing empty ball — half the edge length when the diametral
//! ball is Gabriel, otherwise the smallest adjacent circumradius.

use crate::error::{Error, Result};
use crate::persistence::filtration::{Filtration, Simplex};
use spade::{DelaunayTriangulation, HasPosition, Point2, Triangulation};
use std::collections::HashMap;

struct IndexedPoint {
    position: Point2<f64>,
    index: usize,
}

impl HasPosition for IndexedPoint {
    type Scalar = f64;

    fn position(&self) -> Point2<f64> {
        self.position
    }
}

fn check_duplicates(points: &[(f64, f64)]) -> Result<()> {
    let mut seen: HashMap<(u64, u64), usize> = HashMap::with_capacity(points.len());
    for (i, p) in points.iter().enumerate() {
        if let Some(j) = seen.insert((p.0.to_bits(), p.1.to_bits()), i) {
            return Err(Error::DuplicatePoints(j, i));
        }
    }
    Ok(())
}

/// Delaunay triangulation of a planar point set; triangles are returned as
/// sorted vertex triples referring to input positions.
///
/// Exactly cocircular quadruples are resolved deterministically by the
/// insertion order (points are inserted in input order).
pub fn delaunay_2d(points: &[(f64, f64)]) -> Result<Vec<[usize; 3]>> {
    if points.len() < 3 {
        return Err(Error::DegenerateInput("need at least 3 points"));
    }
    check_duplicates(points)?;
    let mut triangulation: DelaunayTriangulation<IndexedPoint> = DelaunayTriangulation::new();
    for (index, &(x, y)) in points.iter().enumerate() {
        if !x.is_finite() || !y.is_finite() {
            return Err(Error::DegenerateInput("non-finite point coordinate"));
        }
        triangulation
            .insert(IndexedPoint {
                position: Point2::new(x, y),
                index,
            })
            .map_err(|_| Error::DegenerateInput("point rejected by triangulation"))?;
    }
    let mut triangles: Vec<[usize; 3]> = triangulation
        .inner_faces()
        .map(|face| {
            let vs = face.vertices();
            let mut tri = [
                vs[0].data().index,
                vs[1].data().index,
                vs[2].data().index,
            ];
            tri.sort_unstable();
            tri
        })
        .collect();
    if triangles.is_empty() {
        return Err(Error::DegenerateInput("all points are collinear"));
    }
    triangles.sort_unstable();
    Ok(triangles)
}

fn dist(a: (f64, f64), b: (f64, f64)) -> f64 {
    ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()
}

fn circumradius(a: (f64, f64), b: (f64, f64), c: (f64, f64)) -> f64 {
    let la = dist(b, c);
    let lb = dist(a, c);
    let lc = dist(a, b);
    let cross = (b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0);
    let area2 = cross.abs();
    if area2 == 0.0 {
        return f64::INFINITY;
    }
    la * lb * lc / (2.0 * area2)
}

/// Whether `w` lies strictly inside the diametral ball of segment `(u, v)`.
fn violates_gabriel(u: (f64, f64), v: (f64, f64), w: (f64, f64)) -> bool {
    let mid = ((u.0 + v.0) * 0.5, (u.1 + v.1) * 0.5);
    let r2 = ((u.0 - v.0).powi(2) + (u.1 - v.1).powi(2)) * 0.25;
    (w.0 - mid.0).powi(2) + (w.1 - mid.1).powi(2) < r2
}

/// Alpha-complex filtration of a planar point set (dimensions 0-2).
///
/// One and two-point inputs are handled directly (a vertex, or an edge at
/// half its length); three or more points go through the Delaunay
/// triangulation and inherit its degeneracy policy.
pub fn alpha_filtration(points: &[(f64, f64)]) -> Result<Filtration> {
    match points.len() {
        0 => return Err(Error::DegenerateInput("empty point set")),
        1 => return Filtration::new(vec![Simplex::vertex(0, 0.0)]),
        2 => {
            check_duplicates(points)?;
            return Filtration::new(vec![
                Simplex::vertex(0, 0.0),
                Simplex::vertex(1, 0.0),
                Simplex::edge(0, 1, 0.5 * dist(points[0], points[1])),
            ]);
        }
        _ => {}
    }
    let triangles = delaunay_2d(points)?;

    let mut simplices: Vec<Simplex> = (0..points.len())
        .map(|v| Simplex::vertex(v, 0.0))
        .collect();

    // Triangle values and edge -> adjacent-triangle bookkeeping.
    let mut edge_info: HashMap<(usize, usize), (Vec<f64>, bool)> = HashMap::new();
    for tri in &triangles {
        let radius = circumradius(points[tri[0]], points[tri[1]], points[tri[2]]);
        simplices.push(Simplex::triangle(tri[0], tri[1], tri[2], radius));
        for (u, v, w) in [
            (tri[0], tri[1], tri[2]),
            (tri[0], tri[2], tri[1]),
            (tri[1], tri[2], tri[0]),
        ] {
            let entry = edge_info.entry((u, v)).or_insert((Vec::new(), false));
            entry.0.push(radius);
            entry.1 |= violates_gabriel(points[u], points[v], points[w]);
        }
    }

    for (&(u, v), (radii, non_gabriel)) in &edge_info {
        let value = if *non_gabriel {
            radii.iter().copied().fold(f64::INFINITY, f64::min)
        } else {
            0.5 * dist(points[u], points[v])
        };
        simplices.push(Simplex::edge(u, v, value));
    }

    Filtration::new(simplices)
}
