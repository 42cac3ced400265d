//! Exact Wasserstein-type distances between persistence diagrams.
//!
//! Two metrics are implemented, both as minimum-cost matching problems under
//! the L-infinity ground distance:
//!
//! * [`wasserstein_p`] — full bijections between equal-size diagrams,
//! * [`diagonal_wasserstein_p`] — partial matchings with unmatched points
//!   charged against their diagonal projections (`p = inf` is the bottleneck
//!   distance).
//!
//! Points are only ever matched within the same homology dimension; the
//! distance combines the per-dimension cost vectors into one p-norm. The
//! optimum is exact: an assignment solver for finite `p`, a threshold search
//! with feasibility matchings for `p = inf`.

mod assignment;

use crate::diagram::{diagonal_gap, DiagramPoint, PersistenceDiagram};
use crate::error::{Error, Result};
use assignment::{min_max_assignment, min_sum_assignment};
use std::collections::BTreeMap;

/// An optimal partial matching together with its cost.
///
/// Index pairs refer to positions in the two input diagrams. `left_diagonal`
/// and `right_diagonal` list the points matched to their own diagonal
/// projections. The cost always equals the p-norm of the cost vector
/// recomputed from the matching in canonical index order.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchingResult {
    pub cost: f64,
    pub matched: Vec<(usize, usize)>,
    pub left_diagonal: Vec<usize>,
    pub right_diagonal: Vec<usize>,
}

/// L-infinity distance between two diagram points in the plane.
pub fn linf(a: &DiagramPoint, b: &DiagramPoint) -> f64 {
    (a.birth - b.birth).abs().max((a.death - b.death).abs())
}

fn validate_p(p: f64) -> Result<()> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::InvalidP(p));
    }
    Ok(())
}

fn validate_finite(d: &PersistenceDiagram) -> Result<()> {
    for pt in &d.points {
        if !pt.is_finite() {
            return Err(Error::NonFiniteCoordinate {
                birth: pt.birth,
                death: pt.death,
            });
        }
    }
    Ok(())
}

fn dims_of(a: &PersistenceDiagram, b: &PersistenceDiagram) -> Vec<usize> {
    let mut dims: Vec<usize> = a
        .points
        .iter()
        .chain(b.points.iter())
        .map(|p| p.hom_dim)
        .collect();
    dims.sort_unstable();
    dims.dedup();
    dims
}

fn indices_in_dim(d: &PersistenceDiagram, dim: usize) -> Vec<usize> {
    d.points
        .iter()
        .enumerate()
        .filter(|(_, p)| p.hom_dim == dim)
        .map(|(i, _)| i)
        .collect()
}

/// Recompute the matching cost as the p-norm of the per-edge cost vector,
/// assembled in canonical order (matched pairs by left index, then left
/// diagonal points, then right diagonal points). Shared by the solvers and
/// the enumeration oracle so equal matchings produce bit-equal costs.
pub fn matching_cost(
    a: &PersistenceDiagram,
    b: &PersistenceDiagram,
    matched: &[(usize, usize)],
    left_diagonal: &[usize],
    right_diagonal: &[usize],
    p: f64,
) -> f64 {
    let mut edges: Vec<f64> = Vec::with_capacity(matched.len() + left_diagonal.len() + right_diagonal.len());
    let mut matched = matched.to_vec();
    matched.sort_unstable();
    for &(i, j) in &matched {
        edges.push(linf(&a.points[i], &b.points[j]));
    }
    let mut left = left_diagonal.to_vec();
    left.sort_unstable();
    for &i in &left {
        edges.push(diagonal_gap((a.points[i].birth, a.points[i].death)));
    }
    let mut right = right_diagonal.to_vec();
    right.sort_unstable();
    for &j in &right {
        edges.push(diagonal_gap((b.points[j].birth, b.points[j].death)));
    }
    pnorm(&edges, p)
}

/// p-norm of a cost vector; the empty vector has norm 0.
pub fn pnorm(edges: &[f64], p: f64) -> f64 {
    if p.is_infinite() {
        edges.iter().copied().fold(0.0, f64::max)
    } else {
        edges.iter().map(|c| c.powf(p)).sum::<f64>().powf(1.0 / p)
    }
}

/// p-Wasserstein distance over full bijections.
///
/// Requires equal cardinality in every homology dimension; cross-dimension
/// matches are forbidden. `p` may be any real `>= 1` or `f64::INFINITY`.
pub fn wasserstein_p(a: &PersistenceDiagram, b: &PersistenceDiagram, p: f64) -> Result<f64> {
    validate_p(p)?;
    validate_finite(a)?;
    validate_finite(b)?;
    let mut matched = Vec::new();
    for dim in dims_of(a, b) {
        let ia = indices_in_dim(a, dim);
        let ib = indices_in_dim(b, dim);
        if ia.len() != ib.len() {
            return Err(Error::SizeMismatch {
                hom_dim: dim,
                left: ia.len(),
                right: ib.len(),
            });
        }
        let n = ia.len();
        if n == 0 {
            continue;
        }
        let mut cost = vec![0.0; n * n];
        for (r, &i) in ia.iter().enumerate() {
            for (c, &j) in ib.iter().enumerate() {
                let d = linf(&a.points[i], &b.points[j]);
                cost[r * n + c] = if p.is_infinite() { d } else { d.powf(p) };
            }
        }
        let assign = if p.is_infinite() {
            min_max_assignment(&cost, n).1
        } else {
            min_sum_assignment(&cost, n)
        };
        for (r, &c) in assign.iter().enumerate() {
            matched.push((ia[r], ib[c]));
        }
    }
    Ok(matching_cost(a, b, &matched, &[], &[], p))
}

/// Diagonal-p-Wasserstein distance over partial matchings (`p = inf` is the
/// bottleneck distance). Unmatched points are charged against their diagonal
/// projections; diagrams of different sizes are fine.
pub fn diagonal_wasserstein_p(
    a: &PersistenceDiagram,
    b: &PersistenceDiagram,
    p: f64,
) -> Result<MatchingResult> {
    validate_p(p)?;
    validate_finite(a)?;
    validate_finite(b)?;
    let mut matched = Vec::new();
    let mut left_diagonal = Vec::new();
    let mut right_diagonal = Vec::new();
    for dim in dims_of(a, b) {
        let ia = indices_in_dim(a, dim);
        let ib = indices_in_dim(b, dim);
        let (n, m) = (ia.len(), ib.len());
        let size = n + m;
        if size == 0 {
            continue;
        }
        // Augmented square matrix: each point may match a real partner or its
        // own diagonal ghost; ghost-ghost edges are free.
        let mut cost = vec![f64::INFINITY; size * size];
        let raise = |d: f64| if p.is_infinite() { d } else { d.powf(p) };
        for (r, &i) in ia.iter().enumerate() {
            for (c, &j) in ib.iter().enumerate() {
                cost[r * size + c] = raise(linf(&a.points[i], &b.points[j]));
            }
            cost[r * size + (m + r)] =
                raise(diagonal_gap((a.points[i].birth, a.points[i].death)));
        }
        for (c, &j) in ib.iter().enumerate() {
            cost[(n + c) * size + c] =
                raise(diagonal_gap((b.points[j].birth, b.points[j].death)));
        }
        for r in n..size {
            for c in m..size {
                cost[r * size + c] = 0.0;
            }
        }
        let assign = if p.is_infinite() {
            min_max_assignment(&cost, size).1
        } else {
            min_sum_assignment(&cost, size)
        };
        for (r, &c) in assign.iter().enumerate() {
            match (r < n, c < m) {
                (true, true) => matched.push((ia[r], ib[c])),
                (true, false) => left_diagonal.push(ia[r]),
                (false, true) => right_diagonal.push(ib[c]),
                (false, false) => {}
            }
        }
    }
    let cost = matching_cost(a, b, &matched, &left_diagonal, &right_diagonal, p);
    Ok(MatchingResult {
        cost,
        matched,
        left_diagonal,
        right_diagonal,
    })
}

/// Smallest diagonal gap over the points of `d` (the coincidence radius
/// below which partial and full matchings agree). Infinite for empty input.
pub fn epsilon_coincidence(d: &PersistenceDiagram) -> f64 {
    d.points
        .iter()
        .map(|p| diagonal_gap((p.birth, p.death)))
        .fold(f64::INFINITY, f64::min)
}

/// Group diagram point counts by homology dimension (handy for callers that
/// need to pre-check `wasserstein_p` feasibility).
pub fn counts_by_dim(d: &PersistenceDiagram) -> BTreeMap<usize, usize> {
    let mut map = BTreeMap::new();
    for p in &d.points {
        *map.entry(p.hom_dim).or_insert(0) += 1;
    }
    map
}
