//! Exhaustive enumeration oracles for the diagram distances. Costs are
//! computed with the same canonical cost function the solvers use, so an
//! agreeing matching produces a bit-identical value.

use persformer_core::diagram::PersistenceDiagram;
use persformer_core::distance::matching_cost;

/// Minimum over all dimension-respecting full bijections, or `None` when
/// some dimension has unequal counts.
pub fn oracle_wasserstein(
    a: &PersistenceDiagram,
    b: &PersistenceDiagram,
    p: f64,
) -> Option<f64> {
    let mut dims: Vec<usize> = a
        .points
        .iter()
        .chain(&b.points)
        .map(|pt| pt.hom_dim)
        .collect();
    dims.sort_unstable();
    dims.dedup();
    for &dim in &dims {
        if a.points_in_dim(dim).count() != b.points_in_dim(dim).count() {
            return None;
        }
    }
    let lefts: Vec<usize> = (0..a.len()).collect();
    let mut used = vec![false; b.len()];
    let mut matched = Vec::new();
    let mut best: Option<f64> = None;
    enumerate_bijections(a, b, &lefts, 0, &mut used, &mut matched, &mut best, p);
    best
}

#[allow(clippy::too_many_arguments)]
fn enumerate_bijections(
    a: &PersistenceDiagram,
    b: &PersistenceDiagram,
    lefts: &[usize],
    next: usize,
    used: &mut Vec<bool>,
    matched: &mut Vec<(usize, usize)>,
    best: &mut Option<f64>,
    p: f64,
) {
    if next == lefts.len() {
        let cost = matching_cost(a, b, matched, &[], &[], p);
        if best.map(|c| cost < c).unwrap_or(true) {
            *best = Some(cost);
        }
        return;
    }
    let i = lefts[next];
    for j in 0..b.len() {
        if !used[j] && b.points[j].hom_dim == a.points[i].hom_dim {
            used[j] = true;
            matched.push((i, j));
            enumerate_bijections(a, b, lefts, next + 1, used, matched, best, p);
            matched.pop();
            used[j] = false;
        }
    }
}

/// Minimum over all dimension-respecting partial matchings (unmatched points
/// are charged against the diagonal).
pub fn oracle_diagonal_wasserstein(a: &PersistenceDiagram, b: &PersistenceDiagram, p: f64) -> f64 {
    let mut used = vec![false; b.len()];
    let mut matched = Vec::new();
    let mut left_diag = Vec::new();
    let mut best: Option<f64> = None;
    enumerate_partial(a, b, 0, &mut used, &mut matched, &mut left_diag, &mut best, p);
    best.expect("at least the all-diagonal matching exists")
}

#[allow(clippy::too_many_arguments)]
fn enumerate_partial(
    a: &PersistenceDiagram,
    b: &PersistenceDiagram,
    i: usize,
    used: &mut Vec<bool>,
    matched: &mut Vec<(usize, usize)>,
    left_diag: &mut Vec<usize>,
    best: &mut Option<f64>,
    p: f64,
) {
    if i == a.len() {
        let right_diag: Vec<usize> = (0..b.len()).filter(|&j| !used[j]).collect();
        let cost = matching_cost(a, b, matched, left_diag, &right_diag, p);
        if best.map(|c| cost < c).unwrap_or(true) {
            *best = Some(cost);
        }
        return;
    }
    // Option 1: match i to its diagonal projection.
    left_diag.push(i);
    enumerate_partial(a, b, i + 1, used, matched, left_diag, best, p);
    left_diag.pop();
    // Option 2: match i to an unused same-dimension point of b.
    for j in 0..b.len() {
        if !used[j] && b.points[j].hom_dim == a.points[i].hom_dim {
            used[j] = true;
            matched.push((i, j));
            enumerate_partial(a, b, i + 1, used, matched, left_diag, best, p);
            matched.pop();
            used[j] = false;
        }
    }
}
