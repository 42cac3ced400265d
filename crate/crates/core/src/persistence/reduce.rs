//! Persistence by column reduction of the boundary matrix over Z/2.
//!
//! Columns are processed in filtration order within each dimension, highest
//! dimension first, with the clearing (twist) optimization: the birth column
//! of a freshly found pair is cleared instead of being reduced later.

use crate::error::Result;
use crate::persistence::filtration::Filtration;

/// Index pairs from a reduction: `(birth_column, death_column)` plus the
/// indices of essential (never-dying) columns.
#[derive(Debug, Clone, Default)]
pub struct IndexPairs {
    pub pairs: Vec<(usize, usize)>,
    pub essential: Vec<usize>,
}

/// Reduce boundary columns given as `(dimension, sorted face indices)`.
///
/// The column order is the filtration order; parents must appear after all
/// of their faces (callers validate this).
pub fn reduce_columns(columns: &[(u8, Vec<usize>)]) -> IndexPairs {
    let n = columns.len();
    let max_dim = columns.iter().map(|(d, _)| *d).max().unwrap_or(0);
    // pivot_of_row[i] = column whose lowest entry is i
    let mut pivot_of_row: Vec<Option<usize>> = vec![None; n];
    let mut cleared = vec![false; n];
    let mut reduced: Vec<Option<Vec<usize>>> = vec![None; n];
    let mut pairs = Vec::new();

    let mut scratch = Vec::new();
    for dim in (1..=max_dim).rev() {
        for j in 0..n {
            if columns[j].0 != dim || cleared[j] {
                continue;
            }
            let mut col = columns[j].1.clone();
            loop {
                let Some(&low) = col.last() else { break };
                let Some(pivot_col) = pivot_of_row[low] else {
                    break;
                };
                let other = reduced[pivot_col]
                    .as_ref()
                    .expect("pivot column stores its reduced form");
                xor_sorted(&col, other, &mut scratch);
                std::mem::swap(&mut col, &mut scratch);
            }
            if let Some(&low) = col.last() {
                pivot_of_row[low] = Some(j);
                pairs.push((low, j));
                cleared[low] = true;
                reduced[j] = Some(col);
            } else {
                reduced[j] = Some(col);
            }
        }
    }

    let mut is_death = vec![false; n];
    let mut is_birth = vec![false; n];
    for &(b, d) in &pairs {
        is_birth[b] = true;
        is_death[d] = true;
    }
    let essential = (0..n)
        .filter(|&i| {
            !is_birth[i]
                && !is_death[i]
                // a column that reduced to nonzero is a death even if its
                // pair was recorded; remaining zero columns are essential
                && reduced[i].as_ref().map(|c| c.is_empty()).unwrap_or(true)
        })
        .collect();
    IndexPairs { pairs, essential }
}

fn xor_sorted(a: &[usize], b: &[usize], out: &mut Vec<usize>) {
    out.clear();
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
}

/// Whether a persistence pair is finite or essential (never dies).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairKind {
    Finite,
    Essential,
}

/// A persistence pair in filtration-value coordinates. Essential classes
/// carry `death = f64::INFINITY`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PersistencePair {
    pub birth: f64,
    pub death: f64,
    pub kind: PairKind,
}

/// Persistence pairs grouped by homology dimension.
#[derive(Debug, Clone, Default)]
pub struct PersistencePairs {
    /// `by_dim[k]` holds the dimension-k pairs.
    pub by_dim: Vec<Vec<PersistencePair>>,
}

impl PersistencePairs {
    pub fn dim(&self, k: usize) -> &[PersistencePair] {
        self.by_dim.get(k).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Betti number at threshold `t`: classes born at or before `t` that are
    /// still alive strictly after `t`.
    pub fn betti(&self, k: usize, t: f64) -> usize {
        self.dim(k)
            .iter()
            .filter(|p| p.birth <= t && p.death > t)
            .count()
    }

    pub fn essential_count(&self, k: usize) -> usize {
        self.dim(k)
            .iter()
            .filter(|p| p.kind == PairKind::Essential)
            .count()
    }
}

/// Run the standard reduction on a filtration and report value pairs per
/// dimension. Zero-persistence pairs (birth == death) are dropped; essential
/// classes are kept with infinite death.
pub fn reduce_boundary_matrix(filtration: &Filtration) -> Result<PersistencePairs> {
    let columns = filtration.boundary_columns()?;
    let index_pairs = reduce_columns(&columns);
    let max_dim = columns.iter().map(|(d, _)| *d as usize).max().unwrap_or(0);
    let mut by_dim = vec![Vec::new(); max_dim + 1];
    for (b, d) in index_pairs.pairs {
        let birth = filtration.simplices[b].value;
        let death = filtration.simplices[d].value;
        if birth == death {
            continue;
        }
        by_dim[filtration.simplices[b].dim()].push(PersistencePair {
            birth,
            death,
            kind: PairKind::Finite,
        });
    }
    for i in index_pairs.essential {
        by_dim[filtration.simplices[i].dim()].push(PersistencePair {
            birth: filtration.simplices[i].value,
            death: f64::INFINITY,
            kind: PairKind::Essential,
        });
    }
    Ok(PersistencePairs { by_dim })
}
