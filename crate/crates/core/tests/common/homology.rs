//! Betti numbers by dense Z/2 Gaussian elimination on boundary matrices of
//! sublevel complexes — the independent check for the reduction algorithm.

use persformer_core::persistence::Filtration;
use std::collections::HashMap;

/// Betti number of the `t`-sublevel complex in dimension `k`, computed as
/// `dim C_k - rank d_k - rank d_{k+1}` with dense GF(2) ranks.
pub fn betti_via_rank(filtration: &Filtration, t: f64, k: usize) -> usize {
    // Included simplices per dimension, keyed by sorted vertex tuple.
    let mut by_dim: Vec<Vec<Vec<usize>>> = vec![Vec::new(); 3];
    for s in &filtration.simplices {
        if s.value <= t {
            by_dim[s.dim()].push(s.vertices().to_vec());
        }
    }
    let index: Vec<HashMap<Vec<usize>, usize>> = by_dim
        .iter()
        .map(|list| {
            list.iter()
                .enumerate()
                .map(|(i, v)| (v.clone(), i))
                .collect()
        })
        .collect();

    let rank_boundary = |dim: usize| -> usize {
        if dim == 0 || by_dim[dim].is_empty() {
            return 0;
        }
        // Columns: dim-simplices as bitmasks over (dim-1)-simplex rows.
        let columns: Vec<u128> = by_dim[dim]
            .iter()
            .map(|simplex| {
                let mut mask = 0u128;
                for omit in 0..simplex.len() {
                    let mut face = simplex.clone();
                    face.remove(omit);
                    let row = index[dim - 1][&face];
                    mask |= 1u128 << row;
                }
                mask
            })
            .collect();
        gf2_rank(columns)
    };

    let n_k = by_dim[k].len();
    n_k - rank_boundary(k) - if k + 1 < 3 { rank_boundary(k + 1) } else { 0 }
}

fn gf2_rank(columns: Vec<u128>) -> usize {
    // XOR basis keyed by leading bit.
    let mut pivots: Vec<Option<u128>> = vec![None; 128];
    let mut rank = 0;
    for mut c in columns {
        while c != 0 {
            let lead = 127 - c.leading_zeros() as usize;
            match pivots[lead] {
                Some(p) => c ^= p,
                None => {
                    pivots[lead] = Some(c);
                    rank += 1;
                    break;
                }
            }
        }
    }
    rank
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gf2_rank_examples() {
        assert_eq!(gf2_rank(vec![0b01, 0b10, 0b11]), 2);
        assert_eq!(gf2_rank(vec![0b11, 0b11]), 1);
        assert_eq!(gf2_rank(vec![]), 0);
    }
}
