//! Vietoris-Rips filtrations from distance matrices, truncated at dimension
//! 2 (enough for H0 and H1). A simplex enters at its largest pairwise
//! distance.

use crate::error::{Error, Result};
use crate::persistence::filtration::{Filtration, Simplex};
use crate::persistence::reduce::{reduce_boundary_matrix, PersistencePairs};

/// Hard guard on the input size: triangles are enumerated explicitly.
pub const MAX_RIPS_POINTS: usize = 400;

fn validate_metric(dist: &[f64], n: usize) -> Result<()> {
    if dist.len() != n * n {
        return Err(Error::NotAMetric("matrix is not square"));
    }
    for i in 0..n {
        if dist[i * n + i] != 0.0 {
            return Err(Error::NotAMetric("diagonal is not zero"));
        }
        for j in (i + 1)..n {
            let d = dist[i * n + j];
            if !d.is_finite() || d < 0.0 {
                return Err(Error::NotAMetric("negative or non-finite entry"));
            }
            if d != dist[j * n + i] {
                return Err(Error::NotAMetric("matrix is asymmetric"));
            }
        }
    }
    Ok(())
}

/// Build the Rips filtration (dims 0-2) from a row-major distance matrix,
/// keeping simplices entering at scale `<= max_scale`.
pub fn rips_filtration(dist: &[f64], n: usize, max_scale: f64) -> Result<Filtration> {
    if n > MAX_RIPS_POINTS {
        return Err(Error::TooLarge {
            n,
            max: MAX_RIPS_POINTS,
        });
    }
    validate_metric(dist, n)?;
    let mut simplices: Vec<Simplex> = (0..n).map(|v| Simplex::vertex(v, 0.0)).collect();
    for i in 0..n {
        for j in (i + 1)..n {
            let d = dist[i * n + j];
            if d <= max_scale {
                simplices.push(Simplex::edge(i, j, d));
            }
        }
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let dij = dist[i * n + j];
            if dij > max_scale {
                continue;
            }
            for k in (j + 1)..n {
                let value = dij.max(dist[i * n + k]).max(dist[j * n + k]);
                if value <= max_scale {
                    simplices.push(Simplex::triangle(i, j, k, value));
                }
            }
        }
    }
    Filtration::new(simplices)
}

/// Persistence of the Rips filtration: H1 pairs plus the H0 pairs that come
/// for free from the same reduction. Pass `f64::INFINITY` as `max_scale` for
/// the full filtration.
pub fn vietoris_rips_h1(dist: &[f64], n: usize, max_scale: f64) -> Result<PersistencePairs> {
    let filtration = rips_filtration(dist, n, max_scale)?;
    let mut pairs = reduce_boundary_matrix(&filtration)?;
    // Dimension-2 classes of the clique complex are truncation artifacts.
    pairs.by_dim.truncate(2);
    Ok(pairs)
}

/// Distance matrix of a 2-D point cloud under the Euclidean metric.
pub fn euclidean_distance_matrix(points: &[(f64, f64)]) -> Vec<f64> {
    let n = points.len();
    let mut dist = vec![0.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d = ((points[i].0 - points[j].0).powi(2) + (points[i].1 - points[j].1).powi(2))
                .sqrt();
            dist[i * n + j] = d;
            dist[j * n + i] = d;
        }
    }
    dist
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::persistence::reduce::PairKind;

    #[test]
    fn unit_square_single_h1_pair() {
        let pts = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)];
        let dist = euclidean_distance_matrix(&pts);
        let pairs = vietoris_rips_h1(&dist, 4, f64::INFINITY).unwrap();
        let h1 = pairs.dim(1);
        assert_eq!(h1.len(), 1);
        assert_eq!(h1[0].birth, 1.0);
        assert_eq!(h1[0].death, 2.0_f64.sqrt());
    }

    #[test]
    fn three_points_no_h1() {
        let pts = [(0.0, 0.0), (1.0, 0.0), (0.3, 0.8)];
        let dist = euclidean_distance_matrix(&pts);
        let pairs = vietoris_rips_h1(&dist, 3, f64::INFINITY).unwrap();
        assert!(pairs.dim(1).is_empty());
    }

    #[test]
    fn two_points_h0_pair_and_essential() {
        let dist = vec![0.0, 1.5, 1.5, 0.0];
        let pairs = vietoris_rips_h1(&dist, 2, f64::INFINITY).unwrap();
        let finite: Vec<_> = pairs
            .dim(0)
            .iter()
            .filter(|p| p.kind == PairKind::Finite)
            .collect();
        assert_eq!(finite.len(), 1);
        assert_eq!((finite[0].birth, finite[0].death), (0.0, 1.5));
        assert_eq!(pairs.essential_count(0), 1);
    }

    #[test]
    fn guards_and_validation() {
        assert!(matches!(
            vietoris_rips_h1(&[0.0, 1.0, 2.0, 0.0], 2, 1.0),
            Err(Error::NotAMetric(_))
        ));
        assert!(matches!(
            vietoris_rips_h1(&[0.0, -1.0, -1.0, 0.0], 2, 1.0),
            Err(Error::NotAMetric(_))
        ));
        let big = vec![0.0; 401 * 401];
        assert!(matches!(
            vietoris_rips_h1(&big, 401, 1.0),
            Err(Error::TooLarge { .. })
        ));
    }

    #[test]
    fn max_scale_truncates() {
        let pts = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)];
        let dist = euclidean_distance_matrix(&pts);
        // Truncate below sqrt(2): the square's cycle never dies.
        let pairs = vietoris_rips_h1(&dist, 4, 1.2).unwrap();
        assert_eq!(pairs.dim(1).len(), 1);
        assert_eq!(pairs.dim(1)[0].kind, PairKind::Essential);
    }
}
