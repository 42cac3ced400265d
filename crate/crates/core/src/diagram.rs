//! Persistence-diagram data model and featurization for the network.
//!
//! A diagram is a finite multiset of `(birth, death)` points. Points carry a
//! homology dimension and, for extended persistence, one of the four pair
//! types. Storage order is arbitrary: no operation in this crate lets the
//! stored order leak into a semantic result.

use crate::error::{Error, Result};

/// Extended-persistence pair type. `None` marks ordinary persistence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExtType {
    Ordinary,
    Relative,
    ExtendedPlus,
    ExtendedMinus,
    None,
}

impl ExtType {
    /// Position in the fixed one-hot order (Ord, Rel, Ext+, Ext-).
    pub fn onehot_index(self) -> Option<usize> {
        match self {
            ExtType::Ordinary => Some(0),
            ExtType::Relative => Some(1),
            ExtType::ExtendedPlus => Some(2),
            ExtType::ExtendedMinus => Some(3),
            ExtType::None => None,
        }
    }

    /// Short tag used by the diagram CSV format.
    pub fn tag(self) -> &'static str {
        match self {
            ExtType::Ordinary => "ord",
            ExtType::Relative => "rel",
            ExtType::ExtendedPlus => "extp",
            ExtType::ExtendedMinus => "extm",
            ExtType::None => "-",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        match tag {
            "ord" => Some(ExtType::Ordinary),
            "rel" => Some(ExtType::Relative),
            "extp" => Some(ExtType::ExtendedPlus),
            "extm" => Some(ExtType::ExtendedMinus),
            "-" => Some(ExtType::None),
            _ => None,
        }
    }
}

/// One point of a persistence diagram.
///
/// For ordinary persistence `birth < death`. Extended pairs are finite but
/// unordered: Ext- pairs have `death < birth`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagramPoint {
    pub birth: f64,
    pub death: f64,
    pub hom_dim: usize,
    pub ext_type: ExtType,
}

impl DiagramPoint {
    pub fn new(birth: f64, death: f64, hom_dim: usize) -> Self {
        Self {
            birth,
            death,
            hom_dim,
            ext_type: ExtType::None,
        }
    }

    pub fn extended(birth: f64, death: f64, hom_dim: usize, ext_type: ExtType) -> Self {
        Self {
            birth,
            death,
            hom_dim,
            ext_type,
        }
    }

    /// Lifetime `death - birth` (may be negative for Ext- pairs).
    pub fn lifetime(&self) -> f64 {
        self.death - self.birth
    }

    pub fn is_finite(&self) -> bool {
        self.birth.is_finite() && self.death.is_finite()
    }
}

/// Orthogonal projection of a point onto the diagonal `{(x, x)}`.
pub fn diagonal_projection(point: (f64, f64)) -> (f64, f64) {
    let mid = 0.5 * (point.0 + point.1);
    (mid, mid)
}

/// L-infinity distance of a point to its diagonal projection.
pub fn diagonal_gap(point: (f64, f64)) -> f64 {
    0.5 * (point.0 - point.1).abs()
}

/// A finite multiset of diagram points with an optional supervision target.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PersistenceDiagram {
    pub points: Vec<DiagramPoint>,
    pub label: Option<f64>,
}

impl PersistenceDiagram {
    pub fn new(points: Vec<DiagramPoint>) -> Self {
        Self {
            points,
            label: None,
        }
    }

    pub fn with_label(points: Vec<DiagramPoint>, label: f64) -> Self {
        Self {
            points,
            label: Some(label),
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Points of one homology dimension, in stored order.
    pub fn points_in_dim(&self, hom_dim: usize) -> impl Iterator<Item = &DiagramPoint> {
        self.points.iter().filter(move |p| p.hom_dim == hom_dim)
    }

    pub fn max_hom_dim(&self) -> usize {
        self.points.iter().map(|p| p.hom_dim).max().unwrap_or(0)
    }
}

/// A diagram turned into fixed-width input vectors for the model.
///
/// Each vector is `[birth, death, onehot...]`; the one-hot block encodes
/// either the homology dimension or the extended-persistence type.
#[derive(Debug, Clone, PartialEq)]
pub struct FeaturizedDiagram {
    pub vectors: Vec<Vec<f64>>,
    pub label: Option<f64>,
}

impl FeaturizedDiagram {
    pub fn width(&self) -> usize {
        self.vectors.first().map(|v| v.len()).unwrap_or(0)
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }
}

/// Encode a diagram as `[birth, death, onehot]` rows.
///
/// With `use_ext_types = false` the one-hot block runs over homology
/// dimensions `0..=max_hom_dim`; with `use_ext_types = true` it runs over the
/// four extended types in the fixed order Ord, Rel, Ext+, Ext-.
pub fn featurize(
    diagram: &PersistenceDiagram,
    max_hom_dim: usize,
    use_ext_types: bool,
) -> Result<FeaturizedDiagram> {
    let onehot_width = if use_ext_types { 4 } else { max_hom_dim + 1 };
    let mut vectors = Vec::with_capacity(diagram.len());
    for point in &diagram.points {
        let mut row = vec![0.0; 2 + onehot_width];
        row[0] = point.birth;
        row[1] = point.death;
        let slot = if use_ext_types {
            point.ext_type.onehot_index().ok_or(Error::MissingExtType)?
        } else {
            if point.hom_dim > max_hom_dim {
                return Err(Error::DimOutOfRange {
                    dim: point.hom_dim,
                    max: max_hom_dim,
                });
            }
            point.hom_dim
        };
        row[2 + slot] = 1.0;
        vectors.push(row);
    }
    Ok(FeaturizedDiagram {
        vectors,
        label: diagram.label,
    })
}

/// A batch of featurized diagrams padded to a common length.
///
/// `features` is laid out row-major as `[batch, n_max, width]`; `mask` as
/// `[batch, n_max]` with 1 on real points and 0 on padding. Padded feature
/// rows are all-zero.
#[derive(Debug, Clone)]
pub struct PaddedBatch {
    pub features: Vec<f64>,
    pub mask: Vec<f64>,
    pub batch: usize,
    pub n_max: usize,
    pub width: usize,
}

/// Pad a batch of featurized diagrams to the maximum length in the batch.
pub fn pad_batch(batch: &[FeaturizedDiagram]) -> Result<PaddedBatch> {
    if batch.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let n_max = batch.iter().map(|d| d.len()).max().unwrap();
    if n_max == 0 {
        return Err(Error::EmptyBatch);
    }
    let width = batch
        .iter()
        .find(|d| !d.is_empty())
        .map(|d| d.width())
        .unwrap();
    for (i, d) in batch.iter().enumerate() {
        if !d.is_empty() && d.width() != width {
            return Err(Error::ShapeMismatch {
                op: "pad_batch",
                detail: format!("diagram {i} has width {}, expected {width}", d.width()),
            });
        }
    }
    let b = batch.len();
    let mut features = vec![0.0; b * n_max * width];
    let mut mask = vec![0.0; b * n_max];
    for (i, d) in batch.iter().enumerate() {
        for (j, row) in d.vectors.iter().enumerate() {
            features[(i * n_max + j) * width..(i * n_max + j + 1) * width].copy_from_slice(row);
            mask[i * n_max + j] = 1.0;
        }
    }
    Ok(PaddedBatch {
        features,
        mask,
        batch: b,
        n_max,
        width,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_projection_midpoint() {
        assert_eq!(diagonal_projection((0.0, 2.0)), (1.0, 1.0));
        assert_eq!(diagonal_projection((3.0, 3.0)), (3.0, 3.0));
        assert_eq!(diagonal_projection((0.2, 0.8)), (0.5, 0.5));
    }

    #[test]
    fn featurize_onehot_placement() {
        let d = PersistenceDiagram::new(vec![
            DiagramPoint::new(0.1, 0.4, 1),
            DiagramPoint::new(0.1, 0.4, 0),
        ]);
        let f = featurize(&d, 1, false).unwrap();
        assert_eq!(f.vectors[0], vec![0.1, 0.4, 0.0, 1.0]);
        assert_eq!(f.vectors[1], vec![0.1, 0.4, 1.0, 0.0]);
    }

    #[test]
    fn featurize_ext_types() {
        let d = PersistenceDiagram::new(vec![DiagramPoint::extended(
            0.3,
            0.2,
            1,
            ExtType::ExtendedMinus,
        )]);
        let f = featurize(&d, 1, true).unwrap();
        assert_eq!(f.vectors[0], vec![0.3, 0.2, 0.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn featurize_rejects_out_of_range_dim() {
        let d = PersistenceDiagram::new(vec![DiagramPoint::new(0.0, 1.0, 2)]);
        assert!(matches!(
            featurize(&d, 1, false),
            Err(Error::DimOutOfRange { dim: 2, max: 1 })
        ));
    }

    #[test]
    fn featurize_rejects_missing_ext_type() {
        let d = PersistenceDiagram::new(vec![DiagramPoint::new(0.0, 1.0, 0)]);
        assert!(matches!(featurize(&d, 1, true), Err(Error::MissingExtType)));
    }

    #[test]
    fn pad_batch_masks() {
        let f = |n: usize| FeaturizedDiagram {
            vectors: vec![vec![1.0, 2.0, 1.0, 0.0]; n],
            label: None,
        };
        let padded = pad_batch(&[f(2), f(3)]).unwrap();
        assert_eq!(padded.batch, 2);
        assert_eq!(padded.n_max, 3);
        assert_eq!(padded.mask, vec![1.0, 1.0, 0.0, 1.0, 1.0, 1.0]);
        // padded rows are all-zero
        assert!(padded.features[2 * 4..3 * 4].iter().all(|&x| x == 0.0));

        let single = pad_batch(&[f(4)]).unwrap();
        assert_eq!(single.n_max, 4);
        assert!(single.mask.iter().all(|&m| m == 1.0));

        let two = pad_batch(&[f(1), f(1)]).unwrap();
        assert_eq!((two.batch, two.n_max, two.width), (2, 1, 4));
    }

    #[test]
    fn pad_batch_rejects_empty() {
        assert!(matches!(pad_batch(&[]), Err(Error::EmptyBatch)));
    }
}
