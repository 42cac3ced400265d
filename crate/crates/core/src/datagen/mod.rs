//! Dataset construction: ORBIT point clouds, constant-curvature distance
//! matrices, and TU-format graph ingestion.
//!
//! Every generator is a pure function of its seed. Randomness comes from
//! `ChaCha8Rng` seeded with a caller-provided 64-bit integer; uniform reals
//! are produced by 53-bit mantissa division so datasets reproduce bit-for-bit
//! across platforms.

pub mod curvature;
pub mod mutag;
pub mod orbit;

pub use curvature::{sample_constant_curvature_disc, CurvatureSampleSpec};
pub use mutag::{load_mutag, LabeledGraphSet};
pub use orbit::{
    generate_orbit, generate_orbit_dataset, orbit_divergence_study, OrbitSpec, Precision,
    ORBIT_RHOS,
};

use crate::diagram::PersistenceDiagram;
use rand::RngCore;

/// Uniform draw from `[0, 1)` using the top 53 bits of the generator output.
pub fn uniform_f64(rng: &mut impl RngCore) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Labeled diagrams plus a deterministic train/test split (index lists).
#[derive(Debug, Clone)]
pub struct DiagramDataset {
    pub diagrams: Vec<PersistenceDiagram>,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

impl DiagramDataset {
    pub fn train_diagrams(&self) -> Vec<&PersistenceDiagram> {
        self.train.iter().map(|&i| &self.diagrams[i]).collect()
    }

    pub fn test_diagrams(&self) -> Vec<&PersistenceDiagram> {
        self.test.iter().map(|&i| &self.diagrams[i]).collect()
    }
}

/// Stratified split: within every class, a seeded shuffle sends the first
/// `numerator/denominator` fraction to the first list.
pub fn stratified_split(
    labels: &[usize],
    numerator: usize,
    denominator: usize,
    rng: &mut impl rand::Rng,
) -> (Vec<usize>, Vec<usize>) {
    use rand::seq::SliceRandom;
    let mut classes: Vec<usize> = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    let mut first = Vec::new();
    let mut second = Vec::new();
    for class in classes {
        let mut indices: Vec<usize> = labels
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == class)
            .map(|(i, _)| i)
            .collect();
        indices.shuffle(rng);
        let take = indices.len() * numerator / denominator;
        first.extend_from_slice(&indices[..take]);
        second.extend_from_slice(&indices[take..]);
    }
    first.sort_unstable();
    second.sort_unstable();
    (first, second)
}
