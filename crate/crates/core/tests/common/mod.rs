//! Shared independent oracles for integration tests. Everything here is
//! deliberately naive (enumeration, dense linear algebra, finite
//! differences) and stays independent of the implementation paths it checks.

#![allow(dead_code)]

pub mod deep_sets;
pub mod fd;
pub mod homology;
pub mod matching;

use rand::RngCore;

/// Uniform in [0, 1) (53-bit mantissa division, same convention as the crate).
pub fn unit(rng: &mut impl RngCore) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Uniform in [lo, hi).
pub fn uniform(rng: &mut impl RngCore, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * unit(rng)
}
