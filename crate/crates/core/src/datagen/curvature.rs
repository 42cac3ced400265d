//! Uniform samples on geodesic discs of constant Gaussian curvature, with
//! exact intrinsic pairwise distances.
//!
//! The disc has geodesic radius 1. Sampling is inverse-CDF in geodesic polar
//! coordinates: the angle is uniform and the radial density is proportional
//! to the circumference element `sin(sqrt(K) r)/sqrt(K)` (sphere), `r`
//! (plane) or `sinh(sqrt(-K) r)/sqrt(-K)` (hyperbolic plane). Distances come
//! from the law of cosines of the respective geometry.

use crate::datagen::{stratified_split, uniform_f64, DiagramDataset};
use crate::error::{Error, Result};
use crate::persistence::rips_h1_diagram;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

#[derive(Debug, Clone, Copy)]
pub struct CurvatureSampleSpec {
    /// Gaussian curvature of the disc. Must satisfy `K < pi^2` so that a
    /// geodesic disc of radius 1 exists.
    pub curvature: f64,
    pub n_points: usize,
    pub seed: u64,
}

/// Polar sample on the disc: `(geodesic radius, angle)`.
fn sample_polar(k: f64, rng: &mut impl RngCore) -> (f64, f64) {
    let theta = 2.0 * std::f64::consts::PI * uniform_f64(rng);
    let u = uniform_f64(rng);
    let r = if k > 0.0 {
        let s = k.sqrt();
        (1.0 - u * (1.0 - (s).cos())).acos() / s
    } else if k < 0.0 {
        let s = (-k).sqrt();
        (1.0 + u * ((s).cosh() - 1.0)).acosh() / s
    } else {
        u.sqrt()
    };
    (r, theta)
}

/// Geodesic distance between polar points in curvature-K geometry.
pub fn geodesic_distance(k: f64, a: (f64, f64), b: (f64, f64)) -> f64 {
    let dtheta = a.1 - b.1;
    if k > 0.0 {
        let s = k.sqrt();
        let c = (s * a.0).cos() * (s * b.0).cos()
            + (s * a.0).sin() * (s * b.0).sin() * dtheta.cos();
        c.clamp(-1.0, 1.0).acos() / s
    } else if k < 0.0 {
        let s = (-k).sqrt();
        let c = (s * a.0).cosh() * (s * b.0).cosh()
            - (s * a.0).sinh() * (s * b.0).sinh() * dtheta.cos();
        c.max(1.0).acosh() / s
    } else {
        let d2 = a.0 * a.0 + b.0 * b.0 - 2.0 * a.0 * b.0 * dtheta.cos();
        d2.max(0.0).sqrt()
    }
}

/// Sample the disc and return the row-major matrix of pairwise geodesic
/// distances.
pub fn sample_constant_curvature_disc(spec: &CurvatureSampleSpec) -> Result<Vec<f64>> {
    let k = spec.curvature;
    if !k.is_finite() || k >= std::f64::consts::PI * std::f64::consts::PI {
        return Err(Error::InvalidCurvatureRadius(k));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let polar: Vec<(f64, f64)> = (0..spec.n_points).map(|_| sample_polar(k, &mut rng)).collect();
    let n = spec.n_points;
    let mut dist = vec![0.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d = geodesic_distance(k, polar[i], polar[j]);
            dist[i * n + j] = d;
            dist[j * n + i] = d;
        }
    }
    Ok(dist)
}

/// Build the curvature-regression dataset: `n_clouds` discs with curvature
/// uniform in `[k_min, k_max]`, Rips H1 diagrams as inputs, the curvature as
/// the regression target, split 70:30.
pub fn generate_curvature_dataset(
    n_clouds: usize,
    n_points: usize,
    k_min: f64,
    k_max: f64,
    seed: u64,
) -> Result<DiagramDataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let specs: Vec<(f64, CurvatureSampleSpec)> = (0..n_clouds)
        .map(|_| {
            let k = k_min + (k_max - k_min) * uniform_f64(&mut rng);
            let spec = CurvatureSampleSpec {
                curvature: k,
                n_points,
                seed: rng.next_u64(),
            };
            (k, spec)
        })
        .collect();
    let diagrams = specs
        .par_iter()
        .map(|(k, spec)| {
            let dist = sample_constant_curvature_disc(spec)?;
            let mut diagram = rips_h1_diagram(&dist, spec.n_points, f64::INFINITY)?;
            diagram.label = Some(*k);
            Ok(diagram)
        })
        .collect::<Result<Vec<_>>>()?;
    // Regression targets have no classes; split on a single stratum.
    let labels = vec![0usize; n_clouds];
    let (train, test) = stratified_split(&labels, 7, 10, &mut rng);
    Ok(DiagramDataset {
        diagrams,
        train,
        test,
    })
}
