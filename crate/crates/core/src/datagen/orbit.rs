//! ORBIT point clouds: the chaotic recursion
//!
//! ```text
//! x_{n+1} = x_n + rho * y_n (1 - y_n)          mod 1
//! y_{n+1} = y_n + rho * x_{n+1} (1 - x_{n+1})  mod 1
//! ```
//!
//! plus a precision-divergence study that replays the recursion in wide
//! fixed-point arithmetic and measures how fast the float64 orbit drifts
//! away on the unit torus.

use crate::datagen::{stratified_split, uniform_f64, DiagramDataset};
use crate::error::{Error, Result};
use crate::persistence::alpha_diagram;
use num_bigint::BigUint;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// The five dynamics parameters of the classification task.
pub const ORBIT_RHOS: [f64; 5] = [2.5, 3.5, 4.0, 4.1, 4.3];

/// Arithmetic used to run the recursion.
///
/// `BigFixed` evaluates every step in fixed-point with
/// [`FIXED_POINT_BITS`] fractional bits, rounding to nearest once per
/// multiplication. At 8192 bits the reference orbit carries far more
/// precision than the recursion can consume within the step guard, so
/// further increases do not change the emitted points.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Precision {
    Float64,
    BigFixed,
}

/// Fractional bits of the fixed-point reference orbit.
pub const FIXED_POINT_BITS: u64 = 8192;

/// Step guard for the divergence study (fixed-point work grows with it).
pub const DIVERGENCE_MAX_STEPS: usize = 2000;

#[derive(Debug, Clone, Copy)]
pub struct OrbitSpec {
    pub rho: f64,
    pub n_points: usize,
    pub seed: u64,
    pub precision: Precision,
}

impl OrbitSpec {
    pub fn float64(rho: f64, n_points: usize, seed: u64) -> Self {
        Self {
            rho,
            n_points,
            seed,
            precision: Precision::Float64,
        }
    }
}

/// Draw the initial point for a seed: two uniforms from `[0, 1)`.
fn initial_point(seed: u64) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x0 = uniform_f64(&mut rng);
    let y0 = uniform_f64(&mut rng);
    (x0, y0)
}

/// Run the recursion in plain f64 from an explicit initial point.
pub fn orbit_from(x0: f64, y0: f64, rho: f64, n_points: usize) -> Vec<(f64, f64)> {
    let mut points = Vec::with_capacity(n_points);
    let (mut x, mut y) = (x0, y0);
    if n_points > 0 {
        points.push((x, y));
    }
    for _ in 1..n_points {
        x = (x + rho * y * (1.0 - y)).rem_euclid(1.0);
        y = (y + rho * x * (1.0 - x)).rem_euclid(1.0);
        points.push((x, y));
    }
    points
}

/// Generate one orbit. The initial point is drawn uniformly from `[0, 1)^2`
/// by the seeded generator and is included as the first point.
pub fn generate_orbit(spec: &OrbitSpec) -> Vec<(f64, f64)> {
    let (x0, y0) = initial_point(spec.seed);
    match spec.precision {
        Precision::Float64 => orbit_from(x0, y0, spec.rho, spec.n_points),
        Precision::BigFixed => {
            let mut orbit = FixedOrbit::new(x0, y0, spec.rho, FIXED_POINT_BITS);
            let mut points = Vec::with_capacity(spec.n_points);
            if spec.n_points > 0 {
                points.push(orbit.current_f64());
            }
            for _ in 1..spec.n_points {
                orbit.step();
                points.push(orbit.current_f64());
            }
            points
        }
    }
}

/// Fixed-point orbit state: coordinates are integers scaled by `2^-bits`.
struct FixedOrbit {
    x: BigUint,
    y: BigUint,
    bits: u64,
    /// rho decomposed exactly as `mantissa * 2^exponent` from its f64 value,
    /// so both arithmetic paths iterate the same map.
    rho_mantissa: BigUint,
    rho_shift: u64,
}

impl FixedOrbit {
    fn new(x0: f64, y0: f64, rho: f64, bits: u64) -> Self {
        assert!(rho > 0.0 && rho.is_finite());
        // Decompose rho = m * 2^-s with integer m.
        let mut mantissa = rho;
        let mut shift = 0u64;
        while mantissa.fract() != 0.0 {
            mantissa *= 2.0;
            shift += 1;
        }
        Self {
            x: f64_to_fixed(x0, bits),
            y: f64_to_fixed(y0, bits),
            bits,
            rho_mantissa: BigUint::from(mantissa as u64),
            rho_shift: shift,
        }
    }

    fn step(&mut self) {
        let one = BigUint::from(1u8) << self.bits;
        // x <- frac(x + rho * y * (1 - y))
        let logistic = shift_round(&(&self.y * (&one - &self.y)), self.bits);
        let scaled = shift_round(&(logistic * &self.rho_mantissa), self.rho_shift);
        self.x = (&self.x + scaled) & (&one - BigUint::from(1u8));
        // y <- frac(y + rho * x' * (1 - x'))
        let logistic = shift_round(&(&self.x * (&one - &self.x)), self.bits);
        let scaled = shift_round(&(logistic * &self.rho_mantissa), self.rho_shift);
        self.y = (&self.y + scaled) & (&one - BigUint::from(1u8));
    }

    fn current_f64(&self) -> (f64, f64) {
        (fixed_to_f64(&self.x, self.bits), fixed_to_f64(&self.y, self.bits))
    }
}

fn f64_to_fixed(x: f64, bits: u64) -> BigUint {
    debug_assert!((0.0..1.0).contains(&x));
    // x has at most 53 mantissa bits, so this conversion is exact.
    let scaled = x * (1u64 << 53) as f64;
    debug_assert_eq!(scaled.fract(), 0.0);
    BigUint::from(scaled as u64) << (bits - 53)
}

fn fixed_to_f64(v: &BigUint, bits: u64) -> f64 {
    // Keep the top 64 bits; the truncation error (< 2^-64) is far below the
    // f64 resolution of the other orbit.
    let hi = (v >> (bits - 64)).to_u64_digits();
    let hi = hi.first().copied().unwrap_or(0);
    hi as f64 * (1.0 / 2.0_f64.powi(64))
}

/// Divide by `2^shift`, rounding to nearest.
fn shift_round(v: &BigUint, shift: u64) -> BigUint {
    if shift == 0 {
        return v.clone();
    }
    (v + (BigUint::from(1u8) << (shift - 1))) >> shift
}

/// Distance on the unit torus `[0,1)^2 mod 1`.
pub fn torus_distance(a: (f64, f64), b: (f64, f64)) -> f64 {
    let wrap = |d: f64| {
        let d = d.abs();
        d.min(1.0 - d)
    };
    let dx = wrap(a.0 - b.0);
    let dy = wrap(a.1 - b.1);
    (dx * dx + dy * dy).sqrt()
}

/// Run the recursion twice from the same f64 initial point, once in f64 and
/// once in fixed point, and report the torus distance at every step.
pub fn orbit_divergence_study(rho: f64, seed: u64, n: usize) -> Result<Vec<(usize, f64)>> {
    if n > DIVERGENCE_MAX_STEPS {
        return Err(Error::GuardExceeded {
            n,
            max: DIVERGENCE_MAX_STEPS,
        });
    }
    let (x0, y0) = initial_point(seed);
    let mut float_orbit = (x0, y0);
    let mut fixed_orbit = FixedOrbit::new(x0, y0, rho, FIXED_POINT_BITS);
    let mut divergences = Vec::with_capacity(n);
    if n > 0 {
        divergences.push((0, torus_distance(float_orbit, fixed_orbit.current_f64())));
    }
    for step in 1..n {
        let (mut x, mut y) = float_orbit;
        x = (x + rho * y * (1.0 - y)).rem_euclid(1.0);
        y = (y + rho * x * (1.0 - x)).rem_euclid(1.0);
        float_orbit = (x, y);
        fixed_orbit.step();
        divergences.push((step, torus_distance(float_orbit, fixed_orbit.current_f64())));
    }
    Ok(divergences)
}

/// Generate the ORBIT classification dataset: `per_class` orbits for each of
/// the five dynamics parameters, turned into alpha-complex diagrams (H0+H1)
/// and split 70:30 stratified by class.
pub fn generate_orbit_dataset(per_class: usize, n_points: usize, seed: u64) -> Result<DiagramDataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut specs = Vec::with_capacity(ORBIT_RHOS.len() * per_class);
    for (class, &rho) in ORBIT_RHOS.iter().enumerate() {
        for _ in 0..per_class {
            specs.push((class, OrbitSpec::float64(rho, n_points, rng.next_u64())));
        }
    }
    let diagrams = specs
        .par_iter()
        .map(|(class, spec)| {
            let points = generate_orbit(spec);
            let mut diagram = alpha_diagram(&points)?;
            diagram.label = Some(*class as f64);
            Ok(diagram)
        })
        .collect::<Result<Vec<_>>>()?;
    let labels: Vec<usize> = specs.iter().map(|(class, _)| *class).collect();
    let (train, test) = stratified_split(&labels, 7, 10, &mut rng);
    Ok(DiagramDataset {
        diagrams,
        train,
        test,
    })
}
