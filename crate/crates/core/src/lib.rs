//! Core library for learning on persistence diagrams.
//!
//! The crate covers the full pipeline: generating point-cloud and graph
//! datasets, computing persistence diagrams (alpha complexes, Vietoris-Rips,
//! extended persistence of node-valued graphs), comparing diagrams under
//! exact Wasserstein-type metrics, training a permutation-invariant
//! transformer on them, and attributing predictions back to individual
//! diagram points with gradient-norm saliency maps.

pub mod autodiff;
pub mod datagen;
pub mod diagram;
pub mod distance;
pub mod persistence;
pub mod error;
pub mod model;

pub use error::{Error, Result};
