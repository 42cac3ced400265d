//! The permutation-invariant transformer over featurized diagrams.

pub mod config;
pub mod forward;
pub mod state;

pub use config::{Activation, PersformerConfig, Pooling};
pub use forward::{encode_on_tape, forward_logits, forward_on_tape, ForwardPass};
pub use state::ModelState;
