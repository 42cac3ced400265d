//! Architecture and hyperparameter record for the network.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pooling {
    Attention,
    AttentionPlusSum,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Gelu,
    Relu,
}

/// Full architectural description. `decoder_layers` lists the complete size
/// chain of the decoder MLP, starting at the pooled width and ending at the
/// output width (class count, or 1 for regression).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PersformerConfig {
    /// Input feature width: 2 coordinates + one-hot block.
    pub input_dim: usize,
    /// Encoder hidden width `d` (the internal attention width equals it).
    pub hidden_dim: usize,
    pub n_layers: usize,
    pub n_heads: usize,
    /// Width of the position-wise feed-forward hidden layer.
    #[serde(default)]
    pub ffn_hidden: usize,
    pub pooling: Pooling,
    pub use_layer_norm: bool,
    pub use_residual: bool,
    pub decoder_layers: Vec<usize>,
    pub dropout_decoder: f64,
    pub activation: Activation,
}

impl PersformerConfig {
    /// Small builder with the usual defaults: GELU, layer norm, residuals,
    /// attention pooling, decoder dropout 0.2, FFN width `4d`.
    pub fn new(
        input_dim: usize,
        hidden_dim: usize,
        n_layers: usize,
        n_heads: usize,
        decoder_layers: Vec<usize>,
    ) -> Self {
        Self {
            input_dim,
            hidden_dim,
            n_layers,
            n_heads,
            ffn_hidden: 4 * hidden_dim,
            pooling: Pooling::Attention,
            use_layer_norm: true,
            use_residual: true,
            decoder_layers,
            dropout_decoder: 0.2,
            activation: Activation::Gelu,
        }
    }

    /// The configuration used for the orbit classification experiments:
    /// 5 encoder layers at `d = 128` with 8 heads and a
    /// `[128, 256, 256, 64, 5]` decoder.
    pub fn orbit_full() -> Self {
        Self::new(4, 128, 5, 8, vec![128, 256, 256, 64, 5])
    }

    /// The small graph-classification configuration: 2 layers at `d = 32`,
    /// 4 heads, attention+sum pooling and a `[64, 32, 2]` decoder over
    /// six-dimensional extended-persistence inputs.
    pub fn mutag_small() -> Self {
        let mut config = Self::new(6, 32, 2, 4, vec![64, 32, 2]);
        config.pooling = Pooling::AttentionPlusSum;
        config
    }

    /// Width of the pooled representation entering the decoder.
    pub fn pooled_width(&self) -> usize {
        match self.pooling {
            Pooling::Attention => self.hidden_dim,
            Pooling::AttentionPlusSum => 2 * self.hidden_dim,
        }
    }

    /// Output width (last decoder layer).
    pub fn output_dim(&self) -> usize {
        *self.decoder_layers.last().unwrap_or(&0)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidConfig(msg));
        if self.input_dim < 3 {
            return fail(format!(
                "input_dim must cover birth, death and a one-hot block, got {}",
                self.input_dim
            ));
        }
        if self.hidden_dim == 0 || self.n_heads == 0 || self.n_layers == 0 {
            return fail("hidden_dim, n_heads and n_layers must be positive".into());
        }
        if self.hidden_dim % self.n_heads != 0 {
            return fail(format!(
                "n_heads {} must divide hidden_dim {}",
                self.n_heads, self.hidden_dim
            ));
        }
        if self.ffn_hidden == 0 {
            return fail("ffn_hidden must be positive (default is 4 * hidden_dim)".into());
        }
        if self.decoder_layers.len() < 2 {
            return fail("decoder_layers needs at least input and output widths".into());
        }
        if self.decoder_layers[0] != self.pooled_width() {
            return fail(format!(
                "decoder input width {} does not match pooled width {}",
                self.decoder_layers[0],
                self.pooled_width()
            ));
        }
        if self.output_dim() == 0 {
            return fail("decoder output width must be positive".into());
        }
        if !(0.0..1.0).contains(&self.dropout_decoder) {
            return fail(format!("dropout must be in [0, 1), got {}", self.dropout_decoder));
        }
        Ok(())
    }
}
