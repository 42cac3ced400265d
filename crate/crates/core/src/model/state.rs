//! Trainable parameters: construction, the attention-free degeneration, and
//! the checkpoint format (flat little-endian f64 binary + JSON sidecar with
//! names, offsets and shapes).

use crate::autodiff::NdArray;
use crate::datagen::uniform_f64;
use crate::error::{Error, Result};
use crate::model::config::PersformerConfig;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::path::Path;

/// All trainable parameters in a fixed, named order.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelState {
    pub config: PersformerConfig,
    names: Vec<String>,
    values: Vec<NdArray<f64>>,
}

impl ModelState {
    /// Initialize parameters: fan-in scaled uniform for every linear map,
    /// zeros for biases and the pooling query (pooling starts as a mean),
    /// ones/zeros for layer-norm gain/shift.
    pub fn init(config: &PersformerConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut state = Self {
            config: config.clone(),
            names: Vec::new(),
            values: Vec::new(),
        };
        let d = config.hidden_dim;

        let linear = |state: &mut Self, name: String, rows: usize, cols: usize, rng: &mut ChaCha8Rng| {
            let bound = 1.0 / (rows as f64).sqrt();
            let data: Vec<f64> = (0..rows * cols)
                .map(|_| bound * (2.0 * uniform_f64(rng) - 1.0))
                .collect();
            state.push(name, NdArray::from_vec(&[rows, cols], data));
        };

        linear(&mut state, "embed.w".into(), config.input_dim, d, &mut rng);
        state.push("embed.b".into(), NdArray::zeros(&[d]));
        for layer in 0..config.n_layers {
            for proj in ["wq", "wk", "wv", "wo"] {
                linear(&mut state, format!("layer{layer}.{proj}"), d, d, &mut rng);
            }
            if config.use_layer_norm {
                state.push(format!("layer{layer}.ln1.gamma"), ones(d));
                state.push(format!("layer{layer}.ln1.beta"), NdArray::zeros(&[d]));
            }
            linear(
                &mut state,
                format!("layer{layer}.ffn.w1"),
                d,
                config.ffn_hidden,
                &mut rng,
            );
            state.push(format!("layer{layer}.ffn.b1"), NdArray::zeros(&[config.ffn_hidden]));
            linear(
                &mut state,
                format!("layer{layer}.ffn.w2"),
                config.ffn_hidden,
                d,
                &mut rng,
            );
            state.push(format!("layer{layer}.ffn.b2"), NdArray::zeros(&[d]));
            if config.use_layer_norm {
                state.push(format!("layer{layer}.ln2.gamma"), ones(d));
                state.push(format!("layer{layer}.ln2.beta"), NdArray::zeros(&[d]));
            }
        }
        state.push("pool.query".into(), NdArray::zeros(&[1, d]));
        for proj in ["wk", "wv", "wo"] {
            linear(&mut state, format!("pool.{proj}"), d, d, &mut rng);
        }
        for (i, pair) in config.decoder_layers.windows(2).enumerate() {
            linear(&mut state, format!("decoder{i}.w"), pair[0], pair[1], &mut rng);
            state.push(format!("decoder{i}.b"), NdArray::zeros(&[pair[1]]));
        }
        Ok(state)
    }

    fn push(&mut self, name: String, value: NdArray<f64>) {
        self.names.push(name);
        self.values.push(value);
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn values(&self) -> &[NdArray<f64>] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [NdArray<f64>] {
        &mut self.values
    }

    pub fn get(&self, name: &str) -> &NdArray<f64> {
        let i = self
            .names
            .iter()
            .position(|n| n == name)
            .unwrap_or_else(|| panic!("unknown parameter {name}"));
        &self.values[i]
    }

    pub fn n_scalars(&self) -> usize {
        self.values.iter().map(|v| v.numel()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Copy of the state with every attention score forced flat: query and
    /// key projections and the pooling query are zeroed, so softmax outputs
    /// become uniform over live positions and pooling reduces to a mean.
    pub fn deep_sets_mode(&self) -> Self {
        let mut state = self.clone();
        for (name, value) in state.names.iter().zip(state.values.iter_mut()) {
            let zero_it = name.ends_with(".wq") && name.starts_with("layer")
                || name.ends_with(".wk") && name.starts_with("layer")
                || name == "pool.query";
            if zero_it {
                *value = NdArray::zeros(value.shape());
            }
        }
        state
    }

    /// Write `<stem>.bin` (flat little-endian f64 in parameter order) and
    /// `<stem>.json` (the sidecar with names, element offsets and shapes).
    pub fn save(&self, stem: &Path) -> Result<()> {
        let bin_path = stem.with_extension("bin");
        let json_path = stem.with_extension("json");
        let io_err = |path: &Path, source: std::io::Error| Error::Io {
            path: path.display().to_string(),
            source,
        };
        let mut offset = 0usize;
        let mut entries = Vec::with_capacity(self.len());
        let mut bytes: Vec<u8> = Vec::with_capacity(self.n_scalars() * 8);
        for (name, value) in self.names.iter().zip(&self.values) {
            entries.push(SidecarEntry {
                name: name.clone(),
                offset,
                shape: value.shape().to_vec(),
            });
            offset += value.numel();
            for x in value.data() {
                bytes.extend_from_slice(&x.to_le_bytes());
            }
        }
        let sidecar = Sidecar {
            dtype: "f64".into(),
            byte_order: "little".into(),
            params: entries,
        };
        let mut f = std::fs::File::create(&bin_path).map_err(|e| io_err(&bin_path, e))?;
        f.write_all(&bytes).map_err(|e| io_err(&bin_path, e))?;
        let json = serde_json::to_string_pretty(&sidecar).expect("sidecar serializes");
        std::fs::write(&json_path, json).map_err(|e| io_err(&json_path, e))?;
        Ok(())
    }

    /// Load a checkpoint written by [`ModelState::save`]. The config decides
    /// the expected parameter set; names and shapes must match exactly.
    pub fn load(config: &PersformerConfig, stem: &Path) -> Result<Self> {
        let bin_path = stem.with_extension("bin");
        let json_path = stem.with_extension("json");
        let io_err = |path: &Path, source: std::io::Error| Error::Io {
            path: path.display().to_string(),
            source,
        };
        let sidecar_text =
            std::fs::read_to_string(&json_path).map_err(|e| io_err(&json_path, e))?;
        let sidecar: Sidecar = serde_json::from_str(&sidecar_text).map_err(|e| Error::Parse {
            file: json_path.display().to_string(),
            line: 0,
            message: e.to_string(),
        })?;
        if sidecar.dtype != "f64" || sidecar.byte_order != "little" {
            return Err(Error::InvalidConfig(format!(
                "unsupported checkpoint encoding {}/{}",
                sidecar.dtype, sidecar.byte_order
            )));
        }
        let mut f = std::fs::File::open(&bin_path).map_err(|e| io_err(&bin_path, e))?;
        let mut bytes = Vec::new();
        f.read_to_end(&mut bytes).map_err(|e| io_err(&bin_path, e))?;

        // Template state gives the expected names/shapes in order.
        let mut state = Self::init(config, 0)?;
        if sidecar.params.len() != state.len() {
            return Err(Error::InvalidConfig(format!(
                "checkpoint has {} parameters, config expects {}",
                sidecar.params.len(),
                state.len()
            )));
        }
        for (entry, (name, value)) in sidecar
            .params
            .iter()
            .zip(state.names.iter().zip(state.values.iter_mut()))
        {
            if &entry.name != name || entry.shape != value.shape() {
                return Err(Error::InvalidConfig(format!(
                    "checkpoint entry {} {:?} does not match expected {} {:?}",
                    entry.name,
                    entry.shape,
                    name,
                    value.shape()
                )));
            }
            let start = entry.offset * 8;
            let end = start + value.numel() * 8;
            if end > bytes.len() {
                return Err(Error::InvalidConfig(
                    "checkpoint binary shorter than sidecar claims".into(),
                ));
            }
            for (i, chunk) in bytes[start..end].chunks_exact(8).enumerate() {
                value.data_mut()[i] = f64::from_le_bytes(chunk.try_into().unwrap());
            }
        }
        Ok(state)
    }
}

fn ones(n: usize) -> NdArray<f64> {
    NdArray::from_vec(&[n], vec![1.0; n])
}

#[derive(Serialize, Deserialize)]
struct Sidecar {
    dtype: String,
    byte_order: String,
    params: Vec<SidecarEntry>,
}

#[derive(Serialize, Deserialize)]
struct SidecarEntry {
    name: String,
    offset: usize,
    shape: Vec<usize>,
}
