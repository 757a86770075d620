//! The three forecasters: LSTM, GRU and a Transformer encoder, each with a
//! dense scalar head on the final timestep, plus weight (de)serialization.

mod gru;
mod lstm;
mod ops;
mod transformer;
mod weights;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use gru::{GruCache, GruParams, GruStep};
pub use lstm::{LstmCache, LstmParams, LstmStep};
pub use transformer::{
    positional_encoding, EncoderLayer, LayerCache, TransformerCache, TransformerParams,
};
pub use weights::{load_weights, parse_weights, save_weights, write_weights};

use crate::error::{Error, Result};
use crate::numerics::{Matrix, ParamSet, Rng};

/// A sequence-to-scalar model with a hand-derived backward pass.
///
/// Inputs are batch × lookback matrices of scaled values; the output is one
/// prediction per row. `backward_batch` returns the gradient of
/// `Σ_b d_pred[b] · ŷ_b` with respect to every parameter.
pub trait Forecaster: ParamSet {
    type Cache;

    fn forward_batch(&self, inputs: &Matrix) -> Result<(Vec<f64>, Self::Cache)>;

    fn backward_batch(&self, cache: &Self::Cache, d_pred: &[f64]) -> Result<Self>;

    fn forward(&self, x_seq: &[f64]) -> Result<(f64, Self::Cache)> {
        let (preds, cache) = self.forward_batch(&Matrix::row_vector(x_seq))?;
        Ok((preds[0], cache))
    }

    fn backward(&self, cache: &Self::Cache, d_pred: f64) -> Result<Self> {
        self.backward_batch(cache, &[d_pred])
    }

    fn predict(&self, x_seq: &[f64]) -> Result<f64> {
        Ok(self.forward(x_seq)?.0)
    }

    fn predict_batch(&self, inputs: &Matrix) -> Result<Vec<f64>> {
        Ok(self.forward_batch(inputs)?.0)
    }
}

pub(crate) fn check_inputs(inputs: &Matrix) -> Result<()> {
    if inputs.rows() == 0 || inputs.cols() == 0 {
        return Err(Error::invalid(format!(
            "input batch must be non-empty, got {:?}",
            inputs.shape()
        )));
    }
    if !inputs.is_finite() {
        return Err(Error::NonFinite("model input".into()));
    }
    Ok(())
}

/// `ŷ_b = head_w · h_b + head_b` for each column `h_b` of `states`.
pub(crate) fn head_forward(head_w: &Matrix, head_b: &Matrix, states: &Matrix) -> Vec<f64> {
    let out = head_w.matmul(states).expect("validated shapes");
    out.row(0).iter().map(|v| v + head_b[(0, 0)]).collect()
}

/// Accumulates head gradients and returns `∂/∂states` (hidden × batch).
pub(crate) fn head_backward(
    head_w: &Matrix,
    states: &Matrix,
    d_pred: &[f64],
    d_head_w: &mut Matrix,
    d_head_b: &mut Matrix,
) -> Matrix {
    let hidden = states.rows();
    let mut d_states = Matrix::zeros(hidden, d_pred.len());
    for (b, &d) in d_pred.iter().enumerate() {
        d_head_b[(0, 0)] += d;
        for j in 0..hidden {
            d_head_w[(0, j)] += d * states[(j, b)];
            d_states[(j, b)] = d * head_w[(0, j)];
        }
    }
    d_states
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Lstm,
    Gru,
    Transformer,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [ModelKind::Lstm, ModelKind::Gru, ModelKind::Transformer];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Lstm => "lstm",
            ModelKind::Gru => "gru",
            ModelKind::Transformer => "transformer",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lstm" => Ok(ModelKind::Lstm),
            "gru" => Ok(ModelKind::Gru),
            "transformer" => Ok(ModelKind::Transformer),
            other => Err(Error::invalid(format!(
                "unknown model {other:?} (expected lstm, gru or transformer)"
            ))),
        }
    }
}

/// Architecture hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Architecture {
    Lstm {
        hidden: usize,
        forget_bias: f64,
    },
    Gru {
        hidden: usize,
    },
    Transformer {
        d_model: usize,
        heads: usize,
        layers: usize,
        d_ff: usize,
        positional: bool,
    },
}

impl Architecture {
    pub fn default_for(kind: ModelKind) -> Self {
        match kind {
            ModelKind::Lstm => Architecture::Lstm {
                hidden: 64,
                forget_bias: 1.0,
            },
            ModelKind::Gru => Architecture::Gru { hidden: 64 },
            ModelKind::Transformer => Architecture::Transformer {
                d_model: 64,
                heads: 2,
                layers: 2,
                d_ff: 128,
                positional: true,
            },
        }
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            Architecture::Lstm { .. } => ModelKind::Lstm,
            Architecture::Gru { .. } => ModelKind::Gru,
            Architecture::Transformer { .. } => ModelKind::Transformer,
        }
    }
}

/// Parameters of any of the three models.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelParams {
    Lstm(LstmParams),
    Gru(GruParams),
    Transformer(TransformerParams),
}

#[derive(Debug, Clone)]
pub enum ForwardCache {
    Lstm(LstmCache),
    Gru(GruCache),
    Transformer(TransformerCache),
}

impl ModelParams {
    pub fn init(arch: &Architecture, rng: &mut Rng) -> Result<Self> {
        Ok(match *arch {
            Architecture::Lstm {
                hidden,
                forget_bias,
            } => ModelParams::Lstm(LstmParams::init(hidden, forget_bias, rng)?),
            Architecture::Gru { hidden } => ModelParams::Gru(GruParams::init(hidden, rng)?),
            Architecture::Transformer {
                d_model,
                heads,
                layers,
                d_ff,
                positional,
            } => ModelParams::Transformer(TransformerParams::init(
                d_model, heads, layers, d_ff, positional, rng,
            )?),
        })
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            ModelParams::Lstm(_) => ModelKind::Lstm,
            ModelParams::Gru(_) => ModelKind::Gru,
            ModelParams::Transformer(_) => ModelKind::Transformer,
        }
    }
}

impl ParamSet for ModelParams {
    fn visit(&self, f: &mut dyn FnMut(&str, &Matrix)) {
        match self {
            ModelParams::Lstm(p) => p.visit(f),
            ModelParams::Gru(p) => p.visit(f),
            ModelParams::Transformer(p) => p.visit(f),
        }
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&str, &mut Matrix)) {
        match self {
            ModelParams::Lstm(p) => p.visit_mut(f),
            ModelParams::Gru(p) => p.visit_mut(f),
            ModelParams::Transformer(p) => p.visit_mut(f),
        }
    }
}

impl Forecaster for ModelParams {
    type Cache = ForwardCache;

    fn forward_batch(&self, inputs: &Matrix) -> Result<(Vec<f64>, ForwardCache)> {
        Ok(match self {
            ModelParams::Lstm(p) => {
                let (y, c) = p.forward_batch(inputs)?;
                (y, ForwardCache::Lstm(c))
            }
            ModelParams::Gru(p) => {
                let (y, c) = p.forward_batch(inputs)?;
                (y, ForwardCache::Gru(c))
            }
            ModelParams::Transformer(p) => {
                let (y, c) = p.forward_batch(inputs)?;
                (y, ForwardCache::Transformer(c))
            }
        })
    }

    fn backward_batch(&self, cache: &ForwardCache, d_pred: &[f64]) -> Result<Self> {
        match (self, cache) {
            (ModelParams::Lstm(p), ForwardCache::Lstm(c)) => {
                Ok(ModelParams::Lstm(p.backward_batch(c, d_pred)?))
            }
            (ModelParams::Gru(p), ForwardCache::Gru(c)) => {
                Ok(ModelParams::Gru(p.backward_batch(c, d_pred)?))
            }
            (ModelParams::Transformer(p), ForwardCache::Transformer(c)) => {
                Ok(ModelParams::Transformer(p.backward_batch(c, d_pred)?))
            }
            _ => Err(Error::invalid("forward cache belongs to a different model kind")),
        }
    }

}
