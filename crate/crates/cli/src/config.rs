//! Run configuration: a TOML file with one section per model. Every field has
//! a default, so an empty file is a valid config.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use seqcast::data::{parse_date, AdfFrequency, SynthKind};
use seqcast::forecast::{CompareConfig, ModelSpec};
use seqcast::models::{Architecture, ModelKind};
use seqcast::training::TrainConfig;

/// Optimizer and loop settings for one model. The seed comes from the run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub grad_clip_norm: f64,
}

impl Default for TrainSection {
    fn default() -> Self {
        let d = TrainConfig::default();
        Self {
            learning_rate: d.learning_rate,
            beta1: d.beta1,
            beta2: d.beta2,
            epsilon: d.epsilon,
            batch_size: d.batch_size,
            max_epochs: d.max_epochs,
            patience: d.patience,
            grad_clip_norm: d.grad_clip_norm,
        }
    }
}

impl TrainSection {
    fn with_seed(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            learning_rate: self.learning_rate,
            beta1: self.beta1,
            beta2: self.beta2,
            epsilon: self.epsilon,
            batch_size: self.batch_size,
            max_epochs: self.max_epochs,
            patience: self.patience,
            grad_clip_norm: self.grad_clip_norm,
            seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LstmSection {
    pub hidden: usize,
    pub forget_bias: f64,
    pub train: TrainSection,
}

impl Default for LstmSection {
    fn default() -> Self {
        Self {
            hidden: 64,
            forget_bias: 1.0,
            train: TrainSection::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GruSection {
    pub hidden: usize,
    pub train: TrainSection,
}

impl Default for GruSection {
    fn default() -> Self {
        Self {
            hidden: 64,
            train: TrainSection::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TransformerSection {
    pub d_model: usize,
    pub heads: usize,
    pub layers: usize,
    pub d_ff: usize,
    pub positional: bool,
    pub train: TrainSection,
}

impl Default for TransformerSection {
    fn default() -> Self {
        Self {
            d_model: 64,
            heads: 2,
            layers: 2,
            d_ff: 128,
            positional: true,
            train: TrainSection::default(),
        }
    }
}

/// Settings for the `synth` fixture generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSection {
    pub rows: usize,
    pub start_date: String,
    pub series: SynthKind,
}

impl Default for SynthSection {
    fn default() -> Self {
        Self {
            rows: 1000,
            start_date: "2015-01-02".into(),
            series: SynthKind::default_sine(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data_path: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub seed: u64,
    pub lookback: usize,
    pub horizon: usize,
    pub val_frac: f64,
    pub adf_frequency: AdfFrequency,
    pub parallel: bool,
    pub synth: SynthSection,
    pub lstm: LstmSection,
    pub gru: GruSection,
    pub transformer: TransformerSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            data_path: None,
            output_dir: PathBuf::from("out"),
            seed: 0,
            lookback: 60,
            horizon: 30,
            val_frac: 0.1,
            adf_frequency: AdfFrequency::Monthly,
            parallel: true,
            synth: SynthSection::default(),
            lstm: LstmSection::default(),
            gru: GruSection::default(),
            transformer: TransformerSection::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    /// The canonical form: every field spelled out, fixed order.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always serializable")
    }

    pub fn architecture(&self, kind: ModelKind) -> Architecture {
        match kind {
            ModelKind::Lstm => Architecture::Lstm {
                hidden: self.lstm.hidden,
                forget_bias: self.lstm.forget_bias,
            },
            ModelKind::Gru => Architecture::Gru {
                hidden: self.gru.hidden,
            },
            ModelKind::Transformer => Architecture::Transformer {
                d_model: self.transformer.d_model,
                heads: self.transformer.heads,
                layers: self.transformer.layers,
                d_ff: self.transformer.d_ff,
                positional: self.transformer.positional,
            },
        }
    }

    pub fn model_spec(&self, kind: ModelKind) -> ModelSpec {
        let section = match kind {
            ModelKind::Lstm => &self.lstm.train,
            ModelKind::Gru => &self.gru.train,
            ModelKind::Transformer => &self.transformer.train,
        };
        ModelSpec {
            architecture: self.architecture(kind),
            train: section.with_seed(self.seed),
        }
    }

    pub fn compare_config(&self) -> CompareConfig {
        CompareConfig {
            lookback: self.lookback,
            horizon: self.horizon,
            val_frac: self.val_frac,
            models: ModelKind::ALL.iter().map(|&k| self.model_spec(k)).collect(),
            parallel: self.parallel,
        }
    }

    /// Checks everything that can be checked without touching the data.
    pub fn validate(&self) -> Result<(), String> {
        if self.lookback == 0 {
            return Err("lookback must be at least 1".into());
        }
        if self.horizon < 2 {
            return Err("horizon must be at least 2 so the forecast can be scored".into());
        }
        if !(self.val_frac > 0.0 && self.val_frac < 1.0) {
            return Err(format!("val_frac must lie in (0, 1), got {}", self.val_frac));
        }
        if self.output_dir.as_os_str().is_empty() {
            return Err("output_dir must not be empty".into());
        }
        if let Some(data) = &self.data_path {
            if data == &self.output_dir {
                return Err("data_path and output_dir must differ".into());
            }
        }
        if self.synth.rows == 0 {
            return Err("synth.rows must be at least 1".into());
        }
        if parse_date(&self.synth.start_date).is_none() {
            return Err(format!(
                "synth.start_date {:?} is not a date",
                self.synth.start_date
            ));
        }
        for kind in ModelKind::ALL {
            let spec = self.model_spec(kind);
            spec.train
                .validate()
                .map_err(|e| format!("[{kind}.train] {e}"))?;
            let dims_ok = match spec.architecture {
                Architecture::Lstm { hidden, forget_bias } => hidden > 0 && forget_bias.is_finite(),
                Architecture::Gru { hidden } => hidden > 0,
                Architecture::Transformer {
                    d_model,
                    heads,
                    layers,
                    d_ff,
                    ..
                } => {
                    if heads > 0 && d_model % heads != 0 {
                        return Err(format!(
                            "[transformer] d_model {d_model} is not divisible by {heads} heads"
                        ));
                    }
                    d_model > 0 && heads > 0 && layers > 0 && d_ff > 0
                }
            };
            if !dims_ok {
                return Err(format!("[{kind}] dimensions must be positive and finite"));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        assert_eq!(RunConfig::from_toml("").unwrap(), RunConfig::default());
        RunConfig::default().validate().unwrap();
    }

    #[test]
    fn canonical_form_round_trips() {
        let mut c = RunConfig::default();
        c.data_path = Some("prices.csv".into());
        c.seed = 7;
        c.gru.train.learning_rate = 3e-4;
        c.synth.series = SynthKind::Gbm {
            start: 100.0,
            drift: 0.001,
            volatility: 0.02,
        };
        let text = c.to_toml();
        let back = RunConfig::from_toml(&text).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.to_toml(), text);
    }

    #[test]
    fn partial_sections_keep_other_defaults() {
        let c = RunConfig::from_toml("seed = 3\n[transformer]\nheads = 4\n[lstm.train]\npatience = 4\n")
            .unwrap();
        assert_eq!(c.seed, 3);
        assert_eq!(c.transformer.heads, 4);
        assert_eq!(c.transformer.d_model, 64);
        assert_eq!(c.lstm.train.patience, 4);
        assert_eq!(c.model_spec(ModelKind::Lstm).train.seed, 3);
    }

    #[test]
    fn bad_configs_are_rejected() {
        assert!(RunConfig::from_toml("sed = 3").is_err());
        assert!(RunConfig::from_toml("[gru]\nhiden = 3").is_err());
        let bad = [
            "[transformer]\nheads = 3",
            "[lstm.train]\npatience = 0",
            "val_frac = 1.5",
            "lookback = 0",
            "horizon = 1",
            "data_path = \"out\"\noutput_dir = \"out\"",
            "[synth]\nstart_date = \"soon\"",
        ];
        for text in bad {
            let c = RunConfig::from_toml(text).unwrap();
            assert!(c.validate().is_err(), "{text}");
        }
    }
}
