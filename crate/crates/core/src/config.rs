//! Flat `key = value` configuration.

use std::fmt::Write as _;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: key `{key}` given twice")]
    Duplicate { line: usize, key: String },
    #[error("bad value for `{key}`: {msg}")]
    Value { key: String, msg: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Aggregator {
    Mean,
    Sum,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DecodeMode {
    Argmax,
    Sample,
}

/// How the dataset is divided into train/validation/test.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SplitMode {
    /// 10,000 test and 10,000 validation molecules, scaled down for
    /// datasets smaller than full QM9.
    Standard,
    /// Every molecule is used for training and validation alike.
    None,
}

pub const DEFAULT_PROPERTIES: [&str; 16] = [
    "mu", "alpha", "homo", "lumo", "gap", "r2", "zpve", "u0", "u298", "h298", "g298", "cv", "u0_atom",
    "u298_atom", "h298_atom", "g298_atom",
];

#[derive(Clone, Debug, PartialEq)]
pub struct Config {
    pub seed: u64,
    pub property_names: Vec<String>,
    pub latent_free_dims: usize,
    pub hidden_dim: usize,
    pub pool_sizes: Vec<usize>,
    pub aggregator: Aggregator,
    pub d_model: usize,
    pub n_heads: usize,
    pub n_enc_blocks: usize,
    pub n_dec_blocks: usize,
    pub ffn_dim: usize,
    pub decode_mode: DecodeMode,
    pub temperature: f64,
    pub lambda0: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda3: f64,
    pub kl_warmup_epochs: u64,
    pub pool_aux_weight: f64,
    pub batch_size: usize,
    pub stage1_epochs: u64,
    pub stage2_epochs: u64,
    pub vae_lr: f64,
    pub weight_decay: f64,
    pub lr_decay_every: u64,
    pub lr_decay_factor: f64,
    pub transformer_lr: f64,
    pub transformer_warmup: u64,
    pub transformer_weight_decay: f64,
    pub split_mode: SplitMode,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            seed: 0,
            property_names: DEFAULT_PROPERTIES.iter().map(|s| s.to_string()).collect(),
            latent_free_dims: 16,
            hidden_dim: 64,
            pool_sizes: vec![4, 1],
            aggregator: Aggregator::Mean,
            d_model: 64,
            n_heads: 4,
            n_enc_blocks: 2,
            n_dec_blocks: 2,
            ffn_dim: 128,
            decode_mode: DecodeMode::Argmax,
            temperature: 1.0,
            lambda0: 1.0,
            lambda1: 0.01,
            lambda2: 1.0,
            lambda3: 1.0,
            kl_warmup_epochs: 10,
            pool_aux_weight: 0.0,
            batch_size: 32,
            stage1_epochs: 70,
            stage2_epochs: 650,
            vae_lr: 5e-4,
            weight_decay: 1e-5,
            lr_decay_every: 20,
            lr_decay_factor: 0.2,
            transformer_lr: 5e-3,
            transformer_warmup: 40,
            transformer_weight_decay: 0.0,
            split_mode: SplitMode::Standard,
        }
    }
}

fn value<T: FromStr>(key: &str, v: &str) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    v.parse::<T>().map_err(|e| ConfigError::Value {
        key: key.to_string(),
        msg: format!("`{v}`: {e}"),
    })
}

fn list(key: &str, v: &str) -> Result<Vec<String>, ConfigError> {
    let items: Vec<String> = v.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect();
    if items.is_empty() {
        return Err(ConfigError::Value { key: key.into(), msg: "empty list".into() });
    }
    Ok(items)
}

impl Config {
    pub fn latent_dim(&self) -> usize {
        self.property_names.len() + self.latent_free_dims
    }

    pub fn parse(text: &str) -> Result<Config, ConfigError> {
        let mut c = Config::default();
        let mut seen: Vec<String> = Vec::new();
        for (k, raw) in text.lines().enumerate() {
            let line = k + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let (key, v) = body.split_once('=').ok_or(ConfigError::Syntax { line })?;
            let (key, v) = (key.trim(), v.trim());
            if key.is_empty() {
                return Err(ConfigError::Syntax { line });
            }
            if seen.iter().any(|s| s == key) {
                return Err(ConfigError::Duplicate { line, key: key.into() });
            }
            seen.push(key.to_string());
            c.set(key, v).map_err(|e| match e {
                ConfigError::UnknownKey { key, .. } => ConfigError::UnknownKey { line, key },
                other => other,
            })?;
        }
        c.validate()?;
        Ok(c)
    }

    fn set(&mut self, key: &str, v: &str) -> Result<(), ConfigError> {
        match key {
            "seed" => self.seed = value(key, v)?,
            "property_names" => self.property_names = list(key, v)?,
            "latent_free_dims" => self.latent_free_dims = value(key, v)?,
            "hidden_dim" => self.hidden_dim = value(key, v)?,
            "pool_sizes" => {
                self.pool_sizes = list(key, v)?.iter().map(|s| value(key, s)).collect::<Result<_, _>>()?
            }
            "aggregator" => {
                self.aggregator = match v {
                    "mean" => Aggregator::Mean,
                    "sum" => Aggregator::Sum,
                    _ => return Err(ConfigError::Value { key: key.into(), msg: format!("`{v}` is not mean or sum") }),
                }
            }
            "d_model" => self.d_model = value(key, v)?,
            "n_heads" => self.n_heads = value(key, v)?,
            "n_enc_blocks" => self.n_enc_blocks = value(key, v)?,
            "n_dec_blocks" => self.n_dec_blocks = value(key, v)?,
            "ffn_dim" => self.ffn_dim = value(key, v)?,
            "decode_mode" => {
                self.decode_mode = match v {
                    "argmax" => DecodeMode::Argmax,
                    "sample" => DecodeMode::Sample,
                    _ => {
                        return Err(ConfigError::Value { key: key.into(), msg: format!("`{v}` is not argmax or sample") })
                    }
                }
            }
            "temperature" => self.temperature = value(key, v)?,
            "lambda0" => self.lambda0 = value(key, v)?,
            "lambda1" => self.lambda1 = value(key, v)?,
            "lambda2" => self.lambda2 = value(key, v)?,
            "lambda3" => self.lambda3 = value(key, v)?,
            "kl_warmup_epochs" => self.kl_warmup_epochs = value(key, v)?,
            "pool_aux_weight" => self.pool_aux_weight = value(key, v)?,
            "batch_size" => self.batch_size = value(key, v)?,
            "stage1_epochs" => self.stage1_epochs = value(key, v)?,
            "stage2_epochs" => self.stage2_epochs = value(key, v)?,
            "vae_lr" => self.vae_lr = value(key, v)?,
            "weight_decay" => self.weight_decay = value(key, v)?,
            "lr_decay_every" => self.lr_decay_every = value(key, v)?,
            "lr_decay_factor" => self.lr_decay_factor = value(key, v)?,
            "transformer_lr" => self.transformer_lr = value(key, v)?,
            "transformer_warmup" => self.transformer_warmup = value(key, v)?,
            "transformer_weight_decay" => self.transformer_weight_decay = value(key, v)?,
            "split_mode" => {
                self.split_mode = match v {
                    "standard" => SplitMode::Standard,
                    "none" => SplitMode::None,
                    _ => {
                        return Err(ConfigError::Value { key: key.into(), msg: format!("`{v}` is not standard or none") })
                    }
                }
            }
            _ => return Err(ConfigError::UnknownKey { line: 0, key: key.into() }),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |key: &str, msg: &str| Err(ConfigError::Value { key: key.into(), msg: msg.into() });
        for (k, w) in [
            ("lambda0", self.lambda0),
            ("lambda1", self.lambda1),
            ("lambda2", self.lambda2),
            ("lambda3", self.lambda3),
            ("pool_aux_weight", self.pool_aux_weight),
            ("weight_decay", self.weight_decay),
            ("transformer_weight_decay", self.transformer_weight_decay),
        ] {
            if !(w >= 0.0 && w.is_finite()) {
                return bad(k, "must be a finite value >= 0");
            }
        }
        for (k, v) in [("vae_lr", self.vae_lr), ("transformer_lr", self.transformer_lr), ("temperature", self.temperature)] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(k, "must be a finite value > 0");
            }
        }
        if !(self.lr_decay_factor > 0.0 && self.lr_decay_factor.is_finite()) {
            return bad("lr_decay_factor", "must be > 0");
        }
        if self.batch_size == 0 {
            return bad("batch_size", "must be >= 1");
        }
        if self.hidden_dim == 0 || self.d_model == 0 || self.ffn_dim == 0 {
            return bad("hidden_dim", "layer widths must be >= 1");
        }
        if self.n_heads == 0 || self.d_model % self.n_heads != 0 {
            return bad("n_heads", "must divide d_model");
        }
        if self.lr_decay_every == 0 {
            return bad("lr_decay_every", "must be >= 1");
        }
        let p = &self.pool_sizes;
        if p.last() != Some(&1) || p.windows(2).any(|w| w[1] >= w[0]) || p[0] >= molgen_chem::MAX_ATOMS {
            return bad("pool_sizes", "must decrease strictly from below 9 down to 1");
        }
        let mut names = self.property_names.clone();
        names.sort();
        names.dedup();
        if names.len() != self.property_names.len() {
            return bad("property_names", "duplicate property");
        }
        Ok(())
    }

    /// Text form that [`Config::parse`] reads back to an equal value.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let agg = match self.aggregator {
            Aggregator::Mean => "mean",
            Aggregator::Sum => "sum",
        };
        let mode = match self.decode_mode {
            DecodeMode::Argmax => "argmax",
            DecodeMode::Sample => "sample",
        };
        let split = match self.split_mode {
            SplitMode::Standard => "standard",
            SplitMode::None => "none",
        };
        let pools: Vec<String> = self.pool_sizes.iter().map(|p| p.to_string()).collect();
        let mut kv = |k: &str, v: String| writeln!(s, "{k} = {v}").expect("string write");
        kv("seed", self.seed.to_string());
        kv("property_names", self.property_names.join(","));
        kv("latent_free_dims", self.latent_free_dims.to_string());
        kv("hidden_dim", self.hidden_dim.to_string());
        kv("pool_sizes", pools.join(","));
        kv("aggregator", agg.into());
        kv("d_model", self.d_model.to_string());
        kv("n_heads", self.n_heads.to_string());
        kv("n_enc_blocks", self.n_enc_blocks.to_string());
        kv("n_dec_blocks", self.n_dec_blocks.to_string());
        kv("ffn_dim", self.ffn_dim.to_string());
        kv("decode_mode", mode.into());
        kv("temperature", format!("{:?}", self.temperature));
        kv("lambda0", format!("{:?}", self.lambda0));
        kv("lambda1", format!("{:?}", self.lambda1));
        kv("lambda2", format!("{:?}", self.lambda2));
        kv("lambda3", format!("{:?}", self.lambda3));
        kv("kl_warmup_epochs", self.kl_warmup_epochs.to_string());
        kv("pool_aux_weight", format!("{:?}", self.pool_aux_weight));
        kv("batch_size", self.batch_size.to_string());
        kv("stage1_epochs", self.stage1_epochs.to_string());
        kv("stage2_epochs", self.stage2_epochs.to_string());
        kv("vae_lr", format!("{:?}", self.vae_lr));
        kv("weight_decay", format!("{:?}", self.weight_decay));
        kv("lr_decay_every", self.lr_decay_every.to_string());
        kv("lr_decay_factor", format!("{:?}", self.lr_decay_factor));
        kv("transformer_lr", format!("{:?}", self.transformer_lr));
        kv("transformer_warmup", self.transformer_warmup.to_string());
        kv("transformer_weight_decay", format!("{:?}", self.transformer_weight_decay));
        kv("split_mode", split.into());
        s
    }
}
