//! The combined model and its on-disk form.
//!
//! A checkpoint is an MGG1 tensor file holding every parameter plus two
//! kinds of metadata tensor: `meta/config` (the config text as bytes) and
//! `meta/property/<k>/<name>` (`[mean, std]` of property `k`).

use std::fs;
use std::path::Path;

use molgen_chem::Standardizer;
use molgen_tensor::checkpoint::{checkpoint_bytes, parse_checkpoint, CheckpointError};
use molgen_tensor::{ParamStore, SeededRng, TensorError};
use thiserror::Error;

use crate::config::{Config, ConfigError};
use crate::nn::Builder;
use crate::transformer::EdgeTransformer;
use crate::vae::Vae;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
    #[error("checkpoint config: {0}")]
    Config(#[from] ConfigError),
    #[error("checkpoint metadata: {0}")]
    Meta(String),
    #[error("cannot access {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

pub struct Model {
    pub config: Config,
    pub store: ParamStore,
    pub vae: Vae,
    pub tf: EdgeTransformer,
    pub standardizer: Standardizer,
}

fn build(config: &Config, store: &mut ParamStore) -> Result<(Vae, EdgeTransformer), TensorError> {
    let vae = Vae::new(
        &mut Builder {
            store: &mut *store,
            rng: SeededRng::stream(config.seed, "init/vae"),
        },
        config,
    )?;
    let tf = EdgeTransformer::new(
        &mut Builder {
            store,
            rng: SeededRng::stream(config.seed, "init/transformer"),
        },
        config,
    )?;
    Ok((vae, tf))
}

impl Model {
    /// Freshly initialized parameters.
    pub fn new(config: Config, standardizer: Standardizer) -> Result<Model, ModelError> {
        if standardizer.names != config.property_names {
            return Err(ModelError::Meta("standardizer and config list different properties".into()));
        }
        let mut store = ParamStore::new();
        let (vae, tf) = build(&config, &mut store)?;
        Ok(Model {
            config,
            store,
            vae,
            tf,
            standardizer,
        })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = self.store.clone();
        let text: Vec<f64> = self.config.to_text().bytes().map(f64::from).collect();
        out.add("meta/config", [text.len()], text).expect("meta names are unique");
        for (k, name) in self.standardizer.names.iter().enumerate() {
            out.add(
                format!("meta/property/{k}/{name}"),
                [2],
                vec![self.standardizer.mean[k], self.standardizer.std[k]],
            )
            .expect("meta names are unique");
        }
        checkpoint_bytes(&out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Model, ModelError> {
        let all = parse_checkpoint(bytes)?;
        let mut params = ParamStore::new();
        let mut config_text = None;
        let mut props: Vec<(usize, String, f64, f64)> = Vec::new();
        for (_, p) in all.iter() {
            if p.name == "meta/config" {
                let bytes: Option<Vec<u8>> = p
                    .data
                    .iter()
                    .map(|&v| (v.fract() == 0.0 && (0.0..=255.0).contains(&v)).then_some(v as u8))
                    .collect();
                let text = bytes
                    .and_then(|b| String::from_utf8(b).ok())
                    .ok_or_else(|| ModelError::Meta("config is not text".into()))?;
                config_text = Some(text);
            } else if let Some(rest) = p.name.strip_prefix("meta/property/") {
                let (idx, name) = rest
                    .split_once('/')
                    .ok_or_else(|| ModelError::Meta(format!("bad tensor name `{}`", p.name)))?;
                let idx: usize = idx.parse().map_err(|_| ModelError::Meta(format!("bad index in `{}`", p.name)))?;
                if p.data.len() != 2 {
                    return Err(ModelError::Meta(format!("`{}` must hold [mean, std]", p.name)));
                }
                props.push((idx, name.to_string(), p.data[0], p.data[1]));
            } else if p.name.starts_with("meta/") {
                return Err(ModelError::Meta(format!("unknown metadata `{}`", p.name)));
            } else {
                params.add(p.name.clone(), p.shape.clone(), p.data.clone())?;
            }
        }
        let config = Config::parse(&config_text.ok_or_else(|| ModelError::Meta("no meta/config".into()))?)?;
        props.sort_by_key(|p| p.0);
        if props.iter().enumerate().any(|(k, p)| p.0 != k) {
            return Err(ModelError::Meta("property indices are not 0..P".into()));
        }
        let standardizer = Standardizer {
            names: props.iter().map(|p| p.1.clone()).collect(),
            mean: props.iter().map(|p| p.2).collect(),
            std: props.iter().map(|p| p.3).collect(),
        };
        if standardizer.names != config.property_names {
            return Err(ModelError::Meta("property metadata does not match config".into()));
        }
        let expected = params.len();
        let (vae, tf) = build(&config, &mut params)?;
        if params.len() != expected {
            return Err(ModelError::Meta(format!(
                "checkpoint lacks {} parameters the config requires",
                params.len() - expected
            )));
        }
        Ok(Model {
            config,
            store: params,
            vae,
            tf,
            standardizer,
        })
    }

    pub fn save(&self, path: &Path) -> Result<(), ModelError> {
        fs::write(path, self.to_bytes()).map_err(|source| ModelError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Model, ModelError> {
        let bytes = fs::read(path).map_err(|source| ModelError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Model::from_bytes(&bytes)
    }

    pub fn property_index(&self, name: &str) -> Option<usize> {
        self.config.property_names.iter().position(|n| n == name)
    }
}
