//! The composite objective and the two-stage training loop.

use molgen_chem::dense::{EDGE_CLASSES, NODE_CLASSES};
use molgen_chem::{DatasetError, MolGraph, Standardizer};
use molgen_tensor::{
    cross_entropy, kl_diag_gaussian, mse, AdamState, Bound, InverseSqrtWarmup, ParamId, ParamStore, SeededRng, StepDecay,
    Tensor, TensorError,
};
use thiserror::Error;

use crate::batch::{GraphBatch, N_SLOTS};
use crate::config::{Config, SplitMode};
use crate::model::{Model, ModelError};
use crate::nn::argmax_rows;
use crate::vae::{pool_aux_losses, reparameterize};

/// Size of full QM9 and of each of its held-out splits.
pub const QM9_SIZE: usize = 133_885;
pub const QM9_HELD_OUT: usize = 10_000;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("{context}: {source}")]
    Tensor { context: String, source: TensorError },
    #[error("non-finite {what} at epoch {epoch}, step {step}")]
    NonFinite { epoch: u64, step: usize, what: &'static str },
    #[error("training split is empty")]
    EmptyTrain,
    #[error(transparent)]
    Labels(#[from] DatasetError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

fn ctx<T>(r: Result<T, TensorError>, context: impl FnOnce() -> String) -> Result<T, TrainError> {
    r.map_err(|source| TrainError::Tensor {
        context: context(),
        source,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stage {
    One,
    Two,
}

/// Unweighted terms of one loss evaluation and the weights applied.
#[derive(Clone, Debug, PartialEq)]
pub struct LossBreakdown {
    pub node: f64,
    pub kl: f64,
    pub property: f64,
    pub edge: Option<f64>,
    pub pool_aux: f64,
    pub kl_weight: f64,
    pub total: f64,
}

impl LossBreakdown {
    /// The weighted sum, recomputed from the parts.
    pub fn weighted_sum(&self, cfg: &Config) -> f64 {
        cfg.lambda0 * self.node
            + self.kl_weight * self.kl
            + cfg.lambda2 * self.property
            + self.edge.map_or(0.0, |e| cfg.lambda3 * e)
            + cfg.pool_aux_weight * self.pool_aux
    }
}

pub struct Loss {
    pub total: Tensor,
    pub breakdown: LossBreakdown,
}

/// `lambda1` warmed linearly from 0 over `kl_warmup_epochs`.
pub fn kl_weight(cfg: &Config, epoch: u64) -> f64 {
    if cfg.kl_warmup_epochs == 0 {
        return cfg.lambda1;
    }
    cfg.lambda1 * (epoch as f64 / cfg.kl_warmup_epochs as f64).min(1.0)
}

/// Composite loss for one batch. `noise` is the `[B, c]` reparameterization
/// draw; zeros give `z = mu`.
pub fn loss_total(
    model: &Model,
    p: &Bound,
    batch: &GraphBatch,
    stage: Stage,
    epoch: u64,
    noise: &Tensor,
) -> Result<Loss, TensorError> {
    let cfg = &model.config;
    let labels = batch
        .properties
        .as_ref()
        .ok_or_else(|| TensorError::Invalid("batch has no property labels".into()))?;
    let enc = model.vae.encode(p, &batch.x, &batch.adj, &batch.mask)?;
    let z = reparameterize(&enc.mu, &enc.log_var, noise)?;
    let dec = model.vae.decode_nodes(p, &z)?;

    let node = cross_entropy(&dec.logits, &batch.node_targets, None)?;
    let kl = kl_diag_gaussian(&enc.mu, &enc.log_var)?;
    let property = mse(&model.vae.head.predict(p, &z)?, labels)?;
    let w_kl = kl_weight(cfg, epoch);
    let mut total = node.scale(cfg.lambda0).add(&kl.scale(w_kl))?.add(&property.scale(cfg.lambda2))?;

    let edge = match stage {
        Stage::One => None,
        Stage::Two => {
            let memory = model.tf.encode_context(p, &dec.probs)?;
            let logits = model
                .tf
                .teacher_forced(p, &memory, &dec.probs, &batch.node_targets, &batch.edge_targets)?;
            let e = cross_entropy(&logits, &batch.edge_targets, None)?;
            total = total.add(&e.scale(cfg.lambda3))?;
            Some(e)
        }
    };
    let mut pool_aux = 0.0;
    if cfg.pool_aux_weight > 0.0 {
        let (link, entropy) = pool_aux_losses(&enc.pools, &batch.adj)?;
        let aux = link.add(&entropy)?;
        pool_aux = aux.item();
        total = total.add(&aux.scale(cfg.pool_aux_weight))?;
    }
    let breakdown = LossBreakdown {
        node: node.item(),
        kl: kl.item(),
        property: property.item(),
        edge: edge.as_ref().map(Tensor::item),
        pool_aux,
        kl_weight: w_kl,
        total: total.item(),
    };
    Ok(Loss { total, breakdown })
}

/// Index lists into the ingested molecules.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

/// Held-out size for `n` molecules: 10,000 at full QM9 scale, shrunk in
/// proportion for smaller datasets.
pub fn held_out_size(n: usize) -> usize {
    QM9_HELD_OUT.min(n * QM9_HELD_OUT / QM9_SIZE)
}

pub fn split_indices(n: usize, mode: SplitMode, seed: u64) -> Split {
    let mut idx: Vec<usize> = (0..n).collect();
    match mode {
        SplitMode::None => Split {
            train: idx.clone(),
            val: idx,
            test: Vec::new(),
        },
        SplitMode::Standard => {
            SeededRng::stream(seed, "split").shuffle(&mut idx);
            let h = held_out_size(n);
            let test = idx[..h].to_vec();
            let val = idx[h..2 * h].to_vec();
            let train = idx[2 * h..].to_vec();
            Split { train, val, test }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpochLog {
    pub epoch: u64,
    pub stage: Stage,
    pub train_loss: f64,
    pub val_loss: f64,
}

pub struct TrainOutcome {
    /// Parameters from the epoch with the lowest validation loss within
    /// the last stage that ran.
    pub model: Model,
    pub best_epoch: Option<u64>,
    pub history: Vec<EpochLog>,
    pub split: Split,
}

fn vae_trainable(name: &str) -> bool {
    name.starts_with("vae.")
}

fn lengths(store: &ParamStore, ids: &[ParamId]) -> Vec<usize> {
    ids.iter().map(|&id| store.get(id).data.len()).collect()
}

fn mean_loss(model: &Model, graphs: &[&MolGraph], stage: Stage, epoch: u64) -> Result<f64, TrainError> {
    let p = model.store.bind(|_| false);
    let mut sum = 0.0;
    for chunk in graphs.chunks(model.config.batch_size) {
        let b = ctx(GraphBatch::new(chunk, Some(&model.standardizer)), || "validation batch".into())?;
        let noise = Tensor::zeros([chunk.len(), model.vae.latent_dim]);
        let l = ctx(loss_total(model, &p, &b, stage, epoch, &noise), || format!("validation at epoch {epoch}"))?;
        sum += l.breakdown.total * chunk.len() as f64;
    }
    Ok(sum / graphs.len().max(1) as f64)
}

/// Runs both stages on `molecules`, calling `observe` after every epoch.
pub fn train_with(
    config: &Config,
    molecules: &[MolGraph],
    mut observe: impl FnMut(&EpochLog),
) -> Result<TrainOutcome, TrainError> {
    let split = split_indices(molecules.len(), config.split_mode, config.seed);
    if split.train.is_empty() {
        return Err(TrainError::EmptyTrain);
    }
    let train: Vec<&MolGraph> = split.train.iter().map(|&i| &molecules[i]).collect();
    let val: Vec<&MolGraph> = if split.val.is_empty() {
        train.clone()
    } else {
        split.val.iter().map(|&i| &molecules[i]).collect()
    };
    let standardizer = Standardizer::fit(&config.property_names, train.iter().copied())?;
    let mut model = Model::new(config.clone(), standardizer)?;

    let vae_ids = model.store.ids_with_prefix("vae.");
    let tf_ids: Vec<ParamId> = model.store.iter().filter(|(_, p)| !vae_trainable(&p.name)).map(|(id, _)| id).collect();
    let mut vae_opt = AdamState::new(&lengths(&model.store, &vae_ids), config.vae_lr, config.weight_decay);
    let mut tf_opt = AdamState::new(&lengths(&model.store, &tf_ids), config.transformer_lr, config.transformer_weight_decay);
    let vae_schedule = StepDecay {
        base: config.vae_lr,
        every: config.lr_decay_every,
        factor: config.lr_decay_factor,
    };
    let tf_schedule = InverseSqrtWarmup {
        base: config.transformer_lr,
        warmup: config.transformer_warmup,
    };

    let mut order_rng = SeededRng::stream(config.seed, "batches");
    let mut noise_rng = SeededRng::stream(config.seed, "noise");
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut history = Vec::new();
    let mut best: Option<(f64, u64, ParamStore)> = None;
    let total_epochs = config.stage1_epochs + config.stage2_epochs;

    for epoch in 0..total_epochs {
        let stage = if epoch < config.stage1_epochs { Stage::One } else { Stage::Two };
        if stage == Stage::Two && epoch == config.stage1_epochs {
            best = None;
        }
        vae_opt.learning_rate = ctx(vae_schedule.lr(epoch as i64), || "VAE schedule".into())?;
        if stage == Stage::Two {
            let since = (epoch - config.stage1_epochs) as i64;
            tf_opt.learning_rate = ctx(tf_schedule.lr(since), || "transformer schedule".into())?;
        }
        order_rng.shuffle(&mut order);
        let mut sum = 0.0;
        for (step, chunk) in order.chunks(config.batch_size).enumerate() {
            let graphs: Vec<&MolGraph> = chunk.iter().map(|&i| train[i]).collect();
            let batch = ctx(GraphBatch::new(&graphs, Some(&model.standardizer)), || {
                format!("batch at epoch {epoch}, step {step}")
            })?;
            let p = match stage {
                Stage::One => model.store.bind(|p| vae_trainable(&p.name)),
                Stage::Two => model.store.bind(|_| true),
            };
            let noise = ctx(model.vae.latent_noise(&mut noise_rng, graphs.len()), || "noise".into())?;
            let loss = ctx(loss_total(&model, &p, &batch, stage, epoch, &noise), || {
                format!("loss at epoch {epoch}, step {step}")
            })?;
            if !loss.breakdown.total.is_finite() {
                return Err(TrainError::NonFinite { epoch, step, what: "loss" });
            }
            ctx(loss.total.backward(), || format!("backward at epoch {epoch}, step {step}"))?;
            let vae_grads = p.grads(&vae_ids);
            let tf_grads = (stage == Stage::Two).then(|| p.grads(&tf_ids));
            drop(p);
            let finite = |g: &[Option<Vec<f64>>]| g.iter().flatten().flatten().all(|v| v.is_finite());
            if !finite(&vae_grads) || !tf_grads.as_deref().is_none_or(finite) {
                return Err(TrainError::NonFinite { epoch, step, what: "gradient" });
            }
            ctx(model.store.apply_adam(&vae_ids, &vae_grads, &mut vae_opt), || {
                format!("VAE update at epoch {epoch}, step {step}")
            })?;
            if let Some(g) = tf_grads {
                ctx(model.store.apply_adam(&tf_ids, &g, &mut tf_opt), || {
                    format!("transformer update at epoch {epoch}, step {step}")
                })?;
            }
            sum += loss.breakdown.total * graphs.len() as f64;
        }
        let val_loss = mean_loss(&model, &val, stage, epoch)?;
        if !val_loss.is_finite() {
            return Err(TrainError::NonFinite { epoch, step: 0, what: "validation loss" });
        }
        let log = EpochLog {
            epoch,
            stage,
            train_loss: sum / train.len() as f64,
            val_loss,
        };
        log::info!(
            "epoch {epoch} stage {:?}: train {:.6} val {:.6}",
            stage,
            log.train_loss,
            log.val_loss
        );
        observe(&log);
        history.push(log);
        if best.as_ref().is_none_or(|b| val_loss < b.0) {
            best = Some((val_loss, epoch, model.store.clone()));
        }
    }
    let best_epoch = best.as_ref().map(|b| b.1);
    if let Some((_, _, store)) = best {
        model.store = store;
    }
    Ok(TrainOutcome {
        model,
        best_epoch,
        history,
        split,
    })
}

pub fn train(config: &Config, molecules: &[MolGraph]) -> Result<TrainOutcome, TrainError> {
    train_with(config, molecules, |_| {})
}

/// Decoded node probabilities `[B, 9, 5]` at `z = mu`.
pub fn reconstruct_nodes(model: &Model, batch: &GraphBatch) -> Result<Tensor, TensorError> {
    let p = model.store.bind(|_| false);
    let enc = model.vae.encode(&p, &batch.x, &batch.adj, &batch.mask)?;
    Ok(model.vae.decode_nodes(&p, &enc.mu)?.probs)
}

/// Fraction of the 9 node slots (padding included) whose argmax class
/// from the `z = mu` reconstruction matches.
pub fn node_accuracy(model: &Model, graphs: &[&MolGraph]) -> Result<f64, TensorError> {
    let mut hit = 0usize;
    let mut total = 0usize;
    for chunk in graphs.chunks(model.config.batch_size.max(1)) {
        let b = GraphBatch::new(chunk, None)?;
        let probs = reconstruct_nodes(model, &b)?;
        let pred = argmax_rows(probs.data(), NODE_CLASSES);
        hit += pred.iter().zip(&b.node_targets).filter(|(a, b)| a == b).count();
        total += pred.len();
    }
    Ok(hit as f64 / total.max(1) as f64)
}

/// Fraction of the 36 edge slots whose teacher-forced, valence-masked
/// argmax matches, with the transformer reading the `z = mu` node
/// reconstruction.
pub fn edge_accuracy(model: &Model, graphs: &[&MolGraph]) -> Result<f64, TensorError> {
    let p = model.store.bind(|_| false);
    let mut hit = 0usize;
    let mut total = 0usize;
    for chunk in graphs.chunks(model.config.batch_size.max(1)) {
        let b = GraphBatch::new(chunk, None)?;
        let enc = model.vae.encode(&p, &b.x, &b.adj, &b.mask)?;
        let x = model.vae.decode_nodes(&p, &enc.mu)?.probs;
        let memory = model.tf.encode_context(&p, &x)?;
        let logits = model.tf.teacher_forced(&p, &memory, &x, &b.node_targets, &b.edge_targets)?;
        let pred = argmax_rows(logits.data(), EDGE_CLASSES);
        debug_assert_eq!(pred.len(), chunk.len() * N_SLOTS);
        hit += pred.iter().zip(&b.edge_targets).filter(|(a, b)| a == b).count();
        total += pred.len();
    }
    Ok(hit as f64 / total.max(1) as f64)
}
