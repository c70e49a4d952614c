//! Adam with decoupled weight decay, plus the two learning-rate schedules.

use crate::error::{Result, TensorError};

pub const DEFAULT_BETA1: f64 = 0.9;
pub const DEFAULT_BETA2: f64 = 0.999;
pub const DEFAULT_EPSILON: f64 = 1e-8;

/// Optimizer state for one parameter group.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub step: u64,
    pub first_moment: Vec<Vec<f64>>,
    pub second_moment: Vec<Vec<f64>>,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamState {
    /// Zeroed moments for parameters of the given flat lengths.
    pub fn new(lengths: &[usize], learning_rate: f64, weight_decay: f64) -> Self {
        AdamState {
            step: 0,
            first_moment: lengths.iter().map(|&n| vec![0.0; n]).collect(),
            second_moment: lengths.iter().map(|&n| vec![0.0; n]).collect(),
            learning_rate,
            weight_decay,
            beta1: DEFAULT_BETA1,
            beta2: DEFAULT_BETA2,
            epsilon: DEFAULT_EPSILON,
        }
    }
}

/// One Adam update in place.
///
/// Weight decay is decoupled: `p <- p - lr * wd * p` first, then the
/// bias-corrected adaptive step. Gradients are checked for NaN/inf before
/// anything is written, so a failing call leaves params and state unchanged.
pub fn adam_step(params: &mut [&mut [f64]], grads: &[&[f64]], names: &[&str], state: &mut AdamState) -> Result<()> {
    if params.len() != grads.len() || params.len() != state.first_moment.len() || names.len() != params.len() {
        return Err(TensorError::Invalid(format!(
            "adam: {} params, {} grads, {} moment buffers",
            params.len(),
            grads.len(),
            state.first_moment.len()
        )));
    }
    for (i, (p, g)) in params.iter().zip(grads).enumerate() {
        if p.len() != g.len() || p.len() != state.first_moment[i].len() {
            return Err(TensorError::Invalid(format!(
                "adam: length mismatch for parameter `{}`",
                names[i]
            )));
        }
        if g.iter().any(|v| !v.is_finite()) {
            return Err(TensorError::NonFiniteGradient(names[i].to_string()));
        }
    }

    state.step += 1;
    let t = state.step as i32;
    let (b1, b2) = (state.beta1, state.beta2);
    let bc1 = 1.0 - b1.powi(t);
    let bc2 = 1.0 - b2.powi(t);
    let lr = state.learning_rate;
    let decay = lr * state.weight_decay;
    for (i, (p, g)) in params.iter_mut().zip(grads).enumerate() {
        let m = &mut state.first_moment[i];
        let v = &mut state.second_moment[i];
        for j in 0..p.len() {
            p[j] -= decay * p[j];
            m[j] = b1 * m[j] + (1.0 - b1) * g[j];
            v[j] = b2 * v[j] + (1.0 - b2) * g[j] * g[j];
            let m_hat = m[j] / bc1;
            let v_hat = v[j] / bc2;
            p[j] -= lr * m_hat / (v_hat.sqrt() + state.epsilon);
        }
    }
    Ok(())
}

/// Step decay: `base * factor^floor(epoch / every)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepDecay {
    pub base: f64,
    pub every: u64,
    pub factor: f64,
}

impl Default for StepDecay {
    fn default() -> Self {
        StepDecay {
            base: 5e-4,
            every: 20,
            factor: 0.2,
        }
    }
}

impl StepDecay {
    pub fn lr(&self, epoch: i64) -> Result<f64> {
        if epoch < 0 {
            return Err(TensorError::NegativeEpoch(epoch));
        }
        let k = epoch as u64 / self.every.max(1);
        Ok(self.base * self.factor.powi(k.min(i32::MAX as u64) as i32))
    }
}

/// Inverse-square-root schedule with linear warmup:
/// `base * min(t^-1/2, t * warmup^-3/2)` where `t = epochs_since_start + 1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InverseSqrtWarmup {
    pub base: f64,
    pub warmup: u64,
}

impl Default for InverseSqrtWarmup {
    fn default() -> Self {
        InverseSqrtWarmup {
            base: 5e-3,
            warmup: 40,
        }
    }
}

impl InverseSqrtWarmup {
    pub fn lr(&self, epochs_since_start: i64) -> Result<f64> {
        if epochs_since_start < 0 {
            return Err(TensorError::NegativeEpoch(epochs_since_start));
        }
        let t = (epochs_since_start + 1) as f64;
        let w = self.warmup.max(1) as f64;
        Ok(self.base * t.powf(-0.5).min(t * w.powf(-1.5)))
    }
}

/// VAE learning rate at `epoch` with the default step decay.
pub fn vae_lr_schedule(epoch: i64) -> Result<f64> {
    StepDecay::default().lr(epoch)
}

/// Transformer learning rate with the default base factor.
pub fn transformer_lr_schedule(epochs_since_stage2: i64, warmup: u64) -> Result<f64> {
    InverseSqrtWarmup {
        warmup,
        ..InverseSqrtWarmup::default()
    }
    .lr(epochs_since_stage2)
}
