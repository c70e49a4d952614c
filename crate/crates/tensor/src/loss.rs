//! Scalar losses built on the differentiable ops.

use crate::error::{Result, TensorError};
use crate::ops::Op;
use crate::tensor::Tensor;

/// Mean negative log-likelihood of integer class targets.
///
/// The last axis of `logits` holds the classes; every other axis indexes a
/// position, flattened row-major, and `targets` has one entry per position.
/// Positions with `exclude[p] == true` are dropped from the mean.
pub fn cross_entropy(logits: &Tensor, targets: &[usize], exclude: Option<&[bool]>) -> Result<Tensor> {
    let classes = logits.shape().last().copied().unwrap_or(0);
    if classes < 2 {
        return Err(TensorError::Invalid(format!(
            "cross entropy needs at least 2 classes, got {classes}"
        )));
    }
    let positions = logits.numel() / classes;
    if targets.len() != positions {
        return Err(TensorError::Invalid(format!(
            "{} targets for {positions} positions",
            targets.len()
        )));
    }
    if let Some(ex) = exclude {
        if ex.len() != positions {
            return Err(TensorError::Invalid(format!(
                "mask of length {} for {positions} positions",
                ex.len()
            )));
        }
    }
    let include: Vec<bool> = (0..positions).map(|p| exclude.is_none_or(|ex| !ex[p])).collect();
    let count = include.iter().filter(|&&b| b).count();
    if count == 0 {
        return Err(TensorError::AllMasked);
    }

    let x = logits.data();
    let mut probs = vec![0.0; x.len()];
    let mut total = 0.0;
    for p in 0..positions {
        let t = targets[p];
        if t >= classes {
            return Err(TensorError::TargetOutOfRange { target: t, classes });
        }
        let row = &x[p * classes..(p + 1) * classes];
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !max.is_finite() {
            return Err(TensorError::NoFiniteEntry);
        }
        // log-sum-exp as ln_1p over the non-maximal terms keeps tiny losses precise
        let top = row.iter().position(|&v| v == max).unwrap();
        let rest: f64 = row
            .iter()
            .enumerate()
            .filter(|&(c, _)| c != top)
            .map(|(_, v)| (v - max).exp())
            .sum();
        let denom = 1.0 + rest;
        for (c, v) in row.iter().enumerate() {
            probs[p * classes + c] = (v - max).exp() / denom;
        }
        if include[p] {
            total -= row[t] - max - rest.ln_1p();
        }
    }
    let loss = total / count as f64;
    Ok(Tensor::from_op(
        Vec::new(),
        vec![loss],
        Op::CrossEntropy {
            targets: targets.to_vec(),
            include,
            count,
            probs,
        },
        vec![logits.clone()],
    ))
}

/// KL(N(mu, exp(log_var)) || N(0, I)), summed over the last axis and
/// averaged over the leading (batch) positions.
pub fn kl_diag_gaussian(mu: &Tensor, log_var: &Tensor) -> Result<Tensor> {
    if mu.shape() != log_var.shape() {
        return Err(TensorError::ShapeMismatch {
            op: "kl_diag_gaussian",
            lhs: mu.shape().to_vec(),
            rhs: log_var.shape().to_vec(),
        });
    }
    let dims = mu.shape().last().copied().unwrap_or(1).max(1);
    let batch = (mu.numel() / dims).max(1) as f64;
    // 1 + log_var - mu^2 - exp(log_var)
    let inner = log_var.add_scalar(1.0).sub(&mu.square())?.sub(&log_var.exp())?;
    Ok(inner.sum().scale(-0.5 / batch))
}

/// Mean squared error over all elements.
pub fn mse(pred: &Tensor, target: &Tensor) -> Result<Tensor> {
    if pred.shape() != target.shape() {
        return Err(TensorError::ShapeMismatch {
            op: "mse",
            lhs: pred.shape().to_vec(),
            rhs: target.shape().to_vec(),
        });
    }
    Ok(pred.sub(target)?.square().mean())
}

pub fn dot(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    if a.shape() != b.shape() {
        return Err(TensorError::ShapeMismatch {
            op: "dot",
            lhs: a.shape().to_vec(),
            rhs: b.shape().to_vec(),
        });
    }
    Ok(a.mul(b)?.sum())
}
