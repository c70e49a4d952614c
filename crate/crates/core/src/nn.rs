//! Parameter allocation and the dense layers shared by both models.

use molgen_tensor::rng::glorot_uniform;
use molgen_tensor::{Bound, ParamId, ParamStore, Result, SeededRng, Tensor, TensorError};

/// Adds parameters to a store, or finds them if it already holds them
/// (as after loading a checkpoint).
pub struct Builder<'a> {
    pub store: &'a mut ParamStore,
    pub rng: SeededRng,
}

pub enum Init {
    Glorot,
    Zeros,
    Ones,
    Normal(f64),
}

impl Builder<'_> {
    pub fn param(&mut self, name: &str, shape: &[usize], init: Init) -> Result<ParamId> {
        if let Some(id) = self.store.find(name) {
            if self.store.get(id).shape != shape {
                return Err(TensorError::Invalid(format!(
                    "parameter `{name}` has shape {:?}, expected {shape:?}",
                    self.store.get(id).shape
                )));
            }
            return Ok(id);
        }
        let n: usize = shape.iter().product();
        let data = match init {
            Init::Glorot => {
                let (fan_in, fan_out) = match shape {
                    [a, b] => (*a, *b),
                    _ => (n, n),
                };
                glorot_uniform(&mut self.rng, fan_in, fan_out)
            }
            Init::Zeros => vec![0.0; n],
            Init::Ones => vec![1.0; n],
            Init::Normal(s) => self.rng.normals(n).into_iter().map(|v| v * s).collect(),
        };
        self.store.add(name, shape.to_vec(), data)
    }

    pub fn linear(&mut self, name: &str, fan_in: usize, fan_out: usize, bias: bool) -> Result<Linear> {
        let w = self.param(&format!("{name}.w"), &[fan_in, fan_out], Init::Glorot)?;
        let b = if bias {
            Some(self.param(&format!("{name}.b"), &[fan_out], Init::Zeros)?)
        } else {
            None
        };
        Ok(Linear { w, b })
    }
}

/// `x W + b` over the last axis.
#[derive(Clone, Copy, Debug)]
pub struct Linear {
    pub w: ParamId,
    pub b: Option<ParamId>,
}

impl Linear {
    pub fn forward(&self, p: &Bound, x: &Tensor) -> Result<Tensor> {
        let y = x.matmul(&p[self.w])?;
        match self.b {
            Some(b) => y.add(&p[b]),
            None => Ok(y),
        }
    }
}

/// Two linear layers with a ReLU between.
#[derive(Clone, Copy, Debug)]
pub struct Mlp2 {
    pub first: Linear,
    pub second: Linear,
}

impl Mlp2 {
    pub fn new(b: &mut Builder, name: &str, fan_in: usize, hidden: usize, fan_out: usize) -> Result<Self> {
        Ok(Mlp2 {
            first: b.linear(&format!("{name}.0"), fan_in, hidden, true)?,
            second: b.linear(&format!("{name}.1"), hidden, fan_out, true)?,
        })
    }

    pub fn forward(&self, p: &Bound, x: &Tensor) -> Result<Tensor> {
        self.second.forward(p, &self.first.forward(p, x)?.relu())
    }
}

/// Row-wise argmax of a row-major `[rows, width]` buffer.
pub fn argmax_rows(data: &[f64], width: usize) -> Vec<usize> {
    data.chunks(width)
        .map(|row| {
            let mut best = 0;
            for (k, &v) in row.iter().enumerate() {
                if v > row[best] {
                    best = k;
                }
            }
            best
        })
        .collect()
}
