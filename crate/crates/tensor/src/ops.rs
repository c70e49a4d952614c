//! Differentiable operations on [`Tensor`].

use crate::error::{Result, TensorError};
use crate::gemm::{gemm, View};
use crate::shape::{
    broadcast_shape, numel, permute_data, reduce_to, split_axis, zip_broadcast,
};
use crate::tensor::{Node, Tensor};

#[derive(Clone, Copy, Debug)]
pub(crate) enum MatMulMode {
    /// `b` is a plain matrix shared by every leading index of `a`.
    Flat,
    /// `a` is a plain matrix shared by every leading index of `b`.
    BroadcastLhs,
    /// Equal leading (batch) extents on both sides.
    Batched,
}

pub(crate) enum Op {
    Leaf,
    Add,
    Sub,
    Mul,
    Div,
    Neg,
    Scale(f64),
    AddScalar,
    Relu,
    Exp,
    Ln,
    Sqrt,
    MatMul(MatMulMode),
    Reshape,
    Permute(Vec<usize>),
    SumAll,
    SumAxis { axis: usize },
    Softmax { axis: usize },
    LogSoftmax { axis: usize },
    CrossEntropy {
        targets: Vec<usize>,
        include: Vec<bool>,
        count: usize,
        probs: Vec<f64>,
    },
    LayerNorm { inv_std: Vec<f64> },
    IndexSelect { indices: Vec<usize> },
    Narrow { axis: usize, start: usize },
    Concat { axis: usize },
}

fn check_axis(shape: &[usize], axis: usize) -> Result<()> {
    if axis >= shape.len() {
        return Err(TensorError::InvalidAxis {
            axis,
            rank: shape.len(),
        });
    }
    Ok(())
}

impl Tensor {
    fn binary(&self, other: &Tensor, op: Op, name: &'static str, f: impl Fn(f64, f64) -> f64) -> Result<Tensor> {
        let out_shape = broadcast_shape(self.shape(), other.shape()).ok_or_else(|| {
            TensorError::ShapeMismatch {
                op: name,
                lhs: self.shape().to_vec(),
                rhs: other.shape().to_vec(),
            }
        })?;
        let data = zip_broadcast(self.data(), self.shape(), other.data(), other.shape(), &out_shape, f);
        Ok(Tensor::from_op(out_shape, data, op, vec![self.clone(), other.clone()]))
    }

    fn unary(&self, op: Op, f: impl Fn(f64) -> f64) -> Tensor {
        let data = self.data().iter().map(|&x| f(x)).collect();
        Tensor::from_op(self.shape().to_vec(), data, op, vec![self.clone()])
    }

    pub fn add(&self, other: &Tensor) -> Result<Tensor> {
        self.binary(other, Op::Add, "add", |a, b| a + b)
    }

    pub fn sub(&self, other: &Tensor) -> Result<Tensor> {
        self.binary(other, Op::Sub, "sub", |a, b| a - b)
    }

    pub fn mul(&self, other: &Tensor) -> Result<Tensor> {
        self.binary(other, Op::Mul, "mul", |a, b| a * b)
    }

    pub fn div(&self, other: &Tensor) -> Result<Tensor> {
        self.binary(other, Op::Div, "div", |a, b| a / b)
    }

    pub fn neg(&self) -> Tensor {
        self.unary(Op::Neg, |x| -x)
    }

    pub fn scale(&self, c: f64) -> Tensor {
        self.unary(Op::Scale(c), |x| c * x)
    }

    pub fn add_scalar(&self, c: f64) -> Tensor {
        self.unary(Op::AddScalar, |x| x + c)
    }

    pub fn relu(&self) -> Tensor {
        self.unary(Op::Relu, |x| x.max(0.0))
    }

    pub fn exp(&self) -> Tensor {
        self.unary(Op::Exp, f64::exp)
    }

    pub fn ln(&self) -> Tensor {
        self.unary(Op::Ln, f64::ln)
    }

    pub fn sqrt(&self) -> Tensor {
        self.unary(Op::Sqrt, f64::sqrt)
    }

    pub fn square(&self) -> Tensor {
        self.mul(self).expect("same shape")
    }

    /// Matrix product over the last two axes.
    ///
    /// Supported layouts: `[.., m, k] x [k, n]`, `[m, k] x [.., k, n]` and
    /// `[batch.., m, k] x [batch.., k, n]` with identical batch extents.
    pub fn matmul(&self, other: &Tensor) -> Result<Tensor> {
        let (a, b) = (self.shape(), other.shape());
        let mismatch = || TensorError::ShapeMismatch {
            op: "matmul",
            lhs: a.to_vec(),
            rhs: b.to_vec(),
        };
        if a.len() < 2 || b.len() < 2 {
            return Err(mismatch());
        }
        let (m, k) = (a[a.len() - 2], a[a.len() - 1]);
        let (k2, n) = (b[b.len() - 2], b[b.len() - 1]);
        if k != k2 {
            return Err(mismatch());
        }
        let (mode, out_shape) = if b.len() == 2 {
            let mut s = a[..a.len() - 1].to_vec();
            s.push(n);
            (MatMulMode::Flat, s)
        } else if a.len() == 2 {
            let mut s = b[..b.len() - 2].to_vec();
            s.extend([m, n]);
            (MatMulMode::BroadcastLhs, s)
        } else if a[..a.len() - 2] == b[..b.len() - 2] {
            let mut s = a[..a.len() - 2].to_vec();
            s.extend([m, n]);
            (MatMulMode::Batched, s)
        } else {
            return Err(mismatch());
        };
        let mut out = vec![0.0; numel(&out_shape)];
        let (ad, bd) = (self.data(), other.data());
        match mode {
            MatMulMode::Flat => {
                let rows = numel(&a[..a.len() - 1]);
                gemm(rows, k, n, View::row_major(ad, k), View::row_major(bd, n), 0.0, &mut out);
            }
            MatMulMode::BroadcastLhs | MatMulMode::Batched => {
                let batch = numel(&out_shape[..out_shape.len() - 2]);
                for t in 0..batch {
                    let a_t = match mode {
                        MatMulMode::Batched => &ad[t * m * k..(t + 1) * m * k],
                        _ => ad,
                    };
                    gemm(
                        m,
                        k,
                        n,
                        View::row_major(a_t, k),
                        View::row_major(&bd[t * k * n..(t + 1) * k * n], n),
                        0.0,
                        &mut out[t * m * n..(t + 1) * m * n],
                    );
                }
            }
        }
        Ok(Tensor::from_op(out_shape, out, Op::MatMul(mode), vec![self.clone(), other.clone()]))
    }

    pub fn reshape(&self, shape: impl Into<Vec<usize>>) -> Result<Tensor> {
        let shape = shape.into();
        if numel(&shape) != self.numel() {
            return Err(TensorError::ShapeMismatch {
                op: "reshape",
                lhs: self.shape().to_vec(),
                rhs: shape,
            });
        }
        Ok(Tensor::from_op(shape, self.to_vec(), Op::Reshape, vec![self.clone()]))
    }

    pub fn permute(&self, axes: &[usize]) -> Result<Tensor> {
        let rank = self.rank();
        let mut seen = vec![false; rank];
        if axes.len() != rank || axes.iter().any(|&a| a >= rank || std::mem::replace(&mut seen[a], true)) {
            return Err(TensorError::Invalid(format!(
                "permutation {axes:?} invalid for rank {rank}"
            )));
        }
        let out_shape: Vec<usize> = axes.iter().map(|&a| self.shape()[a]).collect();
        let data = permute_data(self.data(), self.shape(), axes);
        Ok(Tensor::from_op(out_shape, data, Op::Permute(axes.to_vec()), vec![self.clone()]))
    }

    /// Swaps the last two axes.
    pub fn transpose(&self) -> Result<Tensor> {
        let rank = self.rank();
        if rank < 2 {
            return Err(TensorError::InvalidAxis { axis: 1, rank });
        }
        let mut axes: Vec<usize> = (0..rank).collect();
        axes.swap(rank - 2, rank - 1);
        self.permute(&axes)
    }

    pub fn sum(&self) -> Tensor {
        let s = self.data().iter().sum();
        Tensor::from_op(Vec::new(), vec![s], Op::SumAll, vec![self.clone()])
    }

    pub fn mean(&self) -> Tensor {
        let n = self.numel().max(1) as f64;
        self.sum().scale(1.0 / n)
    }

    pub fn sum_axis(&self, axis: usize, keepdim: bool) -> Result<Tensor> {
        check_axis(self.shape(), axis)?;
        let (outer, extent, inner) = split_axis(self.shape(), axis);
        let x = self.data();
        let mut out = vec![0.0; outer * inner];
        for o in 0..outer {
            for j in 0..extent {
                let src = &x[(o * extent + j) * inner..(o * extent + j + 1) * inner];
                let dst = &mut out[o * inner..(o + 1) * inner];
                dst.iter_mut().zip(src).for_each(|(d, s)| *d += s);
            }
        }
        let mut shape = self.shape().to_vec();
        if keepdim {
            shape[axis] = 1;
        } else {
            shape.remove(axis);
        }
        Ok(Tensor::from_op(shape, out, Op::SumAxis { axis }, vec![self.clone()]))
    }

    pub fn mean_axis(&self, axis: usize, keepdim: bool) -> Result<Tensor> {
        check_axis(self.shape(), axis)?;
        let n = self.shape()[axis].max(1) as f64;
        Ok(self.sum_axis(axis, keepdim)?.scale(1.0 / n))
    }

    /// Softmax along `axis`, stabilized by subtracting the slice maximum.
    /// Entries equal to `-inf` receive probability exactly zero.
    pub fn softmax(&self, axis: usize) -> Result<Tensor> {
        let out = softmax_forward(self.data(), self.shape(), axis, false)?;
        Ok(Tensor::from_op(self.shape().to_vec(), out, Op::Softmax { axis }, vec![self.clone()]))
    }

    pub fn log_softmax(&self, axis: usize) -> Result<Tensor> {
        let out = softmax_forward(self.data(), self.shape(), axis, true)?;
        Ok(Tensor::from_op(self.shape().to_vec(), out, Op::LogSoftmax { axis }, vec![self.clone()]))
    }

    /// Normalizes the last axis to zero mean and unit variance (no affine).
    pub fn layer_norm(&self, eps: f64) -> Result<Tensor> {
        let d = *self.shape().last().ok_or(TensorError::InvalidAxis { axis: 0, rank: 0 })?;
        if d == 0 {
            return Err(TensorError::EmptyAxis {
                axis: self.rank() - 1,
                shape: self.shape().to_vec(),
            });
        }
        let x = self.data();
        let rows = x.len() / d;
        let mut out = vec![0.0; x.len()];
        let mut inv_std = Vec::with_capacity(rows);
        for r in 0..rows {
            let row = &x[r * d..(r + 1) * d];
            let mean = row.iter().sum::<f64>() / d as f64;
            let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / d as f64;
            let is = 1.0 / (var + eps).sqrt();
            for (o, v) in out[r * d..(r + 1) * d].iter_mut().zip(row) {
                *o = (v - mean) * is;
            }
            inv_std.push(is);
        }
        Ok(Tensor::from_op(self.shape().to_vec(), out, Op::LayerNorm { inv_std }, vec![self.clone()]))
    }

    /// Gathers slices along axis 0.
    pub fn index_select(&self, indices: &[usize]) -> Result<Tensor> {
        if self.rank() == 0 {
            return Err(TensorError::InvalidAxis { axis: 0, rank: 0 });
        }
        let extent = self.shape()[0];
        let inner = numel(&self.shape()[1..]);
        let x = self.data();
        let mut out = Vec::with_capacity(indices.len() * inner);
        for &i in indices {
            if i >= extent {
                return Err(TensorError::IndexOutOfRange { index: i, extent });
            }
            out.extend_from_slice(&x[i * inner..(i + 1) * inner]);
        }
        let mut shape = self.shape().to_vec();
        shape[0] = indices.len();
        Ok(Tensor::from_op(
            shape,
            out,
            Op::IndexSelect {
                indices: indices.to_vec(),
            },
            vec![self.clone()],
        ))
    }

    /// The sub-range `start..start + len` along `axis`.
    pub fn narrow(&self, axis: usize, start: usize, len: usize) -> Result<Tensor> {
        check_axis(self.shape(), axis)?;
        let (outer, extent, inner) = split_axis(self.shape(), axis);
        if start + len > extent {
            return Err(TensorError::IndexOutOfRange {
                index: start + len,
                extent,
            });
        }
        let x = self.data();
        let mut out = Vec::with_capacity(outer * len * inner);
        for o in 0..outer {
            let base = (o * extent + start) * inner;
            out.extend_from_slice(&x[base..base + len * inner]);
        }
        let mut shape = self.shape().to_vec();
        shape[axis] = len;
        Ok(Tensor::from_op(shape, out, Op::Narrow { axis, start }, vec![self.clone()]))
    }

    /// Concatenates tensors along `axis`; all other extents must agree.
    pub fn concat(parts: &[Tensor], axis: usize) -> Result<Tensor> {
        let first = parts
            .first()
            .ok_or_else(|| TensorError::Invalid("concat of zero tensors".into()))?;
        check_axis(first.shape(), axis)?;
        let mut shape = first.shape().to_vec();
        shape[axis] = 0;
        for p in parts {
            let mut a = p.shape().to_vec();
            let mut b = first.shape().to_vec();
            if a.len() != b.len() {
                return Err(TensorError::ShapeMismatch { op: "concat", lhs: b, rhs: a });
            }
            a[axis] = 0;
            b[axis] = 0;
            if a != b {
                return Err(TensorError::ShapeMismatch {
                    op: "concat",
                    lhs: first.shape().to_vec(),
                    rhs: p.shape().to_vec(),
                });
            }
            shape[axis] += p.shape()[axis];
        }
        let (outer, _, inner) = split_axis(&shape, axis);
        let mut out = Vec::with_capacity(numel(&shape));
        for o in 0..outer {
            for p in parts {
                let e = p.shape()[axis];
                out.extend_from_slice(&p.data()[o * e * inner..(o + 1) * e * inner]);
            }
        }
        Ok(Tensor::from_op(shape, out, Op::Concat { axis }, parts.to_vec()))
    }
}

fn softmax_forward(x: &[f64], shape: &[usize], axis: usize, log: bool) -> Result<Vec<f64>> {
    check_axis(shape, axis)?;
    let (outer, extent, inner) = split_axis(shape, axis);
    if extent == 0 {
        return Err(TensorError::EmptyAxis {
            axis,
            shape: shape.to_vec(),
        });
    }
    let mut out = vec![0.0; x.len()];
    for o in 0..outer {
        for i in 0..inner {
            let at = |j: usize| (o * extent + j) * inner + i;
            let mut max = f64::NEG_INFINITY;
            for j in 0..extent {
                max = max.max(x[at(j)]);
            }
            if !max.is_finite() {
                return Err(TensorError::NoFiniteEntry);
            }
            let mut total = 0.0;
            for j in 0..extent {
                let e = (x[at(j)] - max).exp();
                out[at(j)] = e;
                total += e;
            }
            if log {
                let lse = total.ln();
                for j in 0..extent {
                    out[at(j)] = x[at(j)] - max - lse;
                }
            } else {
                for j in 0..extent {
                    out[at(j)] /= total;
                }
            }
        }
    }
    Ok(out)
}

impl Op {
    /// Vector-Jacobian products for each parent of `node`, given d(root)/d(node).
    pub(crate) fn backward(&self, node: &Node, g: &[f64]) -> Vec<Option<Vec<f64>>> {
        let parents = &node.parents;
        let out_shape = &node.shape;
        let want = |i: usize| parents[i].requires_grad();
        match self {
            Op::Leaf => Vec::new(),
            Op::Add => vec![
                want(0).then(|| reduce_to(g, out_shape, parents[0].shape())),
                want(1).then(|| reduce_to(g, out_shape, parents[1].shape())),
            ],
            Op::Sub => vec![
                want(0).then(|| reduce_to(g, out_shape, parents[0].shape())),
                want(1).then(|| {
                    let neg: Vec<f64> = g.iter().map(|v| -v).collect();
                    reduce_to(&neg, out_shape, parents[1].shape())
                }),
            ],
            Op::Mul => {
                let (a, b) = (&parents[0], &parents[1]);
                vec![
                    want(0).then(|| {
                        let t = zip_broadcast(g, out_shape, b.data(), b.shape(), out_shape, |x, y| x * y);
                        reduce_to(&t, out_shape, a.shape())
                    }),
                    want(1).then(|| {
                        let t = zip_broadcast(g, out_shape, a.data(), a.shape(), out_shape, |x, y| x * y);
                        reduce_to(&t, out_shape, b.shape())
                    }),
                ]
            }
            Op::Div => {
                let (a, b) = (&parents[0], &parents[1]);
                vec![
                    want(0).then(|| {
                        let t = zip_broadcast(g, out_shape, b.data(), b.shape(), out_shape, |x, y| x / y);
                        reduce_to(&t, out_shape, a.shape())
                    }),
                    want(1).then(|| {
                        let go: Vec<f64> = g.iter().zip(&node.data).map(|(x, y)| x * y).collect();
                        let t = zip_broadcast(&go, out_shape, b.data(), b.shape(), out_shape, |x, y| -x / y);
                        reduce_to(&t, out_shape, b.shape())
                    }),
                ]
            }
            Op::Neg => vec![Some(g.iter().map(|v| -v).collect())],
            Op::Scale(c) => vec![Some(g.iter().map(|v| c * v).collect())],
            Op::AddScalar | Op::Reshape => vec![Some(g.to_vec())],
            Op::Relu => vec![Some(
                g.iter()
                    .zip(parents[0].data())
                    .map(|(gv, &x)| if x > 0.0 { *gv } else { 0.0 })
                    .collect(),
            )],
            Op::Exp => vec![Some(g.iter().zip(&node.data).map(|(a, b)| a * b).collect())],
            Op::Ln => vec![Some(g.iter().zip(parents[0].data()).map(|(a, b)| a / b).collect())],
            Op::Sqrt => vec![Some(g.iter().zip(&node.data).map(|(a, b)| 0.5 * a / b).collect())],
            Op::MatMul(mode) => matmul_backward(*mode, &parents[0], &parents[1], g),
            Op::Permute(axes) => {
                let mut inverse = vec![0; axes.len()];
                for (i, &a) in axes.iter().enumerate() {
                    inverse[a] = i;
                }
                vec![Some(permute_data(g, out_shape, &inverse))]
            }
            Op::SumAll => vec![Some(vec![g[0]; parents[0].numel()])],
            Op::SumAxis { axis } => {
                let (outer, extent, inner) = split_axis(parents[0].shape(), *axis);
                let mut dx = vec![0.0; parents[0].numel()];
                for o in 0..outer {
                    for j in 0..extent {
                        let dst = &mut dx[(o * extent + j) * inner..(o * extent + j + 1) * inner];
                        dst.copy_from_slice(&g[o * inner..(o + 1) * inner]);
                    }
                }
                vec![Some(dx)]
            }
            Op::Softmax { axis } => {
                let y = &node.data;
                let (outer, extent, inner) = split_axis(out_shape, *axis);
                let mut dx = vec![0.0; y.len()];
                for o in 0..outer {
                    for i in 0..inner {
                        let at = |j: usize| (o * extent + j) * inner + i;
                        let dot: f64 = (0..extent).map(|j| g[at(j)] * y[at(j)]).sum();
                        for j in 0..extent {
                            dx[at(j)] = y[at(j)] * (g[at(j)] - dot);
                        }
                    }
                }
                vec![Some(dx)]
            }
            Op::LogSoftmax { axis } => {
                let y = &node.data;
                let (outer, extent, inner) = split_axis(out_shape, *axis);
                let mut dx = vec![0.0; y.len()];
                for o in 0..outer {
                    for i in 0..inner {
                        let at = |j: usize| (o * extent + j) * inner + i;
                        let total: f64 = (0..extent).map(|j| g[at(j)]).sum();
                        for j in 0..extent {
                            dx[at(j)] = g[at(j)] - y[at(j)].exp() * total;
                        }
                    }
                }
                vec![Some(dx)]
            }
            Op::CrossEntropy {
                targets,
                include,
                count,
                probs,
            } => {
                let classes = parents[0].shape().last().copied().unwrap_or(1);
                let scale = g[0] / *count as f64;
                let mut dx = vec![0.0; probs.len()];
                for (p, (&t, &inc)) in targets.iter().zip(include).enumerate() {
                    if !inc {
                        continue;
                    }
                    let row = &mut dx[p * classes..(p + 1) * classes];
                    for (c, d) in row.iter_mut().enumerate() {
                        let onehot = if c == t { 1.0 } else { 0.0 };
                        *d = scale * (probs[p * classes + c] - onehot);
                    }
                }
                vec![Some(dx)]
            }
            Op::LayerNorm { inv_std } => {
                let y = &node.data;
                let d = *out_shape.last().unwrap();
                let mut dx = vec![0.0; y.len()];
                for (r, is) in inv_std.iter().enumerate() {
                    let gr = &g[r * d..(r + 1) * d];
                    let yr = &y[r * d..(r + 1) * d];
                    let mg = gr.iter().sum::<f64>() / d as f64;
                    let mgy = gr.iter().zip(yr).map(|(a, b)| a * b).sum::<f64>() / d as f64;
                    for k in 0..d {
                        dx[r * d + k] = is * (gr[k] - mg - yr[k] * mgy);
                    }
                }
                vec![Some(dx)]
            }
            Op::IndexSelect { indices } => {
                let inner = numel(&parents[0].shape()[1..]);
                let mut dx = vec![0.0; parents[0].numel()];
                for (row, &i) in indices.iter().enumerate() {
                    let dst = &mut dx[i * inner..(i + 1) * inner];
                    dst.iter_mut()
                        .zip(&g[row * inner..(row + 1) * inner])
                        .for_each(|(d, s)| *d += s);
                }
                vec![Some(dx)]
            }
            Op::Narrow { axis, start } => {
                let (outer, extent, inner) = split_axis(parents[0].shape(), *axis);
                let len = out_shape[*axis];
                let mut dx = vec![0.0; parents[0].numel()];
                for o in 0..outer {
                    let base = (o * extent + start) * inner;
                    dx[base..base + len * inner].copy_from_slice(&g[o * len * inner..(o + 1) * len * inner]);
                }
                vec![Some(dx)]
            }
            Op::Concat { axis } => {
                let (outer, total, inner) = split_axis(out_shape, *axis);
                let mut grads: Vec<Vec<f64>> = parents.iter().map(|p| Vec::with_capacity(p.numel())).collect();
                for o in 0..outer {
                    let mut off = o * total * inner;
                    for (p, dst) in parents.iter().zip(grads.iter_mut()) {
                        let span = p.shape()[*axis] * inner;
                        dst.extend_from_slice(&g[off..off + span]);
                        off += span;
                    }
                }
                grads
                    .into_iter()
                    .zip(parents)
                    .map(|(gr, p)| p.requires_grad().then_some(gr))
                    .collect()
            }
        }
    }
}

fn matmul_backward(mode: MatMulMode, a: &Tensor, b: &Tensor, g: &[f64]) -> Vec<Option<Vec<f64>>> {
    let (ash, bsh) = (a.shape(), b.shape());
    let (m, k) = (ash[ash.len() - 2], ash[ash.len() - 1]);
    let n = bsh[bsh.len() - 1];
    let (ad, bd) = (a.data(), b.data());
    let mut ga = a.requires_grad().then(|| vec![0.0; ad.len()]);
    let mut gb = b.requires_grad().then(|| vec![0.0; bd.len()]);
    match mode {
        MatMulMode::Flat => {
            let rows = numel(&ash[..ash.len() - 1]);
            if let Some(ga) = ga.as_mut() {
                gemm(rows, n, k, View::row_major(g, n), View::transposed(bd, n), 0.0, ga);
            }
            if let Some(gb) = gb.as_mut() {
                gemm(k, rows, n, View::transposed(ad, k), View::row_major(g, n), 0.0, gb);
            }
        }
        MatMulMode::BroadcastLhs | MatMulMode::Batched => {
            let batched = matches!(mode, MatMulMode::Batched);
            let batch = numel(&bsh[..bsh.len() - 2]);
            for t in 0..batch {
                let g_t = &g[t * m * n..(t + 1) * m * n];
                let b_t = &bd[t * k * n..(t + 1) * k * n];
                let a_t = if batched { &ad[t * m * k..(t + 1) * m * k] } else { ad };
                if let Some(ga) = ga.as_mut() {
                    if batched {
                        gemm(m, n, k, View::row_major(g_t, n), View::transposed(b_t, n), 0.0, &mut ga[t * m * k..(t + 1) * m * k]);
                    } else {
                        gemm(m, n, k, View::row_major(g_t, n), View::transposed(b_t, n), 1.0, ga);
                    }
                }
                if let Some(gb) = gb.as_mut() {
                    gemm(k, m, n, View::transposed(a_t, k), View::row_major(g_t, n), 0.0, &mut gb[t * k * n..(t + 1) * k * n]);
                }
            }
        }
    }
    vec![ga, gb]
}
