//! Edge-by-edge bond predictor: a transformer encoder over the nine node
//! feature rows and a causal decoder over the 36 edge slots. Neither side
//! uses a position encoding; each decoder position instead receives the
//! node encoding `f(x_i) + f(x_j)` of the slot it predicts.

use molgen_chem::dense::{DenseGraph, EDGE_CLASSES, NODE_CLASSES, N_MAX, PAD};
use molgen_chem::AtomType;
use molgen_tensor::{Bound, ParamId, Result, SeededRng, Tensor, TensorError};

use crate::batch::{slots, N_SLOTS};
use crate::config::{Config, DecodeMode};
use crate::nn::{Builder, Init, Linear, Mlp2};

/// Decoder input token preceding the first slot.
pub const START: usize = EDGE_CLASSES;
const LN_EPS: f64 = 1e-5;

/// Remaining bond capacity per atom; padding atoms have none.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ValenceBudget {
    pub remaining: [u8; N_MAX],
    pub pad: [bool; N_MAX],
}

impl ValenceBudget {
    pub fn new(classes: &[usize]) -> ValenceBudget {
        let mut remaining = [0u8; N_MAX];
        let mut pad = [true; N_MAX];
        for (i, &c) in classes.iter().enumerate().take(N_MAX) {
            if let Some(t) = AtomType::from_index(c) {
                remaining[i] = t.valence();
                pad[i] = false;
            }
        }
        ValenceBudget { remaining, pad }
    }

    /// Highest bond class placeable between `i` and `j`.
    pub fn max_order(&self, i: usize, j: usize) -> usize {
        if self.pad[i] || self.pad[j] {
            0
        } else {
            usize::from(self.remaining[i].min(self.remaining[j])).min(EDGE_CLASSES - 1)
        }
    }

    pub fn place(&mut self, i: usize, j: usize, order: usize) {
        let o = order as u8;
        self.remaining[i] = self.remaining[i].saturating_sub(o);
        self.remaining[j] = self.remaining[j].saturating_sub(o);
    }

    /// Additive logit mask for slot `(i, j)`: 0 where allowed, -inf above
    /// the budget.
    pub fn mask_row(&self, i: usize, j: usize) -> [f64; EDGE_CLASSES] {
        let top = self.max_order(i, j);
        let mut row = [0.0; EDGE_CLASSES];
        for (b, v) in row.iter_mut().enumerate() {
            if b > top {
                *v = f64::NEG_INFINITY;
            }
        }
        row
    }
}

/// Valence masks for every slot of a token sequence, each computed from the
/// budget left by the tokens before it.
pub fn teacher_forced_masks(classes: &[usize], tokens: &[usize]) -> Vec<f64> {
    let mut budget = ValenceBudget::new(classes);
    let mut out = Vec::with_capacity(tokens.len() * EDGE_CLASSES);
    for (&(i, j), &t) in slots().iter().zip(tokens) {
        out.extend_from_slice(&budget.mask_row(i, j));
        budget.place(i, j, t);
    }
    out
}

#[derive(Clone, Copy, Debug)]
struct Norm {
    gain: ParamId,
    bias: ParamId,
}

impl Norm {
    fn new(b: &mut Builder, name: &str, d: usize) -> Result<Norm> {
        Ok(Norm {
            gain: b.param(&format!("{name}.g"), &[d], Init::Ones)?,
            bias: b.param(&format!("{name}.b"), &[d], Init::Zeros)?,
        })
    }

    fn forward(&self, p: &Bound, x: &Tensor) -> Result<Tensor> {
        x.layer_norm(LN_EPS)?.mul(&p[self.gain])?.add(&p[self.bias])
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Attention {
    q: Linear,
    k: Linear,
    v: Linear,
    o: Linear,
    heads: usize,
}

impl Attention {
    fn new(b: &mut Builder, name: &str, d: usize, heads: usize) -> Result<Attention> {
        Ok(Attention {
            q: b.linear(&format!("{name}.q"), d, d, true)?,
            k: b.linear(&format!("{name}.k"), d, d, true)?,
            v: b.linear(&format!("{name}.v"), d, d, true)?,
            o: b.linear(&format!("{name}.o"), d, d, true)?,
            heads,
        })
    }

    /// Multi-head `softmax(QKᵀ/√d_k + mask) V`; `mask` is `[T, S]`, additive.
    pub fn forward(&self, p: &Bound, queries: &Tensor, keys: &Tensor, mask: Option<&Tensor>) -> Result<Tensor> {
        let (b, t, d) = (queries.shape()[0], queries.shape()[1], queries.shape()[2]);
        let s = keys.shape()[1];
        let h = self.heads;
        let dk = d / h;
        let split = |x: Tensor, n: usize| x.reshape([b, n, h, dk])?.permute(&[0, 2, 1, 3]);
        let q = split(self.q.forward(p, queries)?, t)?;
        let k = self.k.forward(p, keys)?.reshape([b, s, h, dk])?.permute(&[0, 2, 3, 1])?;
        let v = split(self.v.forward(p, keys)?, s)?;
        let mut scores = q.matmul(&k)?.scale(1.0 / (dk as f64).sqrt());
        if let Some(m) = mask {
            scores = scores.add(m)?;
        }
        let w = scores.softmax(3)?;
        let ctx = w.matmul(&v)?.permute(&[0, 2, 1, 3])?.reshape([b, t, d])?;
        self.o.forward(p, &ctx)
    }
}

#[derive(Clone, Copy, Debug)]
struct EncoderBlock {
    attn: Attention,
    norm1: Norm,
    ffn: Mlp2,
    norm2: Norm,
}

#[derive(Clone, Copy, Debug)]
struct DecoderBlock {
    self_attn: Attention,
    norm1: Norm,
    cross: Attention,
    norm2: Norm,
    ffn: Mlp2,
    norm3: Norm,
}

pub struct EdgeTransformer {
    node_in: Linear,
    encoder: Vec<EncoderBlock>,
    node_enc: Mlp2,
    tokens: ParamId,
    decoder: Vec<DecoderBlock>,
    out: Linear,
    pub d_model: usize,
}

/// A generated bond-class sequence over the 36 slots.
pub type EdgeSequence = [usize; N_SLOTS];

fn causal_mask(len: usize) -> Tensor {
    let mut m = vec![0.0; len * len];
    for q in 0..len {
        for k in q + 1..len {
            m[q * len + k] = f64::NEG_INFINITY;
        }
    }
    Tensor::new([len, len], m).expect("square mask")
}

/// `[len, 9]` rows with ones at both endpoints of each slot.
fn endpoint_selector(len: usize) -> Tensor {
    let mut m = vec![0.0; len * N_MAX];
    for (k, &(i, j)) in slots().iter().take(len).enumerate() {
        m[k * N_MAX + i] = 1.0;
        m[k * N_MAX + j] = 1.0;
    }
    Tensor::new([len, N_MAX], m).expect("selector shape")
}

impl EdgeTransformer {
    pub fn new(b: &mut Builder, cfg: &Config) -> Result<EdgeTransformer> {
        let d = cfg.d_model;
        let heads = cfg.n_heads;
        let node_in = b.linear("tf.node_in", NODE_CLASSES, d, true)?;
        let mut encoder = Vec::new();
        for k in 0..cfg.n_enc_blocks {
            let n = format!("tf.enc{k}");
            encoder.push(EncoderBlock {
                attn: Attention::new(b, &format!("{n}.attn"), d, heads)?,
                norm1: Norm::new(b, &format!("{n}.norm1"), d)?,
                ffn: Mlp2::new(b, &format!("{n}.ffn"), d, cfg.ffn_dim, d)?,
                norm2: Norm::new(b, &format!("{n}.norm2"), d)?,
            });
        }
        let node_enc = Mlp2::new(b, "tf.node_enc", NODE_CLASSES, d, d)?;
        let tokens = b.param("tf.tokens", &[EDGE_CLASSES + 1, d], Init::Normal(1.0))?;
        let mut decoder = Vec::new();
        for k in 0..cfg.n_dec_blocks {
            let n = format!("tf.dec{k}");
            decoder.push(DecoderBlock {
                self_attn: Attention::new(b, &format!("{n}.self"), d, heads)?,
                norm1: Norm::new(b, &format!("{n}.norm1"), d)?,
                cross: Attention::new(b, &format!("{n}.cross"), d, heads)?,
                norm2: Norm::new(b, &format!("{n}.norm2"), d)?,
                ffn: Mlp2::new(b, &format!("{n}.ffn"), d, cfg.ffn_dim, d)?,
                norm3: Norm::new(b, &format!("{n}.norm3"), d)?,
            });
        }
        let out = b.linear("tf.out", d, EDGE_CLASSES, true)?;
        Ok(EdgeTransformer {
            node_in,
            encoder,
            node_enc,
            tokens,
            decoder,
            out,
            d_model: d,
        })
    }

    /// Encoder memory `[B, 9, d]` from node features `[B, 9, 5]`.
    pub fn encode_context(&self, p: &Bound, x: &Tensor) -> Result<Tensor> {
        let mut h = self.node_in.forward(p, x)?;
        for blk in &self.encoder {
            let a = blk.attn.forward(p, &h, &h, None)?;
            h = blk.norm1.forward(p, &h.add(&a)?)?;
            let f = blk.ffn.forward(p, &h)?;
            h = blk.norm2.forward(p, &h.add(&f)?)?;
        }
        Ok(h)
    }

    /// `f(x_i) + f(x_j)` for one slot of a single `[9, 5]` feature matrix.
    pub fn node_encoding(&self, p: &Bound, x: &Tensor, i: usize, j: usize) -> Result<Tensor> {
        if i == j {
            return Err(TensorError::Invalid(format!("node encoding of a self slot ({i}, {i})")));
        }
        let f = self.node_enc.forward(p, x)?;
        f.narrow(0, i, 1)?.add(&f.narrow(0, j, 1)?)
    }

    /// Node encodings `[B, len, d]` for the first `len` slots.
    pub fn slot_encodings(&self, p: &Bound, x: &Tensor, len: usize) -> Result<Tensor> {
        let f = self.node_enc.forward(p, x)?;
        endpoint_selector(len).matmul(&f)
    }

    /// Logits `[B, L, 4]` for slots `0..L`, where `inputs` holds `B * L`
    /// decoder input tokens (START, then the class of the previous slot).
    pub fn decoder_logits(&self, p: &Bound, memory: &Tensor, x: &Tensor, inputs: &[usize], len: usize) -> Result<Tensor> {
        let b = memory.shape()[0];
        if inputs.len() != b * len || len == 0 || len > N_SLOTS {
            return Err(TensorError::Invalid(format!("{} decoder inputs for {b} x {len}", inputs.len())));
        }
        let mut onehot = vec![0.0; b * len * (EDGE_CLASSES + 1)];
        for (k, &t) in inputs.iter().enumerate() {
            onehot[k * (EDGE_CLASSES + 1) + t] = 1.0;
        }
        let tok = Tensor::new([b, len, EDGE_CLASSES + 1], onehot)?.matmul(&p[self.tokens])?;
        let mut h = tok.add(&self.slot_encodings(p, x, len)?)?;
        let mask = causal_mask(len);
        for blk in &self.decoder {
            let a = blk.self_attn.forward(p, &h, &h, Some(&mask))?;
            h = blk.norm1.forward(p, &h.add(&a)?)?;
            let c = blk.cross.forward(p, &h, memory, None)?;
            h = blk.norm2.forward(p, &h.add(&c)?)?;
            let f = blk.ffn.forward(p, &h)?;
            h = blk.norm3.forward(p, &h.add(&f)?)?;
        }
        self.out.forward(p, &h)
    }

    /// Teacher-forced, valence-masked logits `[B, 36, 4]` for the given
    /// ground-truth `tokens` (`B * 36`) and atom `classes` (`B * 9`).
    pub fn teacher_forced(&self, p: &Bound, memory: &Tensor, x: &Tensor, classes: &[usize], tokens: &[usize]) -> Result<Tensor> {
        let b = memory.shape()[0];
        let mut inputs = Vec::with_capacity(b * N_SLOTS);
        let mut masks = Vec::with_capacity(b * N_SLOTS * EDGE_CLASSES);
        for g in 0..b {
            let t = &tokens[g * N_SLOTS..(g + 1) * N_SLOTS];
            inputs.push(START);
            inputs.extend_from_slice(&t[..N_SLOTS - 1]);
            masks.extend(teacher_forced_masks(&classes[g * N_MAX..(g + 1) * N_MAX], t));
        }
        let logits = self.decoder_logits(p, memory, x, &inputs, N_SLOTS)?;
        logits.add(&Tensor::new([b, N_SLOTS, EDGE_CLASSES], masks)?)
    }

    /// Masked class distribution for slot `k` given the tokens of slots
    /// `0..k` of a single graph.
    pub fn decode_step(
        &self,
        p: &Bound,
        memory: &Tensor,
        x: &Tensor,
        so_far: &[usize],
        budget: &ValenceBudget,
    ) -> Result<[f64; EDGE_CLASSES]> {
        let k = so_far.len();
        if k >= N_SLOTS {
            return Err(TensorError::Invalid(format!("slot {k} out of range")));
        }
        let mut inputs = vec![START];
        inputs.extend_from_slice(so_far);
        let logits = self.decoder_logits(p, memory, x, &inputs, k + 1)?;
        let (i, j) = slots()[k];
        let row = &logits.data()[k * EDGE_CLASSES..(k + 1) * EDGE_CLASSES];
        let masked = Tensor::new([EDGE_CLASSES], row.to_vec())?.add(&Tensor::new([EDGE_CLASSES], budget.mask_row(i, j).to_vec())?)?;
        let probs = masked.softmax(0)?;
        let mut out = [0.0; EDGE_CLASSES];
        out.copy_from_slice(probs.data());
        Ok(out)
    }

    /// Autoregressive generation for a batch of committed atom typings.
    /// `x` is the one-hot `[B, 9, 5]` matrix of `classes`.
    pub fn generate_edges(
        &self,
        p: &Bound,
        x: &Tensor,
        classes: &[[usize; N_MAX]],
        mode: DecodeMode,
        temperature: f64,
        rng: &mut SeededRng,
    ) -> Result<Vec<EdgeSequence>> {
        let b = classes.len();
        if b == 0 {
            return Ok(Vec::new());
        }
        let memory = self.encode_context(p, x)?;
        let mut budgets: Vec<ValenceBudget> = classes.iter().map(|c| ValenceBudget::new(c)).collect();
        let mut seqs = vec![[0usize; N_SLOTS]; b];
        let slot_list = slots();
        for k in 0..N_SLOTS {
            let (i, j) = slot_list[k];
            // Slots whose budget allows only `none` skip the forward pass.
            let open = budgets.iter().any(|bg| bg.max_order(i, j) > 0);
            if !open {
                continue;
            }
            let len = k + 1;
            let mut inputs = Vec::with_capacity(b * len);
            for s in &seqs {
                inputs.push(START);
                inputs.extend_from_slice(&s[..k]);
            }
            let logits = self.decoder_logits(p, &memory, x, &inputs, len)?;
            for g in 0..b {
                let top = budgets[g].max_order(i, j);
                if top == 0 {
                    continue;
                }
                let o = (g * len + k) * EDGE_CLASSES;
                let row = &logits.data()[o..o + EDGE_CLASSES];
                let choice = match mode {
                    DecodeMode::Argmax => {
                        let mut best = 0;
                        for c in 1..=top {
                            if row[c] > row[best] {
                                best = c;
                            }
                        }
                        best
                    }
                    DecodeMode::Sample => {
                        let m = row[..=top].iter().copied().fold(f64::NEG_INFINITY, f64::max);
                        let w: Vec<f64> = row[..=top].iter().map(|&v| ((v - m) / temperature).exp()).collect();
                        rng.categorical(&w)
                    }
                };
                seqs[g][k] = choice;
                budgets[g].place(i, j, choice);
            }
        }
        Ok(seqs)
    }
}

/// One-hot `[B, 9, 5]` tensor of committed atom classes.
pub fn one_hot_nodes(classes: &[[usize; N_MAX]]) -> Result<Tensor> {
    let mut x = vec![0.0; classes.len() * N_MAX * NODE_CLASSES];
    for (g, c) in classes.iter().enumerate() {
        for (i, &k) in c.iter().enumerate() {
            x[(g * N_MAX + i) * NODE_CLASSES + k] = 1.0;
        }
    }
    Tensor::new([classes.len(), N_MAX, NODE_CLASSES], x)
}

/// Dense graph from committed atom classes and slot tokens. Tokens on slots
/// touching a padding atom are dropped.
pub fn assemble_dense(classes: &[usize; N_MAX], seq: &EdgeSequence) -> DenseGraph {
    let mut x = vec![0.0; N_MAX * NODE_CLASSES];
    for (i, &c) in classes.iter().enumerate() {
        x[i * NODE_CLASSES + c] = 1.0;
    }
    let mut a = vec![0.0; N_MAX * N_MAX * EDGE_CLASSES];
    let mut e = [[0usize; N_MAX]; N_MAX];
    for (&(i, j), &t) in slots().iter().zip(seq.iter()) {
        if classes[i] != PAD && classes[j] != PAD {
            e[i][j] = t;
            e[j][i] = t;
        }
    }
    for i in 0..N_MAX {
        for j in 0..N_MAX {
            a[(i * N_MAX + j) * EDGE_CLASSES + e[i][j]] = 1.0;
        }
    }
    DenseGraph::from_parts(x, a).expect("assembled graph satisfies dense invariants")
}

/// Walks slots from last to first, lowering a bond's order while either
/// endpoint is over its valence.
pub fn apply_valency_mask_posthoc(d: &DenseGraph) -> DenseGraph {
    let classes = d.node_classes();
    let valence: Vec<i32> = classes
        .iter()
        .map(|&c| AtomType::from_index(c).map_or(0, |t| i32::from(t.valence())))
        .collect();
    let mut e = [[0usize; N_MAX]; N_MAX];
    let mut load = [0i32; N_MAX];
    for i in 0..N_MAX {
        for j in 0..N_MAX {
            e[i][j] = d.edge_class(i, j);
            if i != j {
                load[i] += e[i][j] as i32;
            }
        }
    }
    for &(i, j) in slots().iter().rev() {
        while e[i][j] > 0 && (load[i] > valence[i] || load[j] > valence[j]) {
            e[i][j] -= 1;
            e[j][i] -= 1;
            load[i] -= 1;
            load[j] -= 1;
        }
    }
    let mut a = vec![0.0; N_MAX * N_MAX * EDGE_CLASSES];
    for i in 0..N_MAX {
        for j in 0..N_MAX {
            a[(i * N_MAX + j) * EDGE_CLASSES + e[i][j]] = 1.0;
        }
    }
    DenseGraph::from_parts(d.x.clone(), a).expect("lowering bonds keeps dense invariants")
}
