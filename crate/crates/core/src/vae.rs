//! Graph encoder, node-feature decoder and the per-dimension property head.
//!
//! The encoder runs GraphSAGE layers over a bond-order weighted dense
//! adjacency and coarsens with DIFFPOOL down to a single node; the decoder
//! mirrors it with row-stochastic unpooling. All functions take batched
//! tensors with a leading batch axis.

use molgen_chem::dense::{NODE_CLASSES, N_MAX};
use molgen_tensor::{Bound, ParamId, Result, SeededRng, Tensor, TensorError};

use crate::config::{Aggregator, Config};
use crate::nn::{Builder, Init, Linear, Mlp2};

/// Dense adjacency with the per-node neighbour counts used by the mean
/// aggregator. Counts are recomputed from the values, so they carry no
/// gradient.
#[derive(Clone, Debug)]
pub struct Adjacency {
    pub weighted: Tensor,
    pub inv_count: Tensor,
}

impl Adjacency {
    pub fn new(weighted: Tensor) -> Result<Adjacency> {
        let s = weighted.shape().to_vec();
        if s.len() != 3 || s[1] != s[2] {
            return Err(TensorError::Invalid(format!("adjacency must be [B, n, n], got {s:?}")));
        }
        let n = s[1];
        let inv: Vec<f64> = weighted
            .data()
            .chunks(n)
            .map(|row| {
                let c = row.iter().filter(|&&v| v > 0.0).count();
                if c == 0 {
                    0.0
                } else {
                    1.0 / c as f64
                }
            })
            .collect();
        Ok(Adjacency {
            inv_count: Tensor::new([s[0], n, 1], inv)?,
            weighted,
        })
    }
}

/// `relu(H W_self + agg_j(A_ij H_j) W_neigh)`, with rows zeroed by `mask`.
pub fn graphsage_layer(
    h: &Tensor,
    adj: &Adjacency,
    w_self: &Tensor,
    w_neigh: &Tensor,
    mask: Option<&Tensor>,
    aggregator: Aggregator,
) -> Result<Tensor> {
    let summed = adj.weighted.matmul(h)?;
    let agg = match aggregator {
        Aggregator::Mean => summed.mul(&adj.inv_count)?,
        Aggregator::Sum => summed,
    };
    let out = h.matmul(w_self)?.add(&agg.matmul(w_neigh)?)?.relu();
    match mask {
        Some(m) => out.mul(m),
        None => Ok(out),
    }
}

#[derive(Clone, Copy, Debug)]
pub struct SageParams {
    pub w_self: ParamId,
    pub w_neigh: ParamId,
}

impl SageParams {
    fn new(b: &mut Builder, name: &str, fan_in: usize, fan_out: usize) -> Result<Self> {
        Ok(SageParams {
            w_self: b.param(&format!("{name}.self"), &[fan_in, fan_out], Init::Glorot)?,
            w_neigh: b.param(&format!("{name}.neigh"), &[fan_in, fan_out], Init::Glorot)?,
        })
    }

    pub fn forward(&self, p: &Bound, h: &Tensor, adj: &Adjacency, mask: Option<&Tensor>, agg: Aggregator) -> Result<Tensor> {
        graphsage_layer(h, adj, &p[self.w_self], &p[self.w_neigh], mask, agg)
    }
}

/// One coarsening step.
pub struct PoolLevel {
    /// Assignment `[B, n_in, n_out]`; rows of real nodes sum to 1,
    /// padding rows are zero.
    pub s: Tensor,
    pub features: Tensor,
    pub adjacency: Tensor,
}

/// DIFFPOOL with assignment `S = softmax(SAGE(H) W + b)`; returns `SᵀH`
/// and `SᵀAS`.
pub fn diffpool(
    h: &Tensor,
    adj: &Adjacency,
    assign_logits: impl Fn(&Tensor) -> Result<Tensor>,
    mask: Option<&Tensor>,
    n_out: usize,
) -> Result<PoolLevel> {
    let n_in = h.shape()[1];
    if n_out >= n_in {
        return Err(TensorError::Invalid(format!("diffpool must shrink: {n_in} -> {n_out}")));
    }
    let logits = assign_logits(h)?;
    if logits.shape().last() != Some(&n_out) {
        return Err(TensorError::Invalid(format!(
            "assignment has {:?} columns, expected {n_out}",
            logits.shape().last()
        )));
    }
    let mut s = logits.softmax(2)?;
    if let Some(m) = mask {
        s = s.mul(m)?;
    }
    let st = s.permute(&[0, 2, 1])?;
    let features = st.matmul(h)?;
    let adjacency = st.matmul(&adj.weighted.matmul(&s)?)?;
    Ok(PoolLevel { s, features, adjacency })
}

pub struct UnpoolLevel {
    /// Expansion `[B, n_out, n_in]`, row-stochastic.
    pub s: Tensor,
    pub features: Tensor,
    pub adjacency: Tensor,
}

/// Row-stochastic expansion: `S_up = softmax(mlp(mean(H) + E))` over the
/// `n_in` coarse nodes, where `E` is a learned `[n_out, width]` slot
/// embedding; fine features are `S_up H`, fine adjacency `S_up A S_upᵀ`.
pub fn unpool(h: &Tensor, a: &Tensor, slot: &Tensor, mlp: impl Fn(&Tensor) -> Result<Tensor>, n_out: usize) -> Result<UnpoolLevel> {
    let n_in = h.shape()[1];
    if n_out <= n_in {
        return Err(TensorError::Invalid(format!("unpool must grow: {n_in} -> {n_out}")));
    }
    if slot.shape() != [n_out, h.shape()[2]] {
        return Err(TensorError::Invalid(format!("slot embedding shape {:?}", slot.shape())));
    }
    let context = h.mean_axis(1, true)?.add(slot)?;
    let s = mlp(&context)?.softmax(2)?;
    let features = s.matmul(h)?;
    let adjacency = s.matmul(&a.matmul(&s.permute(&[0, 2, 1])?)?)?;
    Ok(UnpoolLevel { s, features, adjacency })
}

/// `z = mu + exp(log_var / 2) * noise`.
pub fn reparameterize(mu: &Tensor, log_var: &Tensor, noise: &Tensor) -> Result<Tensor> {
    mu.add(&log_var.scale(0.5).exp().mul(noise)?)
}

/// Output `p` is `a_p z_p + b_p` in standardized property units.
#[derive(Clone, Copy, Debug)]
pub struct PropertyHead {
    pub a: ParamId,
    pub b: ParamId,
    pub count: usize,
}

impl PropertyHead {
    pub fn predict(&self, p: &Bound, z: &Tensor) -> Result<Tensor> {
        predict_properties(z, &p[self.a], &p[self.b])
    }
}

pub fn predict_properties(z: &Tensor, a: &Tensor, b: &Tensor) -> Result<Tensor> {
    let count = a.numel();
    let width = *z.shape().last().unwrap_or(&0);
    if width < count {
        return Err(TensorError::Invalid(format!("latent width {width} below {count} properties")));
    }
    z.narrow(z.rank() - 1, 0, count)?.mul(a)?.add(b)
}

struct PoolParams {
    sage: SageParams,
    assign: Linear,
    after: Option<SageParams>,
    size: usize,
}

struct UnpoolParams {
    mlp: Mlp2,
    slot: ParamId,
    sage: SageParams,
    size: usize,
}

pub struct Vae {
    aggregator: Aggregator,
    sage_in: [SageParams; 2],
    pools: Vec<PoolParams>,
    readout: Linear,
    mu: Linear,
    log_var: Linear,
    lift: Mlp2,
    unpools: Vec<UnpoolParams>,
    out: Linear,
    pub head: PropertyHead,
    pub latent_dim: usize,
}

pub struct Encoded {
    pub mu: Tensor,
    pub log_var: Tensor,
    pub pools: Vec<PoolLevel>,
}

pub struct Decoded {
    /// Unnormalized class scores `[B, 9, 5]`.
    pub logits: Tensor,
    /// Row-wise softmax of `logits`.
    pub probs: Tensor,
}

impl Vae {
    pub fn new(b: &mut Builder, cfg: &Config) -> Result<Vae> {
        let h = cfg.hidden_dim;
        let c = cfg.latent_dim();
        let sage_in = [
            SageParams::new(b, "vae.enc.sage0", NODE_CLASSES, h)?,
            SageParams::new(b, "vae.enc.sage1", h, h)?,
        ];
        let mut pools = Vec::new();
        for (k, &size) in cfg.pool_sizes.iter().enumerate() {
            let last = k + 1 == cfg.pool_sizes.len();
            pools.push(PoolParams {
                sage: SageParams::new(b, &format!("vae.enc.pool{k}.sage"), h, h)?,
                assign: b.linear(&format!("vae.enc.pool{k}.assign"), h, size, true)?,
                after: if last {
                    None
                } else {
                    Some(SageParams::new(b, &format!("vae.enc.pool{k}.after"), h, h)?)
                },
                size,
            });
        }
        let readout = b.linear("vae.enc.readout", h, h, true)?;
        let mu = b.linear("vae.enc.mu", h, c, true)?;
        let log_var = b.linear("vae.enc.log_var", h, c, true)?;

        let lift = Mlp2::new(b, "vae.dec.lift", c, h, h)?;
        let mut sizes: Vec<usize> = cfg.pool_sizes.iter().rev().copied().collect();
        sizes.push(N_MAX);
        let mut unpools = Vec::new();
        for k in 1..sizes.len() {
            let (n_in, n_out) = (sizes[k - 1], sizes[k]);
            unpools.push(UnpoolParams {
                mlp: Mlp2::new(b, &format!("vae.dec.unpool{k}.mlp"), h, h, n_in)?,
                slot: b.param(&format!("vae.dec.unpool{k}.slot"), &[n_out, h], Init::Normal(1.0))?,
                sage: SageParams::new(b, &format!("vae.dec.unpool{k}.sage"), h, h)?,
                size: n_out,
            });
        }
        let out = b.linear("vae.dec.out", h, NODE_CLASSES, true)?;
        let count = cfg.property_names.len();
        let head = PropertyHead {
            a: b.param("vae.prop.a", &[count], Init::Ones)?,
            b: b.param("vae.prop.b", &[count], Init::Zeros)?,
            count,
        };
        Ok(Vae {
            aggregator: cfg.aggregator,
            sage_in,
            pools,
            readout,
            mu,
            log_var,
            lift,
            unpools,
            out,
            head,
            latent_dim: c,
        })
    }

    /// `x`: one-hot nodes `[B, 9, 5]`, `adj`: weighted `[B, 9, 9]`,
    /// `mask`: `[B, 9, 1]`.
    pub fn encode(&self, p: &Bound, x: &Tensor, adj: &Tensor, mask: &Tensor) -> Result<Encoded> {
        let agg = self.aggregator;
        let mut a = Adjacency::new(adj.clone())?;
        let mut h = x.mul(mask)?;
        for layer in &self.sage_in {
            h = layer.forward(p, &h, &a, Some(mask), agg)?;
        }
        let mut node_mask = Some(mask.clone());
        let mut levels = Vec::new();
        for pool in &self.pools {
            let m = node_mask.clone();
            let level = diffpool(
                &h,
                &a,
                |h| {
                    let e = pool.sage.forward(p, h, &a, m.as_ref(), agg)?;
                    pool.assign.forward(p, &e)
                },
                m.as_ref(),
                pool.size,
            )?;
            a = Adjacency::new(level.adjacency.clone())?;
            h = level.features.clone();
            if let Some(after) = &pool.after {
                h = after.forward(p, &h, &a, None, agg)?;
            }
            node_mask = None;
            levels.push(level);
        }
        let b = x.shape()[0];
        let width = h.shape()[2];
        let g = self.readout.forward(p, &h.reshape([b, width])?)?.relu();
        Ok(Encoded {
            mu: self.mu.forward(p, &g)?,
            log_var: self.log_var.forward(p, &g)?,
            pools: levels,
        })
    }

    /// Node-class distribution `[B, 9, 5]` from latent codes `[B, c]`.
    pub fn decode_nodes(&self, p: &Bound, z: &Tensor) -> Result<Decoded> {
        let agg = self.aggregator;
        let b = z.shape()[0];
        let top = self.lift.forward(p, z)?.relu();
        let width = top.shape()[1];
        let mut h = top.reshape([b, 1, width])?;
        let mut a = Tensor::full([b, 1, 1], 1.0);
        for up in &self.unpools {
            let slot = &p[up.slot];
            let level = unpool(&h, &a, slot, |x| up.mlp.forward(p, x), up.size)?;
            let fine = level.features.add(slot)?;
            let adj = Adjacency::new(level.adjacency.clone())?;
            h = up.sage.forward(p, &fine, &adj, None, agg)?;
            a = level.adjacency;
        }
        let logits = self.out.forward(p, &h)?;
        let probs = logits.softmax(2)?;
        Ok(Decoded { logits, probs })
    }

    pub fn latent_noise(&self, rng: &mut SeededRng, batch: usize) -> Result<Tensor> {
        Tensor::new([batch, self.latent_dim], rng.normals(batch * self.latent_dim))
    }
}

/// DIFFPOOL link-prediction and assignment-entropy penalties, averaged
/// over levels.
pub fn pool_aux_losses(levels: &[PoolLevel], adj: &Tensor) -> Result<(Tensor, Tensor)> {
    let mut link = Tensor::scalar(0.0);
    let mut entropy = Tensor::scalar(0.0);
    if levels.is_empty() {
        return Ok((link, entropy));
    }
    let mut a = adj.clone();
    for level in levels {
        let sst = level.s.matmul(&level.s.permute(&[0, 2, 1])?)?;
        link = link.add(&a.sub(&sst)?.square().mean())?;
        let ent = level.s.mul(&level.s.add_scalar(1e-12).ln())?.sum_axis(2, false)?.mean().neg();
        entropy = entropy.add(&ent)?;
        a = level.adjacency.clone();
    }
    let k = 1.0 / levels.len() as f64;
    Ok((link.scale(k), entropy.scale(k)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use molgen_tensor::ParamStore;

    fn t(shape: &[usize], d: &[f64]) -> Tensor {
        Tensor::new(shape.to_vec(), d.to_vec()).unwrap()
    }

    #[test]
    fn sage_without_edges_is_self_term() {
        let h = t(&[1, 2, 2], &[1.0, -2.0, 0.5, 3.0]);
        let adj = Adjacency::new(t(&[1, 2, 2], &[0.0; 4])).unwrap();
        let ws = t(&[2, 2], &[1.0, 2.0, -1.0, 0.5]);
        let wn = t(&[2, 2], &[9.0, 9.0, 9.0, 9.0]);
        let out = graphsage_layer(&h, &adj, &ws, &wn, None, Aggregator::Mean).unwrap();
        let own = h.matmul(&ws).unwrap().relu();
        assert_eq!(out.data(), own.data());
    }

    #[test]
    fn sage_single_neighbour_by_hand() {
        // Double bond between nodes 0 and 1; W_self = 0, W_neigh = I.
        let h = t(&[1, 2, 2], &[0.3, -0.1, 0.7, 0.2]);
        let adj = Adjacency::new(t(&[1, 2, 2], &[0.0, 2.0, 2.0, 0.0])).unwrap();
        let zero = t(&[2, 2], &[0.0; 4]);
        let eye = t(&[2, 2], &[1.0, 0.0, 0.0, 1.0]);
        let out = graphsage_layer(&h, &adj, &zero, &eye, None, Aggregator::Mean).unwrap();
        assert_eq!(&out.data()[..2], &[1.4, 0.4]);
        assert_eq!(&out.data()[2..], &[0.6, 0.0]);
    }

    #[test]
    fn single_cluster_pool_sums_real_rows() {
        let h = t(&[1, 3, 2], &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let adj = Adjacency::new(t(&[1, 3, 3], &[0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0])).unwrap();
        let mask = t(&[1, 3, 1], &[1.0, 1.0, 0.0]);
        let level = diffpool(&h, &adj, |x| Ok(x.narrow(2, 0, 1)?.scale(3.0)), Some(&mask), 1).unwrap();
        assert_eq!(level.features.data(), &[4.0, 6.0]);
        assert_eq!(level.adjacency.data(), &[2.0]);
        assert!(diffpool(&h, &adj, |x| Ok(x.clone()), None, 3).is_err());
    }

    #[test]
    fn hard_two_cluster_pool_gives_block_sums() {
        // Nodes {0,1} -> cluster 0, {2,3} -> cluster 1 via large logits.
        let h = t(&[1, 4, 1], &[1.0, 2.0, 3.0, 4.0]);
        let a = [0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 2.0, 0.0, 0.0, 2.0, 0.0, 3.0, 0.0, 0.0, 3.0, 0.0];
        let adj = Adjacency::new(t(&[1, 4, 4], &a)).unwrap();
        let logits = t(&[1, 4, 2], &[800.0, 0.0, 800.0, 0.0, 0.0, 800.0, 0.0, 800.0]);
        let level = diffpool(&h, &adj, |_| Ok(logits.clone()), None, 2).unwrap();
        // Block sums: within {0,1}: 1+1, across: only A_12 = 2, within {2,3}: 3+3.
        assert_eq!(level.adjacency.data(), &[2.0, 2.0, 2.0, 6.0]);
        assert_eq!(level.features.data(), &[3.0, 7.0]);
    }

    #[test]
    fn unpool_from_one_node_copies_it() {
        let h = t(&[1, 1, 3], &[0.1, 0.2, 0.3]);
        let a = t(&[1, 1, 1], &[1.0]);
        let slot = t(&[4, 3], &[0.5; 12]);
        let level = unpool(&h, &a, &slot, |x| x.narrow(2, 0, 1), 4).unwrap();
        for row in level.features.data().chunks(3) {
            assert_eq!(row, h.data());
        }
        assert!(unpool(&h, &a, &t(&[1, 3], &[0.0; 3]), |x| x.narrow(2, 0, 1), 1).is_err());
    }

    #[test]
    fn reparameterize_examples() {
        let mu = t(&[1, 2], &[0.5, -1.0]);
        let zero = t(&[1, 2], &[0.0, 0.0]);
        assert_eq!(reparameterize(&mu, &zero, &zero).unwrap().data(), mu.data());
        let n = t(&[1, 2], &[0.25, 2.0]);
        assert_eq!(reparameterize(&mu, &zero, &n).unwrap().data(), &[0.75, 1.0]);
    }

    #[test]
    fn property_head_is_per_coordinate() {
        let z = Tensor::param([1, 3], vec![0.3, -0.7, 1.1]).unwrap();
        let a = t(&[2], &[1.0, 2.5]);
        let b = t(&[2], &[0.0, -0.5]);
        let y = predict_properties(&z, &a, &b).unwrap();
        assert_eq!(y.data(), &[0.3, 2.5 * -0.7 - 0.5]);
        y.narrow(1, 1, 1).unwrap().sum().backward().unwrap();
        assert_eq!(z.grad().unwrap(), vec![0.0, 2.5, 0.0]);
    }

    #[test]
    fn decoder_rows_are_distributions() {
        let cfg = Config::default();
        let mut store = ParamStore::new();
        let vae = Vae::new(&mut Builder { store: &mut store, rng: SeededRng::new(1) }, &cfg).unwrap();
        let p = store.bind(|_| false);
        let z = vae.latent_noise(&mut SeededRng::new(2), 3).unwrap();
        let d = vae.decode_nodes(&p, &z).unwrap();
        assert_eq!(d.probs.shape(), &[3, 9, 5]);
        for row in d.probs.data().chunks(5) {
            assert!((row.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
        }
        let again = vae.decode_nodes(&p, &z).unwrap();
        assert_eq!(d.probs.data(), again.probs.data());
    }
}
