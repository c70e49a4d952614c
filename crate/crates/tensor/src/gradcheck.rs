//! Central finite-difference oracle for reverse-mode gradients.
//!
//! The oracle only evaluates the forward function; it never looks at the
//! recorded graph, so it stays independent of the backward rules it checks.

use crate::error::Result;
use crate::rng::SeededRng;
use crate::tensor::Tensor;

pub const STEP: f64 = 1e-5;
/// Relative errors are measured against `max(|analytic|, |numeric|, FLOOR)`.
pub const FLOOR: f64 = 1e-6;

#[derive(Clone, Debug)]
pub struct Probe {
    pub input: usize,
    pub index: usize,
    pub analytic: f64,
    pub numeric: f64,
}

impl Probe {
    pub fn rel_error(&self) -> f64 {
        let scale = self.analytic.abs().max(self.numeric.abs()).max(FLOOR);
        (self.analytic - self.numeric).abs() / scale
    }
}

#[derive(Clone, Debug)]
pub struct GradCheck {
    pub probes: Vec<Probe>,
}

impl GradCheck {
    pub fn max_rel_error(&self) -> f64 {
        self.probes.iter().map(Probe::rel_error).fold(0.0, f64::max)
    }

    pub fn worst(&self) -> Option<&Probe> {
        self.probes
            .iter()
            .max_by(|a, b| a.rel_error().total_cmp(&b.rel_error()))
    }
}

/// Compares d f / d inputs at `coords` random coordinates against central
/// differences with step [`STEP`]. `f` must return a scalar.
pub fn check<F>(inputs: &[(Vec<usize>, Vec<f64>)], f: F, coords: usize, rng: &mut SeededRng) -> Result<GradCheck>
where
    F: Fn(&[Tensor]) -> Result<Tensor>,
{
    let leaves: Vec<Tensor> = inputs
        .iter()
        .map(|(s, d)| Tensor::param(s.clone(), d.clone()))
        .collect::<Result<_>>()?;
    let out = f(&leaves)?;
    out.backward()?;
    let grads: Vec<Vec<f64>> = leaves
        .iter()
        .map(|t| t.grad().unwrap_or_else(|| vec![0.0; t.numel()]))
        .collect();

    let eval = |which: usize, index: usize, delta: f64| -> Result<f64> {
        let consts: Vec<Tensor> = inputs
            .iter()
            .enumerate()
            .map(|(k, (s, d))| {
                let mut d = d.clone();
                if k == which {
                    d[index] += delta;
                }
                Tensor::new(s.clone(), d)
            })
            .collect::<Result<_>>()?;
        Ok(f(&consts)?.item())
    };

    let total: usize = inputs.iter().map(|(_, d)| d.len()).sum();
    let mut probes = Vec::with_capacity(coords);
    for _ in 0..coords.min(total.max(1)) {
        let mut flat = rng.below(total);
        let mut which = 0;
        while flat >= inputs[which].1.len() {
            flat -= inputs[which].1.len();
            which += 1;
        }
        let numeric = (eval(which, flat, STEP)? - eval(which, flat, -STEP)?) / (2.0 * STEP);
        probes.push(Probe {
            input: which,
            index: flat,
            analytic: grads[which][flat],
            numeric,
        });
    }
    Ok(GradCheck { probes })
}

/// Tolerance on [`GradCheck::max_rel_error`] for the op catalog.
pub const TOLERANCE: f64 = 1e-4;

type CaseFn = Box<dyn Fn(&[Tensor]) -> Result<Tensor>>;

/// One differentiable operation reduced to a scalar, with its inputs.
pub struct OpCase {
    pub name: &'static str,
    pub inputs: Vec<(Vec<usize>, Vec<f64>)>,
    pub f: CaseFn,
}

fn input(rng: &mut SeededRng, shape: &[usize]) -> (Vec<usize>, Vec<f64>) {
    let n = shape.iter().product();
    (shape.to_vec(), rng.normals(n))
}

fn positive(rng: &mut SeededRng, shape: &[usize]) -> (Vec<usize>, Vec<f64>) {
    let (s, d) = input(rng, shape);
    (s, d.into_iter().map(|v| v.abs() + 0.5).collect())
}

/// Reduces `t` to a scalar with fixed random weights so every output
/// coordinate contributes a distinct amount.
fn weighted(t: &Tensor, seed: u64) -> Result<Tensor> {
    let mut r = SeededRng::stream(seed, "weights");
    let w = Tensor::new(t.shape().to_vec(), r.normals(t.numel()))?;
    Ok(t.mul(&w)?.sum())
}

fn case(name: &'static str, inputs: Vec<(Vec<usize>, Vec<f64>)>, f: impl Fn(&[Tensor]) -> Result<Tensor> + 'static) -> OpCase {
    OpCase {
        name,
        inputs,
        f: Box::new(f),
    }
}

/// Every differentiable operation and loss of the crate, plus one composite.
pub fn op_cases() -> Vec<OpCase> {
    use crate::loss::{cross_entropy, kl_diag_gaussian, mse};
    let mut rng = SeededRng::new(1);
    let r = &mut rng;
    vec![
        case("add_broadcast", vec![input(r, &[3, 4]), input(r, &[4])], |t| weighted(&t[0].add(&t[1])?, 1)),
        case("sub_broadcast", vec![input(r, &[2, 1, 3]), input(r, &[4, 1])], |t| weighted(&t[0].sub(&t[1])?, 2)),
        case("mul", vec![input(r, &[2, 3]), input(r, &[2, 3])], |t| weighted(&t[0].mul(&t[1])?, 3)),
        case("div", vec![input(r, &[5]), positive(r, &[5])], |t| weighted(&t[0].div(&t[1])?, 4)),
        case("exp_ln_sqrt", vec![positive(r, &[6])], |t| {
            weighted(&t[0].ln().add(&t[0].sqrt())?.add(&t[0].scale(0.3).exp())?, 5)
        }),
        case("relu_neg_scalar", vec![input(r, &[7])], |t| weighted(&t[0].add_scalar(0.3).relu().neg(), 6)),
        case("square", vec![input(r, &[4])], |t| weighted(&t[0].square(), 18)),
        case("matmul_flat", vec![input(r, &[2, 3, 4]), input(r, &[4, 5])], |t| weighted(&t[0].matmul(&t[1])?, 7)),
        case("matmul_batched", vec![input(r, &[2, 3, 4]), input(r, &[2, 4, 2])], |t| {
            weighted(&t[0].matmul(&t[1])?, 8)
        }),
        case("matmul_broadcast_lhs", vec![input(r, &[3, 4]), input(r, &[2, 4, 2])], |t| {
            weighted(&t[0].matmul(&t[1])?, 9)
        }),
        case("permute_reshape", vec![input(r, &[2, 3, 4])], |t| {
            weighted(&t[0].permute(&[2, 0, 1])?.reshape([4, 6])?.transpose()?, 10)
        }),
        case("sum_mean_axis", vec![input(r, &[2, 3, 4])], |t| {
            weighted(&t[0].sum_axis(1, false)?.mul(&t[0].mean_axis(2, true)?.sum_axis(1, false)?)?, 11)
        }),
        case("sum_mean_all", vec![input(r, &[3, 2])], |t| t[0].sum().mul(&t[0].square().mean())),
        case("index_select", vec![input(r, &[4, 3])], |t| weighted(&t[0].index_select(&[3, 0, 0, 2])?, 12)),
        case("narrow_concat", vec![input(r, &[2, 5]), input(r, &[2, 2])], |t| {
            let a = t[0].narrow(1, 1, 3)?;
            weighted(&Tensor::concat(&[a, t[1].clone()], 1)?, 13)
        }),
        case("softmax_axis0", vec![input(r, &[3, 4])], |t| weighted(&t[0].softmax(0)?, 14)),
        case("softmax_last", vec![input(r, &[2, 3, 4])], |t| weighted(&t[0].softmax(2)?, 15)),
        case("log_softmax", vec![input(r, &[3, 5])], |t| weighted(&t[0].log_softmax(1)?, 16)),
        case("layer_norm", vec![input(r, &[3, 6])], |t| weighted(&t[0].layer_norm(1e-5)?, 17)),
        case("cross_entropy_masked", vec![input(r, &[4, 3])], |t| {
            cross_entropy(&t[0], &[0, 2, 1, 1], Some(&[false, false, true, false]))
        }),
        case("kl", vec![input(r, &[3, 4]), input(r, &[3, 4])], |t| kl_diag_gaussian(&t[0], &t[1])),
        case("mse", vec![input(r, &[5]), input(r, &[5])], |t| mse(&t[0], &t[1])),
        case(
            "composite",
            vec![input(r, &[6, 4]), input(r, &[4, 3]), input(r, &[3])],
            |t| {
                let logits = t[0].matmul(&t[1])?.add(&t[2])?;
                let p = logits.softmax(1)?;
                let l = cross_entropy(&logits, &[0, 1, 2, 0, 1, 2], None)?;
                l.add(&p.square().sum())
            },
        ),
    ]
}

/// Worst relative error of `case` over `points` jittered input draws with
/// `coords` probes each. Point 0 is the case's own inputs.
pub fn check_case(case: &OpCase, points: u64, coords: usize) -> Result<GradCheck> {
    let mut all = Vec::new();
    for point in 0..points {
        let mut rng = SeededRng::stream(point, case.name);
        let pts: Vec<(Vec<usize>, Vec<f64>)> = case
            .inputs
            .iter()
            .map(|(s, d)| {
                let jitter = rng.normals(d.len());
                // multiplicative jitter keeps the sign of positive-only inputs
                let moved = d.iter().zip(jitter).map(|(a, b)| a * (1.0 + 0.5 * b.tanh())).collect();
                (s.clone(), if point == 0 { d.clone() } else { moved })
            })
            .collect();
        all.extend(check(&pts, &case.f, coords, &mut rng)?.probes);
    }
    Ok(GradCheck { probes: all })
}
