#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::PathBuf;

use molgen::batch::GraphBatch;
use molgen::config::{Config, SplitMode};
use molgen::train::{loss_total, Stage};
use molgen::Model;
use molgen_chem::dense::{EDGE_CLASSES, NODE_CLASSES, N_MAX, PAD};
use molgen_chem::oracle::isomorphic;
use molgen_chem::{ingest_qm9, is_valid, parse_smiles, Dataset, DenseGraph, MolGraph, Standardizer};
use molgen_tensor::gradcheck::{check, GradCheck};
use molgen_tensor::{Bound, SeededRng, Tensor};

pub fn sample_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../chem/tests/data/qm9_sample.csv")
}

pub fn load_sample(limit: Option<usize>) -> Dataset {
    ingest_qm9(&sample_path(), limit).expect("fixture parses").0
}

/// A model small enough for debug-build tests.
pub fn tiny_config() -> Config {
    Config::parse(
        "property_names = mu, gap\nhidden_dim = 8\nd_model = 8\nn_heads = 2\nffn_dim = 8\n\
         latent_free_dims = 2\nbatch_size = 8\nsplit_mode = none",
    )
    .unwrap()
}

/// The 64-molecule memorization run: 500 stage-1 and 2,000 stage-2 steps
/// at batch size 32.
pub fn overfit_config() -> Config {
    Config {
        split_mode: SplitMode::None,
        stage1_epochs: 250,
        stage2_epochs: 1000,
        vae_lr: 5e-3,
        lr_decay_every: 1_000_000,
        ..Config::default()
    }
}

pub fn standardized_model(cfg: &Config, molecules: &[MolGraph]) -> Model {
    let st = Standardizer::fit(&cfg.property_names, molecules.iter()).unwrap();
    Model::new(cfg.clone(), st).unwrap()
}

/// Finite-difference check of the full loss with respect to the parameters
/// the stage trains, at `coords` random coordinates.
pub fn loss_gradcheck(model: &Model, molecules: &[MolGraph], stage: Stage, coords: usize, seed: u64) -> GradCheck {
    let refs: Vec<&MolGraph> = molecules.iter().collect();
    let batch = GraphBatch::new(&refs, Some(&model.standardizer)).unwrap();
    let mut rng = SeededRng::stream(seed, "gradcheck");
    let noise = model.vae.latent_noise(&mut rng, refs.len()).unwrap();
    let trained: Vec<usize> = model
        .store
        .iter()
        .filter(|(_, p)| stage == Stage::Two || p.name.starts_with("vae."))
        .map(|(id, _)| id.0)
        .collect();
    let inputs: Vec<(Vec<usize>, Vec<f64>)> = trained
        .iter()
        .map(|&k| {
            let p = model.store.get(molgen_tensor::ParamId(k));
            (p.shape.clone(), p.data.clone())
        })
        .collect();
    let f = |leaves: &[Tensor]| {
        let mut tensors: Vec<Tensor> = model
            .store
            .iter()
            .map(|(_, p)| Tensor::new(p.shape.clone(), p.data.clone()).unwrap())
            .collect();
        for (leaf, &k) in leaves.iter().zip(&trained) {
            tensors[k] = leaf.clone();
        }
        let bound = Bound::from_tensors(tensors);
        loss_total(model, &bound, &batch, stage, 20, &noise).map(|l| l.total)
    };
    check(&inputs, f, coords, &mut rng).unwrap()
}

pub fn pearson(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = xs.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = ys.iter().map(|b| (b - my).powi(2)).sum();
    sxy / (sxx * syy).sqrt()
}

/// Random atom classes (padding anywhere) and random bond classes between
/// real atoms, with no regard for valence.
pub fn corrupted_dense(rng: &mut SeededRng) -> DenseGraph {
    let classes: Vec<usize> = (0..N_MAX).map(|_| rng.below(NODE_CLASSES)).collect();
    let mut x = vec![0.0; N_MAX * NODE_CLASSES];
    for (i, &c) in classes.iter().enumerate() {
        x[i * NODE_CLASSES + c] = 1.0;
    }
    let mut e = [[0usize; N_MAX]; N_MAX];
    for i in 0..N_MAX {
        for j in i + 1..N_MAX {
            if classes[i] != PAD && classes[j] != PAD {
                let t = rng.below(EDGE_CLASSES);
                e[i][j] = t;
                e[j][i] = t;
            }
        }
    }
    let mut a = vec![0.0; N_MAX * N_MAX * EDGE_CLASSES];
    for i in 0..N_MAX {
        for j in 0..N_MAX {
            a[(i * N_MAX + j) * EDGE_CLASSES + e[i][j]] = 1.0;
        }
    }
    DenseGraph::from_parts(x, a).unwrap()
}

/// Validity, uniqueness, novelty and VUN by pairwise isomorphism search.
pub fn oracle_metrics(generated: &[MolGraph], training: &[MolGraph]) -> (f64, f64, f64, f64) {
    let valid: Vec<&MolGraph> = generated.iter().filter(|g| is_valid(g)).collect();
    let mut classes: Vec<&MolGraph> = Vec::new();
    for g in &valid {
        if !classes.iter().any(|c| isomorphic(c, g)) {
            classes.push(g);
        }
    }
    let novel = classes.iter().filter(|c| !training.iter().any(|t| isomorphic(t, c))).count();
    let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    (
        ratio(valid.len(), generated.len()),
        ratio(classes.len(), valid.len()),
        ratio(novel, classes.len()),
        ratio(novel, generated.len()),
    )
}

fn mols(smiles: &[&str]) -> Vec<MolGraph> {
    smiles
        .iter()
        .map(|s| {
            if *s == "C.C" {
                MolGraph::new(vec![molgen_chem::AtomType::C; 2], []).unwrap()
            } else if *s == "" {
                MolGraph::new(Vec::new(), []).unwrap()
            } else {
                parse_smiles(s).unwrap()
            }
        })
        .collect()
}

/// Twenty `(generated, training)` lists with at most 50 generated
/// molecules each. The first two are the worked examples.
pub fn handcrafted_lists() -> Vec<(Vec<MolGraph>, Vec<MolGraph>)> {
    let fixed: Vec<(Vec<&str>, Vec<&str>)> = vec![
        (vec!["CC", "C.C", "CO", "C.C"], vec![]),
        (vec!["CCO", "OCC", "CN"], vec!["C(C)O"]),
        (vec![], vec!["C"]),
        (vec!["C.C", "", "C.C"], vec!["CC"]),
        (vec!["C1CC1", "C1CC1", "CCC", "C=CC"], vec!["CCC"]),
        (vec!["CC(C)C", "CCCC", "C(C)(C)C"], vec!["CCCC", "CC(C)C"]),
        (vec!["OC=O", "O=CO", "C(=O)O", "CC=O"], vec![]),
        (vec!["N#N", "C#N", "N#C", "C#C"], vec!["N#N"]),
        (vec!["FC(F)F", "C(F)(F)F", "FCF", "OF"], vec!["FCF"]),
        (vec!["C1CCC1", "C1CC(C1)", "C12CC1C2", "CC1CC1"], vec!["C1CC1C"]),
        (vec!["O", "N", "C", "F"], vec!["O", "N", "C", "F"]),
        (vec!["CCN", "NCC", "CNC", "C(N)C"], vec!["CNC"]),
        (vec!["C=C=C", "C#CC", "CC#C", "C1=CC1"], vec!["C=C=C"]),
    ];
    let mut out: Vec<(Vec<MolGraph>, Vec<MolGraph>)> = fixed.iter().map(|(g, t)| (mols(g), mols(t))).collect();
    // Random lists drawn from the fixture with repeats, disconnected
    // entries, and a training set overlapping part of the pool.
    let pool = load_sample(Some(60)).molecules;
    let disconnected = mols(&["C.C"]).remove(0);
    let mut rng = SeededRng::new(44);
    while out.len() < 20 {
        let n = 10 + rng.below(41);
        let gen: Vec<MolGraph> = (0..n)
            .map(|_| {
                if rng.below(10) == 0 {
                    disconnected.clone()
                } else {
                    let g = &pool[rng.below(25)];
                    let mut perm: Vec<usize> = (0..g.num_atoms()).collect();
                    rng.shuffle(&mut perm);
                    g.permuted(&perm)
                }
            })
            .collect();
        let train: Vec<MolGraph> = (0..15).map(|_| pool[rng.below(40)].clone()).collect();
        out.push((gen, train));
    }
    out
}

pub fn with_labels(g: MolGraph, names: &[String], values: &[f64]) -> MolGraph {
    let props: BTreeMap<String, f64> = names.iter().cloned().zip(values.iter().copied()).collect();
    g.with_properties(props)
}
