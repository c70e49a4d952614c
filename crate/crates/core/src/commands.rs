//! File-level operations behind each CLI subcommand.

use std::collections::BTreeSet;
use std::error::Error;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use molgen_chem::{ingest_qm9, write_dataset, write_smiles_lossy, CanonicalForm, Dataset, IngestReport};

use crate::config::Config;
use crate::generate::{export_latent_scatter, generate, latent_traversal, write_scatter_csv, write_traversal_csv};
use crate::metrics::{canonical_set, evaluate_smiles, write_report, EvalReport};
use crate::model::Model;
use crate::train::{train, TrainOutcome};

pub type CmdResult<T> = Result<T, Box<dyn Error>>;

fn create(path: &Path) -> CmdResult<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| format!("cannot create {}: {e}", path.display()).into())
}

fn read_text(path: &Path) -> CmdResult<String> {
    fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()).into())
}

pub fn load_dataset(path: &Path) -> CmdResult<Dataset> {
    let (ds, rep) = ingest_qm9(path, None)?;
    if rep.skipped_unsupported + rep.skipped_malformed > 0 {
        log::warn!(
            "{}: {} records skipped ({} unsupported, {} malformed)",
            path.display(),
            rep.skipped_unsupported + rep.skipped_malformed,
            rep.skipped_unsupported,
            rep.skipped_malformed
        );
    }
    Ok(ds)
}

pub fn ingest(input: &Path, output: &Path, limit: Option<usize>) -> CmdResult<IngestReport> {
    let (ds, rep) = ingest_qm9(input, limit)?;
    let mut w = create(output)?;
    write_dataset(&ds, &mut w)?;
    w.flush()?;
    log::info!(
        "{} records read, {} molecules kept, {} unsupported, {} malformed",
        rep.records,
        rep.molecules,
        rep.skipped_unsupported,
        rep.skipped_malformed
    );
    Ok(rep)
}

pub fn train_file(dataset: &Path, config: &Path, output: &Path) -> CmdResult<TrainOutcome> {
    let cfg = Config::parse(&read_text(config)?).map_err(|e| format!("{}: {e}", config.display()))?;
    let ds = load_dataset(dataset)?;
    let out = train(&cfg, &ds.molecules)?;
    out.model.save(output)?;
    log::info!("best epoch {:?}, checkpoint written to {}", out.best_epoch, output.display());
    Ok(out)
}

pub fn generate_file(ckpt: &Path, n: usize, seed: u64, output: &Path) -> CmdResult<()> {
    let model = Model::load(ckpt)?;
    let graphs = generate(&model, n, seed)?;
    let mut w = create(output)?;
    for g in &graphs {
        writeln!(w, "{}", write_smiles_lossy(g))?;
    }
    w.flush()?;
    Ok(())
}

/// The training set's canonical forms: every molecule in `dataset`.
pub fn reference_set(dataset: &Path) -> CmdResult<BTreeSet<CanonicalForm>> {
    Ok(canonical_set(&load_dataset(dataset)?.molecules))
}

pub fn evaluate_file(generated: &Path, train_set: &Path, report: &Path) -> CmdResult<EvalReport> {
    let text = read_text(generated)?;
    let r = evaluate_smiles(text.lines(), &reference_set(train_set)?);
    let mut w = create(report)?;
    write_report(&r, &mut w)?;
    w.flush()?;
    Ok(r)
}

fn property_index(model: &Model, name: &str) -> CmdResult<usize> {
    model.property_index(name).ok_or_else(|| {
        format!(
            "property `{name}` is not tied to a latent dimension (have: {})",
            model.config.property_names.join(", ")
        )
        .into()
    })
}

pub fn traverse_file(ckpt: &Path, property: &str, lo: f64, hi: f64, steps: usize, output: &Path) -> CmdResult<()> {
    let model = Model::load(ckpt)?;
    let p = property_index(&model, property)?;
    let rows = latent_traversal(&model, p, lo, hi, steps)?;
    let mut w = create(output)?;
    write_traversal_csv(&rows, property, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn scatter_file(ckpt: &Path, dataset: &Path, property: &str, free_dim: usize, output: &Path) -> CmdResult<()> {
    let model = Model::load(ckpt)?;
    let p = property_index(&model, property)?;
    let ds = load_dataset(dataset)?;
    let rows = export_latent_scatter(&model, &ds.molecules, p, free_dim)?;
    let mut w = create(output)?;
    write_scatter_csv(&rows, property, free_dim, &mut w)?;
    w.flush()?;
    Ok(())
}
