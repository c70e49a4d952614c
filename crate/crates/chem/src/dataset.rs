//! QM9-style delimited records: a `smiles` column plus named property columns.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use thiserror::Error;

use crate::graph::MolGraph;
use crate::smiles::parse_smiles;

/// Property columns recognised in input files, in output order.
pub const QM9_PROPERTIES: [&str; 19] = [
    "mu", "alpha", "homo", "lumo", "gap", "r2", "zpve", "u0", "u298", "h298", "g298", "cv", "a", "b", "c",
    "u0_atom", "u298_atom", "h298_atom", "g298_atom",
];

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("bad header: {0}")]
    Header(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("property `{0}` not present in dataset")]
    MissingProperty(String),
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Dataset {
    pub property_names: Vec<String>,
    pub smiles: Vec<String>,
    pub molecules: Vec<MolGraph>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.molecules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.molecules.is_empty()
    }
}

/// Counts of what happened to each input record.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct IngestReport {
    pub records: usize,
    pub molecules: usize,
    pub skipped_unsupported: usize,
    pub skipped_malformed: usize,
}

pub fn ingest_qm9(path: &Path, limit: Option<usize>) -> Result<(Dataset, IngestReport), DatasetError> {
    let f = File::open(path).map_err(|source| DatasetError::Io {
        path: path.display().to_string(),
        source,
    })?;
    ingest_reader(f, limit)
}

/// Reads records until `limit` molecules have parsed. Records whose SMILES
/// fall outside the subset, or whose fields are missing or non-numeric, are
/// skipped and counted.
pub fn ingest_reader<R: Read>(input: R, limit: Option<usize>) -> Result<(Dataset, IngestReport), DatasetError> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).trim(csv::Trim::All).from_reader(input);
    let header = rdr.headers()?.clone();
    let lower: Vec<String> = header.iter().map(|h| h.to_ascii_lowercase()).collect();
    let smiles_col = lower
        .iter()
        .position(|h| h == "smiles")
        .ok_or_else(|| DatasetError::Header("no `smiles` column".into()))?;
    let mut columns: Vec<(String, usize)> = Vec::new();
    for name in QM9_PROPERTIES {
        let hits: Vec<usize> = (0..lower.len()).filter(|&k| lower[k] == name).collect();
        match hits.as_slice() {
            [] => {}
            [k] => columns.push((name.to_string(), *k)),
            _ => return Err(DatasetError::Header(format!("duplicate column `{name}`"))),
        }
    }

    let mut ds = Dataset {
        property_names: columns.iter().map(|(n, _)| n.clone()).collect(),
        ..Dataset::default()
    };
    let mut rep = IngestReport::default();
    for rec in rdr.records() {
        if limit.is_some_and(|l| ds.len() >= l) {
            break;
        }
        rep.records += 1;
        let rec = match rec {
            Ok(r) if r.len() == header.len() => r,
            Ok(_) | Err(_) => {
                rep.skipped_malformed += 1;
                continue;
            }
        };
        let mut props = BTreeMap::new();
        let mut ok = true;
        for (name, k) in &columns {
            match rec[*k].parse::<f64>() {
                Ok(v) if v.is_finite() => {
                    props.insert(name.clone(), v);
                }
                _ => ok = false,
            }
        }
        if !ok {
            rep.skipped_malformed += 1;
            continue;
        }
        let text = &rec[smiles_col];
        match parse_smiles(text) {
            Ok(g) => {
                ds.smiles.push(text.to_string());
                ds.molecules.push(g.with_properties(props));
            }
            Err(e) => {
                log::debug!("skipping `{text}`: {e}");
                rep.skipped_unsupported += 1;
            }
        }
    }
    rep.molecules = ds.len();
    if rep.skipped_malformed > 0 {
        log::warn!("{} malformed records skipped", rep.skipped_malformed);
    }
    Ok((ds, rep))
}

pub fn write_dataset<W: Write>(ds: &Dataset, out: W) -> Result<(), DatasetError> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["smiles".to_string()];
    header.extend(ds.property_names.iter().cloned());
    w.write_record(&header)?;
    for (s, g) in ds.smiles.iter().zip(&ds.molecules) {
        let mut row = vec![s.clone()];
        for name in &ds.property_names {
            let v = g.property(name).ok_or_else(|| DatasetError::MissingProperty(name.clone()))?;
            row.push(format!("{v:?}"));
        }
        w.write_record(&row)?;
    }
    w.flush().map_err(|source| DatasetError::Io {
        path: "<output>".into(),
        source,
    })?;
    Ok(())
}

/// Per-property affine map to zero mean and unit variance.
#[derive(Clone, Debug, PartialEq)]
pub struct Standardizer {
    pub names: Vec<String>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    /// Statistics over `molecules`; a constant property gets std 1.
    pub fn fit<'a>(names: &[String], molecules: impl IntoIterator<Item = &'a MolGraph>) -> Result<Self, DatasetError> {
        let mut sum = vec![0.0; names.len()];
        let mut sq = vec![0.0; names.len()];
        let mut n = 0usize;
        let rows: Vec<Vec<f64>> = molecules
            .into_iter()
            .map(|g| {
                names
                    .iter()
                    .map(|p| g.property(p).ok_or_else(|| DatasetError::MissingProperty(p.clone())))
                    .collect::<Result<Vec<f64>, _>>()
            })
            .collect::<Result<_, _>>()?;
        for r in &rows {
            n += 1;
            for (k, v) in r.iter().enumerate() {
                sum[k] += v;
            }
        }
        let count = n.max(1) as f64;
        let mean: Vec<f64> = sum.iter().map(|s| s / count).collect();
        for r in &rows {
            for (k, v) in r.iter().enumerate() {
                sq[k] += (v - mean[k]).powi(2);
            }
        }
        let std = sq
            .iter()
            .map(|s| {
                let sd = (s / count).sqrt();
                if sd > 0.0 && sd.is_finite() {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Ok(Standardizer {
            names: names.to_vec(),
            mean,
            std,
        })
    }

    pub fn apply(&self, k: usize, v: f64) -> f64 {
        (v - self.mean[k]) / self.std[k]
    }

    pub fn invert(&self, k: usize, v: f64) -> f64 {
        v * self.std[k] + self.mean[k]
    }
}
