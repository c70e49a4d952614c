//! Heavy-atom molecular graphs over C, N, O and F.

pub mod canon;
pub mod dataset;
pub mod dense;
pub mod enumerate;
pub mod graph;
pub mod grf;
pub mod oracle;
pub mod smiles;

pub use canon::{canonical_form, CanonicalForm};
pub use dataset::{ingest_qm9, ingest_reader, write_dataset, Dataset, DatasetError, IngestReport, Standardizer};
pub use dense::{from_dense, to_dense, DenseError, DenseGraph};
pub use graph::{is_valid, AtomType, Bond, BondType, GraphError, MolGraph, MAX_ATOMS};
pub use grf::{parse_grf, write_grf, GrfError};
pub use smiles::{parse_smiles, write_smiles, write_smiles_lossy, SmilesError, WriteError};
