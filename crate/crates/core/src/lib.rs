//! Molecule generation with a graph VAE for atom types and an edge
//! transformer for bonds.
//!
//! The VAE encodes a padded molecular graph with GraphSAGE layers and
//! differentiable pooling, decodes atom classes through learned unpooling,
//! and ties the first latent coordinates to molecular properties with a
//! per-dimension affine head. Given the atom classes, the edge transformer
//! predicts one bond class per node pair, using an MLP of the two endpoint
//! atoms in place of positional encoding and a valence mask that makes
//! every generated molecule valence-feasible.

pub mod batch;
pub mod commands;
pub mod config;
pub mod generate;
pub mod metrics;
pub mod model;
pub mod nn;
pub mod train;
pub mod transformer;
pub mod vae;

pub use config::Config;
pub use model::{Model, ModelError};
