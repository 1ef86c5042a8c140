//! Merge independently trained MLPs by aligning their hidden features.
//!
//! The main method aligns each hidden layer of one model to another with
//! regularized CCA and averages the aligned parameters. Permutation
//! matching and plain weight averaging are provided as baselines, together
//! with evaluation (accuracy, ensembles, loss barriers) and diagnostics of
//! how the alignments relate to neuron correlations.
//!
//! Typical flow:
//!
//! ```no_run
//! use fuselab::{datagen, trainer, merge, cca::Gamma};
//!
//! let ds = datagen::generate(4, 500, 16, 0).unwrap();
//! let a = trainer::train(&ds, &trainer::TrainConfig::for_seed(1)).unwrap();
//! let b = trainer::train(&ds, &trainer::TrainConfig::for_seed(2)).unwrap();
//! let merged = merge::merge_many(&a, &[b], merge::AlignMethod::Cca(Gamma::default()), ds.features()).unwrap();
//! ```

pub mod activations;
pub mod analysis;
pub mod cca;
pub mod cli;
pub mod datagen;
pub mod error;
pub mod eval;
pub mod linalg;
mod manifest;
pub mod matching;
pub mod merge;
pub mod model;
pub mod report;
pub mod trainer;

pub use error::{Error, Result};
pub use linalg::{Matrix, Vector};
pub use model::{apply_plan, AlignmentPlan, LayerTransform, MethodTag, MlpModel};
