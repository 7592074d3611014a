//! Toolkit for modeling in-line hydrolytic degradation of RNA.
//!
//! The pipeline runs from per-nucleotide chemical probing data to
//! whole-molecule degradation rates:
//!
//! - [`data`] — construct/dataset schema, BPP matrices, prediction CSV I/O
//! - [`structfeat`] — pair tables, loop-type annotation, graph distances,
//!   BPP summaries, reversal augmentation
//! - [`degscore`] — windowed linear degradation model with ridge training
//! - [`neuralreg`] — reference neural per-nucleotide regressor (message
//!   passing over structure operators + bidirectional gated recurrence),
//!   trained with hand-derived reverse-mode gradients
//! - [`eval`] — MCRMSE, signal/noise ratio and filtering, Spearman
//!   correlation, motif-aggregated signal
//! - [`curation`] — Ward clustering and blind train/test split assignment
//! - [`ensemble`] — prediction blending and genetic-algorithm weight search
//! - [`aggregate`] — per-nucleotide rates to whole-mRNA rates and half-lives
//! - [`synthetic`] — deterministic generators for synthetic fixtures

pub mod aggregate;
pub mod curation;
pub mod data;
pub mod degscore;
pub mod ensemble;
pub mod eval;
pub mod neuralreg;
pub mod structfeat;
pub mod synthetic;

mod error;

pub use error::{Error, Result};
