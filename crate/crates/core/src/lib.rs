//! Deterministic dataset curation over class-labeled embeddings.
//!
//! Each class is summarised by its centroid; records are scored by cosine
//! similarity to it, low-similarity records are dropped, and a fixed number
//! of records is sampled from each similarity stratum so that the selected
//! set keeps the spread of the original class instead of its dominant mode.
//!
//! - [`store`]: datasets, CSV and VPED files, JSONL manifests
//! - [`similarity`]: centroids and cosine scores
//! - [`select`]: the selection pipeline
//! - [`bias`]: synthetic populations with hidden subgroups and bias metrics
//! - [`stats`]: per-class similarity summaries

pub mod bias;
pub mod cli;
pub mod error;
pub mod hash;
pub mod select;
pub mod similarity;
pub mod stats;
pub mod store;

pub use error::{Error, Result};
pub use select::{select_class, select_dataset, SelectionConfig};
pub use store::{Dataset, EmbeddingRecord};
