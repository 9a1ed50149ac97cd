//! Per-class similarity summaries.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::similarity::{centroid, score_class};
use crate::store::{Dataset, EmbeddingRecord};

pub const HISTOGRAM_BINS: usize = 20;

/// Bin of a similarity in the 20-bin histogram over [-1, 1]:
/// `floor((s + 1) * 10)`, with `s = 1` falling in the top bin.
pub fn histogram_bin(similarity: f64) -> usize {
    let bin = ((similarity + 1.0) * 10.0).floor();
    (bin.max(0.0) as usize).min(HISTOGRAM_BINS - 1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassStats {
    pub label: String,
    pub count: usize,
    pub min: f64,
    pub mean: f64,
    pub max: f64,
    /// Counts over [-1, 1] in bins of width 0.1, lowest first.
    pub histogram: Vec<usize>,
}

pub fn class_stats(records: &[&EmbeddingRecord]) -> Result<ClassStats> {
    let c = centroid(records)?;
    let scored = score_class(records, &c)?;
    let mut histogram = vec![0usize; HISTOGRAM_BINS];
    let (mut min, mut max, mut sum) = (f64::INFINITY, f64::NEG_INFINITY, 0.0);
    for s in &scored {
        histogram[histogram_bin(s.similarity)] += 1;
        min = min.min(s.similarity);
        max = max.max(s.similarity);
        sum += s.similarity;
    }
    Ok(ClassStats {
        label: c.label,
        count: scored.len(),
        min,
        mean: sum / scored.len() as f64,
        max,
        histogram,
    })
}

/// Stats for every class, in label order.
pub fn dataset_stats(dataset: &Dataset) -> Result<Vec<ClassStats>> {
    let classes: Vec<(&str, &[usize])> = dataset.classes().collect();
    classes
        .par_iter()
        .map(|&(label, indices)| {
            if indices.is_empty() {
                return Err(Error::EmptyClass(label.to_owned()));
            }
            let records: Vec<&EmbeddingRecord> = indices.iter().map(|&i| &dataset.records()[i]).collect();
            class_stats(&records).map_err(|e| e.in_class(label))
        })
        .collect::<Vec<_>>()
        .into_iter()
        .collect()
}
