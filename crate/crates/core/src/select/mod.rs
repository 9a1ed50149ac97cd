//! Variation-preserving, equally distributed instance selection.
//!
//! Per class: small classes pass through whole. Larger classes are scored
//! against their centroid, records below `theta` are discarded, the rest
//! are spread over similarity buckets and up to `n1` records are drawn from
//! each bucket.

mod bucket;
mod config;
pub mod rng;

use rayon::prelude::*;

pub use self::bucket::{bucketize, Bucket};
pub use self::config::SelectionConfig;
pub use self::rng::ClassRng;

use crate::error::{Error, Result};
use crate::similarity::{centroid, score_class, ClassCentroid, ScoredRecord};
use crate::store::{
    Dataset, EmbeddingRecord, ManifestEntry, ManifestHeader, SelectionManifest, Status,
};

#[derive(Debug, Clone, PartialEq)]
pub struct ClassSelection {
    pub label: String,
    pub size: usize,
    /// `None` for passthrough classes, which are never scored.
    pub centroid: Option<ClassCentroid>,
    pub scored: Vec<ScoredRecord>,
    /// Record indices with similarity below `theta`, ascending.
    pub discarded: Vec<usize>,
    pub buckets: Vec<Bucket>,
    /// Record indices, ascending.
    pub selected: Vec<usize>,
    pub passthrough: bool,
}

impl ClassSelection {
    pub fn retained_count(&self) -> usize {
        self.buckets.iter().map(Bucket::len).sum()
    }
}

/// Splits record indices into (retained, discarded); the boundary `s == theta` is retained.
pub fn threshold_filter(scored: &[ScoredRecord], theta: f64) -> (Vec<usize>, Vec<usize>) {
    let (retained, discarded): (Vec<&ScoredRecord>, Vec<&ScoredRecord>) =
        scored.iter().partition(|s| s.similarity >= theta);
    (
        retained.into_iter().map(|s| s.record_index).collect(),
        discarded.into_iter().map(|s| s.record_index).collect(),
    )
}

/// Uniform sample of `min(n1, |members|)` members without replacement, ascending.
/// Buckets no larger than `n1` are returned whole and consume no randomness.
pub fn sample_bucket(bucket: &Bucket, n1: usize, rng: &mut ClassRng) -> Vec<usize> {
    sample_without_replacement(&bucket.members, n1, rng)
}

/// Partial Fisher-Yates over `items` in the given order: for `i` in `0..m`,
/// swap position `i` with `i + rng.below(len - i)`; the first `m` items,
/// sorted, are the sample.
pub fn sample_without_replacement(items: &[usize], m: usize, rng: &mut ClassRng) -> Vec<usize> {
    let len = items.len();
    if len <= m {
        return items.to_vec();
    }
    let mut pool = items.to_vec();
    for i in 0..m {
        let j = i + rng.below(len - i);
        pool.swap(i, j);
    }
    pool.truncate(m);
    pool.sort_unstable();
    pool
}

/// Runs the selection for one class. `records` must all carry the same label.
pub fn select_class(records: &[&EmbeddingRecord], config: &SelectionConfig) -> Result<ClassSelection> {
    let first = records
        .first()
        .ok_or_else(|| Error::EmptyClass(String::new()))?;
    let label = first.label.clone();
    let size = records.len();

    if size <= config.small_class_max {
        return Ok(ClassSelection {
            label,
            size,
            centroid: None,
            scored: Vec::new(),
            discarded: Vec::new(),
            buckets: Vec::new(),
            selected: (0..size).collect(),
            passthrough: true,
        });
    }

    let centroid = centroid(records)?;
    let scored = score_class(records, &centroid)?;
    let (retained, discarded) = threshold_filter(&scored, config.theta);
    let retained: Vec<ScoredRecord> = retained.iter().map(|&i| scored[i]).collect();
    let buckets = bucketize(&retained, config.k, config.n_min);

    let mut rng = ClassRng::for_class(config.seed, &label);
    let mut selected: Vec<usize> = buckets
        .iter()
        .flat_map(|b| sample_bucket(b, config.n1, &mut rng))
        .collect();
    selected.sort_unstable();

    Ok(ClassSelection {
        label,
        size,
        centroid: Some(centroid),
        scored,
        discarded,
        buckets,
        selected,
        passthrough: false,
    })
}

/// Selects every class of `dataset`, in parallel on the current rayon pool.
/// Results are in label order and do not depend on the schedule.
pub fn select_classes(dataset: &Dataset, config: &SelectionConfig) -> Result<Vec<ClassSelection>> {
    config.validate()?;
    if dataset.num_classes() == 0 {
        return Err(Error::EmptyInput);
    }
    let classes: Vec<(&str, &[usize])> = dataset.classes().collect();
    classes
        .par_iter()
        .map(|&(label, indices)| {
            if indices.is_empty() {
                return Err(Error::EmptyClass(label.to_owned()));
            }
            let records: Vec<&EmbeddingRecord> =
                indices.iter().map(|&i| &dataset.records()[i]).collect();
            select_class(&records, config).map_err(|e| e.in_class(label))
        })
        .collect::<Vec<_>>()
        .into_iter()
        .collect()
}

/// Lays per-class results out as one manifest entry per dataset record, in
/// dataset order.
pub fn build_manifest(
    dataset: &Dataset,
    config: &SelectionConfig,
    selections: &[ClassSelection],
) -> SelectionManifest {
    let mut slots: Vec<Option<ManifestEntry>> = vec![None; dataset.len()];
    for sel in selections {
        let indices = dataset
            .class_indices(&sel.label)
            .expect("selection label comes from this dataset");
        let mut status = vec![Status::AllKeptSmallClass; sel.size];
        let mut bucket_of: Vec<Option<u32>> = vec![None; sel.size];
        if !sel.passthrough {
            status.fill(Status::DiscardedThreshold);
            for b in &sel.buckets {
                for &m in &b.members {
                    status[m] = Status::RetainedNotSampled;
                    bucket_of[m] = Some(b.index as u32);
                }
            }
            for &m in &sel.selected {
                status[m] = Status::Selected;
            }
        }
        for (local, &global) in indices.iter().enumerate() {
            let record = &dataset.records()[global];
            slots[global] = Some(ManifestEntry {
                id: record.id.clone(),
                label: record.label.clone(),
                status: status[local],
                similarity: sel.scored.get(local).map(|s| s.similarity),
                bucket: bucket_of[local],
            });
        }
    }
    SelectionManifest {
        header: ManifestHeader {
            config: *config,
            seed: config.seed,
            dim: dataset.dim() as u32,
            records: dataset.len() as u64,
            fingerprint: dataset.fingerprint(),
        },
        entries: slots
            .into_iter()
            .map(|e| e.expect("every record belongs to a class"))
            .collect(),
    }
}

pub fn select_dataset(dataset: &Dataset, config: &SelectionConfig) -> Result<SelectionManifest> {
    let selections = select_classes(dataset, config)?;
    Ok(build_manifest(dataset, config, &selections))
}
