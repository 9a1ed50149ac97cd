use std::collections::{BTreeMap, HashSet};

use crate::error::{Error, Result};
use crate::hash::Fnv1a;

/// One instance: identifier, class label and its feature vector.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingRecord {
    pub id: String,
    pub label: String,
    pub vector: Vec<f32>,
}

impl EmbeddingRecord {
    pub fn new(id: impl Into<String>, label: impl Into<String>, vector: Vec<f32>) -> Self {
        Self {
            id: id.into(),
            label: label.into(),
            vector,
        }
    }
}

/// Checks an id or label against the constraints shared by every file format.
pub(crate) fn validate_name(field: &'static str, value: &str) -> Result<()> {
    let reason = if value.is_empty() {
        "must not be empty"
    } else if value.contains(',') {
        "must not contain commas"
    } else if value.contains(['\n', '\r']) {
        "must not contain line breaks"
    } else if value.len() > u16::MAX as usize {
        "longer than 65535 bytes"
    } else {
        return Ok(());
    };
    Err(Error::InvalidField {
        field,
        value: value.to_owned(),
        reason,
    })
}

/// Class-labeled embeddings of a single dimension.
///
/// Records keep insertion (file) order. The class index maps each label to
/// the positions of its records, also in file order.
#[derive(Debug, Clone)]
pub struct Dataset {
    dim: usize,
    records: Vec<EmbeddingRecord>,
    classes: BTreeMap<String, Vec<usize>>,
    keys: HashSet<(String, String)>,
}

impl PartialEq for Dataset {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.records == other.records && self.classes == other.classes
    }
}

impl Dataset {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidConfig("dataset dimension must be positive".into()));
        }
        Ok(Self {
            dim,
            records: Vec::new(),
            classes: BTreeMap::new(),
            keys: HashSet::new(),
        })
    }

    pub fn from_records(dim: usize, records: impl IntoIterator<Item = EmbeddingRecord>) -> Result<Self> {
        let mut dataset = Self::new(dim)?;
        for record in records {
            dataset.push(record)?;
        }
        Ok(dataset)
    }

    pub fn push(&mut self, record: EmbeddingRecord) -> Result<()> {
        validate_name("id", &record.id)?;
        validate_name("label", &record.label)?;
        if record.vector.len() != self.dim {
            return Err(Error::DimensionMismatch {
                id: record.id,
                expected: self.dim,
                found: record.vector.len(),
            });
        }
        if let Some(position) = record.vector.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite {
                id: record.id,
                position,
            });
        }
        let key = (record.id.clone(), record.label.clone());
        if !self.keys.insert(key) {
            return Err(Error::DuplicateRecord {
                id: record.id,
                label: record.label,
            });
        }
        self.classes
            .entry(record.label.clone())
            .or_default()
            .push(self.records.len());
        self.records.push(record);
        Ok(())
    }

    /// Registers a label with no records. Selection rejects such classes.
    pub fn add_empty_class(&mut self, label: impl Into<String>) -> Result<()> {
        let label = label.into();
        validate_name("label", &label)?;
        self.classes.entry(label).or_default();
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[EmbeddingRecord] {
        &self.records
    }

    /// Labels in sorted order with the dataset positions of their records.
    pub fn classes(&self) -> impl Iterator<Item = (&str, &[usize])> {
        self.classes.iter().map(|(l, idx)| (l.as_str(), idx.as_slice()))
    }

    pub fn class_indices(&self, label: &str) -> Option<&[usize]> {
        self.classes.get(label).map(Vec::as_slice)
    }

    pub fn class_records(&self, label: &str) -> Vec<&EmbeddingRecord> {
        self.class_indices(label)
            .unwrap_or_default()
            .iter()
            .map(|&i| &self.records[i])
            .collect()
    }

    pub fn num_classes(&self) -> usize {
        self.classes.len()
    }

    /// FNV-1a 64 over the canonical VPED encoding, as 16 hex digits.
    pub fn fingerprint(&self) -> String {
        let mut hasher = Fnv1a::new();
        super::vped::encode_to(self, &mut hasher).expect("hashing cannot fail");
        format!("{:016x}", hasher.finish())
    }
}
