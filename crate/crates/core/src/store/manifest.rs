//! JSONL selection manifest: one metadata line, then one line per input record
//! in dataset order.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::select::SelectionConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Status {
    AllKeptSmallClass,
    DiscardedThreshold,
    RetainedNotSampled,
    Selected,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::AllKeptSmallClass => "ALL_KEPT_SMALL_CLASS",
            Status::DiscardedThreshold => "DISCARDED_THRESHOLD",
            Status::RetainedNotSampled => "RETAINED_NOT_SAMPLED",
            Status::Selected => "SELECTED",
        }
    }

    /// Whether the record ends up in the training set.
    pub fn is_kept(self) -> bool {
        matches!(self, Status::AllKeptSmallClass | Status::Selected)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    pub label: String,
    pub status: Status,
    pub similarity: Option<f64>,
    pub bucket: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestHeader {
    pub config: SelectionConfig,
    pub seed: u64,
    pub dim: u32,
    pub records: u64,
    /// See [`crate::store::Dataset::fingerprint`].
    pub fingerprint: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionManifest {
    pub header: ManifestHeader,
    pub entries: Vec<ManifestEntry>,
}

impl SelectionManifest {
    pub fn selected_count(&self) -> usize {
        self.entries.iter().filter(|e| e.status.is_kept()).count()
    }

    /// Checks the per-entry invariants and the header record count.
    pub fn validate(&self) -> Result<()> {
        if self.header.records != self.entries.len() as u64 {
            return Err(Error::ManifestMismatch(format!(
                "header declares {} records, manifest has {} entries",
                self.header.records,
                self.entries.len()
            )));
        }
        let theta = self.header.config.theta;
        for e in &self.entries {
            let ok = match e.status {
                Status::Selected | Status::RetainedNotSampled => {
                    e.bucket.is_some() && e.similarity.is_some_and(|s| s >= theta)
                }
                Status::DiscardedThreshold => {
                    e.bucket.is_none() && e.similarity.is_some_and(|s| s < theta)
                }
                Status::AllKeptSmallClass => e.bucket.is_none(),
            };
            if !ok {
                return Err(Error::ManifestMismatch(format!(
                    "entry ({}, {}) with status {} has inconsistent similarity/bucket",
                    e.id,
                    e.label,
                    e.status.as_str()
                )));
            }
        }
        Ok(())
    }
}

pub fn write_manifest(manifest: &SelectionManifest, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    write_manifest_to(manifest, &mut out)?;
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn write_manifest_to<W: Write>(manifest: &SelectionManifest, out: &mut W) -> Result<()> {
    serde_json::to_writer(&mut *out, &manifest.header)?;
    out.write_all(b"\n").map_err(|e| Error::io("<manifest>", e))?;
    for entry in &manifest.entries {
        serde_json::to_writer(&mut *out, entry)?;
        out.write_all(b"\n").map_err(|e| Error::io("<manifest>", e))?;
    }
    Ok(())
}

pub fn manifest_to_bytes(manifest: &SelectionManifest) -> Vec<u8> {
    let mut buf = Vec::new();
    write_manifest_to(manifest, &mut buf).expect("writing to a Vec cannot fail");
    buf
}

pub fn read_manifest(path: impl AsRef<Path>) -> Result<SelectionManifest> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_manifest(BufReader::new(file))
}

pub fn parse_manifest<R: BufRead>(reader: R) -> Result<SelectionManifest> {
    let mut lines = reader.lines();
    let header_line = lines
        .next()
        .ok_or(Error::EmptyInput)?
        .map_err(|e| Error::io("<manifest>", e))?;
    let header: ManifestHeader = serde_json::from_str(&header_line)?;
    let mut entries = Vec::new();
    for line in lines {
        let line = line.map_err(|e| Error::io("<manifest>", e))?;
        if line.is_empty() {
            continue;
        }
        entries.push(serde_json::from_str(&line)?);
    }
    Ok(SelectionManifest { header, entries })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn header(records: u64) -> ManifestHeader {
        ManifestHeader {
            config: SelectionConfig::default(),
            seed: 0,
            dim: 3,
            records,
            fingerprint: "0123456789abcdef".into(),
        }
    }

    #[test]
    fn empty_manifest_is_one_line() {
        let m = SelectionManifest {
            header: header(0),
            entries: vec![],
        };
        let bytes = manifest_to_bytes(&m);
        let text = String::from_utf8(bytes.clone()).unwrap();
        assert_eq!(text.lines().count(), 1);
        assert!(text.starts_with(r#"{"config":{"theta":0.7,"k":5,"n_min":200,"n1":200,"small_class_max":500,"seed":0},"seed":0,"dim":3,"records":0"#));
        assert_eq!(parse_manifest(bytes.as_slice()).unwrap(), m);
    }

    #[test]
    fn selected_entry_round_trip() {
        let entry = ManifestEntry {
            id: "img-7".into(),
            label: "Effusion".into(),
            status: Status::Selected,
            similarity: Some(0.912_345_678_901_234_5),
            bucket: Some(3),
        };
        let m = SelectionManifest {
            header: header(1),
            entries: vec![entry.clone()],
        };
        m.validate().unwrap();
        let bytes = manifest_to_bytes(&m);
        let text = String::from_utf8(bytes).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(
            lines[1],
            r#"{"id":"img-7","label":"Effusion","status":"SELECTED","similarity":0.9123456789012345,"bucket":3}"#
        );
        let back: ManifestEntry = serde_json::from_str(lines[1]).unwrap();
        assert_eq!(back, entry);
    }

    #[test]
    fn null_fields_serialize_as_null() {
        let entry = ManifestEntry {
            id: "a".into(),
            label: "covid".into(),
            status: Status::AllKeptSmallClass,
            similarity: None,
            bucket: None,
        };
        assert_eq!(
            serde_json::to_string(&entry).unwrap(),
            r#"{"id":"a","label":"covid","status":"ALL_KEPT_SMALL_CLASS","similarity":null,"bucket":null}"#
        );
    }

    #[test]
    fn validate_catches_broken_invariants() {
        let bad = SelectionManifest {
            header: header(1),
            entries: vec![ManifestEntry {
                id: "a".into(),
                label: "x".into(),
                status: Status::Selected,
                similarity: Some(0.1),
                bucket: Some(0),
            }],
        };
        assert!(bad.validate().is_err());
        let miscounted = SelectionManifest {
            header: header(5),
            entries: vec![],
        };
        assert!(miscounted.validate().is_err());
    }
}
