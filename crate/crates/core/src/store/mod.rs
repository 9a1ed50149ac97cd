//! Embedding datasets and their on-disk formats.

pub mod csv;
pub mod manifest;
mod record;
pub mod vped;

use std::fs::File;
use std::io::Read;
use std::path::Path;

pub use self::csv::{read_csv, write_csv};
pub use self::manifest::{
    read_manifest, write_manifest, ManifestEntry, ManifestHeader, SelectionManifest, Status,
};
pub use self::record::{Dataset, EmbeddingRecord};
pub use self::vped::{read_binary, write_binary};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Vped,
}

impl Format {
    /// VPED when the file starts with the magic or has a `.vped` extension,
    /// CSV otherwise.
    pub fn detect(path: &Path) -> Result<Format> {
        let mut head = [0u8; 4];
        let mut file = File::open(path).map_err(|e| Error::io(path, e))?;
        let n = file.read(&mut head).map_err(|e| Error::io(path, e))?;
        if vped::has_magic(&head[..n]) {
            return Ok(Format::Vped);
        }
        let by_ext = path
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("vped"));
        Ok(if by_ext { Format::Vped } else { Format::Csv })
    }
}

pub fn read_dataset(path: impl AsRef<Path>, format: Option<Format>) -> Result<Dataset> {
    let path = path.as_ref();
    let format = match format {
        Some(f) => f,
        None => Format::detect(path)?,
    };
    match format {
        Format::Csv => read_csv(path, None),
        Format::Vped => read_binary(path),
    }
}

pub fn write_dataset(dataset: &Dataset, path: impl AsRef<Path>, format: Format) -> Result<()> {
    match format {
        Format::Csv => write_csv(dataset, path),
        Format::Vped => write_binary(dataset, path),
    }
}
