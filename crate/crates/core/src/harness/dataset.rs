//! Dataset construction and persistence.
//!
//! Two ways in: a distortion-corpus manifest (labels derived from severity
//! level, class indices retained for pre-training) or an external MOS file
//! (two-column CSV rescaled to [0, 1]). Either can be saved as a dataset
//! JSON document and reloaded.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{DatasetEntry, DatasetHandle, Provenance, Source};
use crate::distortion::read_manifest;
use crate::error::{Error, Result};
use crate::metrics::{scale_mos, MosRecord};
use crate::rng::{mix_str, Rng};

/// Severity level to quality label: level 1 -> 0.8, level 5 -> 0.0.
pub fn level_label(level: u8) -> f64 {
    1.0 - level as f64 / 5.0
}

/// Builds a GENERATED dataset from a corpus manifest. Labels follow the
/// planted law `1 - level/5` plus optional uniform jitter of amplitude
/// `jitter` (seeded per entry), clamped back into [0, 1].
pub fn dataset_from_manifest(
    manifest_path: impl AsRef<Path>,
    name: impl Into<String>,
    jitter: f64,
    seed: u64,
) -> Result<DatasetHandle> {
    let manifest_path = manifest_path.as_ref();
    let corpus_dir = manifest_path.parent().unwrap_or(Path::new("."));
    let entries = read_manifest(manifest_path)?;
    if entries.is_empty() {
        return Err(Error::EmptyInputDir(manifest_path.to_path_buf()));
    }
    let dataset_entries = entries
        .iter()
        .map(|m| {
            let mut label = level_label(m.level);
            if jitter > 0.0 {
                let mut rng = Rng::from_seed(mix_str(seed, &m.output, &[0x4a49_5454]));
                label = (label + rng.range_f64(-jitter, jitter)).clamp(0.0, 1.0);
            }
            DatasetEntry {
                id: m.output.clone(),
                source: Source::Path(corpus_dir.join(&m.output)),
                label,
                class_index: Some(m.class_index),
            }
        })
        .collect();
    DatasetHandle::new(name, Provenance::Generated, dataset_entries)
}

/// Imports an EXTERNAL dataset: a CSV with a header row and (filename, mos)
/// columns, plus the MOS scale bounds. Every referenced image must exist.
pub fn import_external(
    mos_file: impl AsRef<Path>,
    image_dir: impl AsRef<Path>,
    mos_min: f64,
    mos_max: f64,
    name: impl Into<String>,
) -> Result<DatasetHandle> {
    let mos_file = mos_file.as_ref();
    let image_dir = image_dir.as_ref();
    if !(mos_min < mos_max) {
        return Err(Error::InvalidConfig(format!(
            "MOS range [{mos_min}, {mos_max}] is empty"
        )));
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(mos_file)
        .map_err(|e| Error::decode(mos_file, e.to_string()))?;
    let mut entries = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 2; // 1-based, after the header
        let record = record.map_err(|e| Error::BadRecord {
            path: mos_file.to_path_buf(),
            row,
            reason: e.to_string(),
        })?;
        if record.len() < 2 {
            return Err(Error::BadRecord {
                path: mos_file.to_path_buf(),
                row,
                reason: "expected two columns (filename, mos)".into(),
            });
        }
        let filename = record[0].to_string();
        let mos: f64 = record[1].parse().map_err(|_| Error::BadRecord {
            path: mos_file.to_path_buf(),
            row,
            reason: format!("bad MOS value `{}`", &record[1]),
        })?;
        let image_path = image_dir.join(&filename);
        if !image_path.is_file() {
            return Err(Error::BadRecord {
                path: mos_file.to_path_buf(),
                row,
                reason: format!("image `{}` not found", image_path.display()),
            });
        }
        let label = scale_mos(&MosRecord {
            mos,
            mos_min,
            mos_max,
        })
        .map_err(|e| Error::BadRecord {
            path: mos_file.to_path_buf(),
            row,
            reason: e.to_string(),
        })?;
        entries.push(DatasetEntry {
            id: filename,
            source: Source::Path(image_path),
            label,
            class_index: None,
        });
    }
    if entries.is_empty() {
        return Err(Error::EmptyInputDir(mos_file.to_path_buf()));
    }
    DatasetHandle::new(name, Provenance::External, entries)
}

#[derive(Debug, Serialize, Deserialize)]
struct DatasetFile {
    name: String,
    provenance: Provenance,
    entries: Vec<DatasetFileEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
struct DatasetFileEntry {
    source: String,
    label: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    class_index: Option<usize>,
}

/// Writes a dataset (image-backed entries only) as a JSON document.
pub fn save_dataset(ds: &DatasetHandle, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = DatasetFile {
        name: ds.name().to_string(),
        provenance: ds.provenance(),
        entries: ds
            .entries()
            .iter()
            .map(|e| match &e.source {
                Source::Path(p) => Ok(DatasetFileEntry {
                    source: p.to_string_lossy().into_owned(),
                    label: e.label,
                    class_index: e.class_index,
                }),
                Source::Features(_) => Err(Error::InvalidConfig(
                    "in-memory feature datasets cannot be saved".into(),
                )),
            })
            .collect::<Result<Vec<_>>>()?,
    };
    let text = serde_json::to_string_pretty(&file).expect("dataset serializes");
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Loads a dataset JSON document written by [`save_dataset`].
pub fn load_dataset(path: impl AsRef<Path>) -> Result<DatasetHandle> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let file: DatasetFile = serde_json::from_str(&text)
        .map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))?;
    let entries = file
        .entries
        .into_iter()
        .map(|e| DatasetEntry {
            id: e.source.clone(),
            source: Source::Path(e.source.into()),
            label: e.label,
            class_index: e.class_index,
        })
        .collect();
    DatasetHandle::new(file.name, file.provenance, entries)
}
