//! Reproducible distorted-corpus generation.
//!
//! Each (pristine image, model, level) triple produces one distorted PNG and
//! one manifest line. The per-item seed is a hash of the run seed, the
//! source file name, and the (model, level) pair, so the corpus content is
//! independent of generation order and worker count: rerunning with the same
//! seed reproduces every byte.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::{apply_distortion, pseudo_label, DistortionSpec, SeveritySchedule};
use crate::error::{Error, Result};
use crate::image::{load_image, save_image};
use crate::rng::mix_str;

/// One line of the corpus manifest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub source: String,
    pub output: String,
    pub model: u8,
    pub level: u8,
    pub label: String,
    pub class_index: usize,
    pub seed: u64,
}

/// Generates the corpus for every (source, model, level) triple and writes
/// `manifest.jsonl` into `out_dir`. Returns the manifest entries sorted by
/// (source, model, level). `threads` >= 1 controls the fan-out; results are
/// identical for any thread count.
pub fn generate_corpus(
    pristine_dir: impl AsRef<Path>,
    out_dir: impl AsRef<Path>,
    models: &[u8],
    levels: &[u8],
    seed: u64,
    schedule: &SeveritySchedule,
    threads: usize,
) -> Result<Vec<ManifestEntry>> {
    let pristine_dir = pristine_dir.as_ref();
    let out_dir = out_dir.as_ref();
    schedule.validate()?;
    if models.is_empty() || levels.is_empty() {
        return Err(Error::InvalidConfig(
            "model and level subsets must be non-empty".into(),
        ));
    }
    for &m in models {
        DistortionSpec::new(m, 1, 0)?;
    }
    for &l in levels {
        DistortionSpec::new(1, l, 0)?;
    }

    let sources = list_images(pristine_dir)?;
    if sources.is_empty() {
        return Err(Error::EmptyInputDir(pristine_dir.to_path_buf()));
    }
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;

    let threads = threads.max(1);
    let entries = Mutex::new(Vec::new());
    let failure = Mutex::new(None::<Error>);
    let next = std::sync::atomic::AtomicUsize::new(0);

    std::thread::scope(|scope| {
        for _ in 0..threads.min(sources.len()) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                if i >= sources.len() || failure.lock().unwrap().is_some() {
                    return;
                }
                match distort_one_source(&sources[i], out_dir, models, levels, seed, schedule) {
                    Ok(mut batch) => entries.lock().unwrap().append(&mut batch),
                    Err(e) => {
                        let mut slot = failure.lock().unwrap();
                        if slot.is_none() {
                            *slot = Some(e);
                        }
                        return;
                    }
                }
            });
        }
    });

    if let Some(e) = failure.into_inner().unwrap() {
        return Err(e);
    }
    let mut entries = entries.into_inner().unwrap();
    entries.sort_by(|a, b| {
        (&a.source, a.model, a.level).cmp(&(&b.source, b.model, b.level))
    });

    let manifest_path = out_dir.join("manifest.jsonl");
    let mut buf = Vec::new();
    for entry in &entries {
        serde_json::to_writer(&mut buf, entry).expect("manifest entry serializes");
        buf.push(b'\n');
    }
    let mut file = fs::File::create(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
    file.write_all(&buf)
        .map_err(|e| Error::io(&manifest_path, e))?;
    Ok(entries)
}

fn distort_one_source(
    source: &Path,
    out_dir: &Path,
    models: &[u8],
    levels: &[u8],
    seed: u64,
    schedule: &SeveritySchedule,
) -> Result<Vec<ManifestEntry>> {
    let img = load_image(source)?;
    let file_name = source
        .file_name()
        .and_then(|n| n.to_str())
        .unwrap_or("unnamed")
        .to_string();
    let stem = source
        .file_stem()
        .and_then(|n| n.to_str())
        .unwrap_or("unnamed");
    let mut out = Vec::with_capacity(models.len() * levels.len());
    for &model in models {
        for &level in levels {
            let item_seed = mix_str(seed, &file_name, &[model as u64, level as u64]);
            let spec = DistortionSpec::new(model, level, item_seed)?;
            let distorted = apply_distortion(&img, &spec, schedule)?;
            let out_name = format!("{stem}_{model:02}-{level}.png");
            let out_path = out_dir.join(&out_name);
            save_image(&distorted, &out_path)?;
            let label = pseudo_label(&spec)?;
            out.push(ManifestEntry {
                source: file_name.clone(),
                output: out_name,
                model,
                level,
                label: label.text,
                class_index: label.class_index,
                seed: item_seed,
            });
        }
    }
    Ok(out)
}

/// Parses a manifest written by [`generate_corpus`].
pub fn read_manifest(path: impl AsRef<Path>) -> Result<Vec<ManifestEntry>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut entries = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let entry: ManifestEntry = serde_json::from_str(line).map_err(|e| Error::BadRecord {
            path: path.to_path_buf(),
            row: i + 1,
            reason: e.to_string(),
        })?;
        entries.push(entry);
    }
    Ok(entries)
}

fn list_images(dir: &Path) -> Result<Vec<PathBuf>> {
    let read = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut paths: Vec<PathBuf> = read
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| {
            matches!(
                p.extension().and_then(|e| e.to_str()).map(|e| e.to_ascii_lowercase()),
                Some(ref ext) if ext == "png" || ext == "ppm"
            )
        })
        .collect();
    paths.sort();
    Ok(paths)
}
