//! Experiment orchestration: datasets, splits, holdout / cross-dataset
//! evaluation, and the ablation matrix.

mod dataset;
mod eval;
mod features;

pub use dataset::{dataset_from_manifest, import_external, load_dataset, save_dataset};
pub use eval::{
    eval_cross_dataset, eval_cross_dataset_detailed, eval_holdout, eval_holdout_detailed,
    run_ablation, train_pipeline, AblationToggle, BaseLearnerSpec, PipelineConfig,
    TrainedPipeline,
};
pub use features::{feature_matrix, FeatureConfig};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{fnv1a64, mix, Rng};

/// Where a dataset's labels came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Provenance {
    /// Distortion corpus with severity-derived labels.
    Generated,
    /// User-supplied images with rescaled MOS labels.
    External,
}

/// Feature source for one sample: an image file to be featurized, or an
/// already-extracted feature row.
#[derive(Debug, Clone, PartialEq)]
pub enum Source {
    Path(std::path::PathBuf),
    Features(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetEntry {
    pub id: String,
    pub source: Source,
    pub label: f64,
    /// Pseudo-label class for corpus-derived entries; feeds pre-training.
    pub class_index: Option<usize>,
}

/// A named dataset. Labels can be *sealed*: a sealed handle refuses label
/// access until the metric stage unseals it, which is how cross-dataset
/// evaluation proves it never trains on test labels.
#[derive(Debug, Clone)]
pub struct DatasetHandle {
    name: String,
    provenance: Provenance,
    entries: Vec<DatasetEntry>,
    sealed: bool,
}

impl DatasetHandle {
    pub fn new(
        name: impl Into<String>,
        provenance: Provenance,
        entries: Vec<DatasetEntry>,
    ) -> Result<Self> {
        let name = name.into();
        if entries.is_empty() {
            return Err(Error::DatasetTooSmall {
                name,
                got: 0,
                need: 1,
            });
        }
        for e in &entries {
            if !(0.0..=1.0).contains(&e.label) {
                return Err(Error::InvalidConfig(format!(
                    "label {} of entry `{}` outside [0, 1]",
                    e.label, e.id
                )));
            }
        }
        Ok(DatasetHandle {
            name,
            provenance,
            entries,
            sealed: false,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[DatasetEntry] {
        &self.entries
    }

    /// Marks the labels off-limits until [`unseal`](Self::unseal).
    pub fn seal(&mut self) {
        self.sealed = true;
    }

    pub fn unseal(&mut self) {
        self.sealed = false;
    }

    pub fn is_sealed(&self) -> bool {
        self.sealed
    }

    /// Label vector; errors while the handle is sealed.
    pub fn labels(&self) -> Result<Vec<f64>> {
        if self.sealed {
            return Err(Error::SealedLabels(self.name.clone()));
        }
        Ok(self.entries.iter().map(|e| e.label).collect())
    }

    /// Class indices for pre-training; `None` unless every entry has one.
    pub fn class_indices(&self) -> Option<Vec<usize>> {
        self.entries.iter().map(|e| e.class_index).collect()
    }

    /// Stable content hash covering ids, labels, and classes.
    pub fn content_hash(&self) -> u64 {
        let mut h = fnv1a64(self.name.as_bytes());
        for e in &self.entries {
            h = mix(&[
                h,
                fnv1a64(e.id.as_bytes()),
                e.label.to_bits(),
                e.class_index.map(|c| c as u64 + 1).unwrap_or(0),
            ]);
        }
        h
    }
}

/// Train-fraction and shuffle seed for a holdout split.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            train_fraction: 0.8,
            seed: 0,
        }
    }
}

/// Deterministic shuffle-and-cut: `round(n * fraction)` entries train, the
/// rest test. Partitions are disjoint and exhaustive.
pub fn split(ds: &DatasetHandle, spec: &SplitSpec) -> Result<(DatasetHandle, DatasetHandle)> {
    if !(spec.train_fraction > 0.0 && spec.train_fraction < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "train fraction {} outside (0, 1)",
            spec.train_fraction
        )));
    }
    let n = ds.len();
    if n < 5 {
        return Err(Error::DatasetTooSmall {
            name: ds.name.clone(),
            got: n,
            need: 5,
        });
    }
    let mut order: Vec<usize> = (0..n).collect();
    Rng::from_seed(mix(&[spec.seed, fnv1a64(ds.name.as_bytes())])).shuffle(&mut order);
    let n_train = ((n as f64 * spec.train_fraction).round() as usize).clamp(1, n - 1);
    let train_entries = order[..n_train]
        .iter()
        .map(|&i| ds.entries[i].clone())
        .collect();
    let test_entries = order[n_train..]
        .iter()
        .map(|&i| ds.entries[i].clone())
        .collect();
    Ok((
        DatasetHandle {
            name: format!("{}#train", ds.name),
            provenance: ds.provenance,
            entries: train_entries,
            sealed: ds.sealed,
        },
        DatasetHandle {
            name: format!("{}#test", ds.name),
            provenance: ds.provenance,
            entries: test_entries,
            sealed: ds.sealed,
        },
    ))
}

/// One evaluated sample: ground truth vs. meta-model prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualRow {
    pub id: String,
    pub y_true: f64,
    pub y_pred: f64,
}

/// Metrics plus per-image residuals and a config fingerprint.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalReport {
    pub dataset: String,
    pub plcc: f64,
    pub srocc: f64,
    pub rmse: f64,
    pub residuals: Vec<ResidualRow>,
    pub fingerprint: String,
    pub wall_secs: f64,
}

impl EvalReport {
    /// Summary CSV row (`dataset,plcc,srocc,rmse,fingerprint`).
    pub fn csv_header() -> &'static str {
        "dataset,plcc,srocc,rmse,fingerprint"
    }

    pub fn to_csv_row(&self) -> String {
        format!(
            "{},{},{},{},{}",
            self.dataset, self.plcc, self.srocc, self.rmse, self.fingerprint
        )
    }

    /// Per-image residual CSV (`id,y_true,y_pred,residual`).
    pub fn residuals_csv(&self) -> String {
        let mut out = String::from("id,y_true,y_pred,residual\n");
        for r in &self.residuals {
            out.push_str(&format!(
                "{},{},{},{}\n",
                r.id,
                r.y_true,
                r.y_pred,
                r.y_true - r.y_pred
            ));
        }
        out
    }

    /// Two-column text (true, predicted) for scatter plots.
    pub fn scatter_data(&self) -> String {
        let mut out = String::new();
        for r in &self.residuals {
            out.push_str(&format!("{} {}\n", r.y_true, r.y_pred));
        }
        out
    }

    /// RMSE recomputed from the stored residuals; must equal `self.rmse`.
    pub fn rmse_from_residuals(&self) -> f64 {
        let n = self.residuals.len() as f64;
        (self
            .residuals
            .iter()
            .map(|r| (r.y_true - r.y_pred) * (r.y_true - r.y_pred))
            .sum::<f64>()
            / n)
            .sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_dataset(n: usize) -> DatasetHandle {
        let entries = (0..n)
            .map(|i| DatasetEntry {
                id: format!("e{i}"),
                source: Source::Features(vec![i as f64 / n as f64; 4]),
                label: i as f64 / n as f64,
                class_index: Some(i % 3),
            })
            .collect();
        DatasetHandle::new("toy", Provenance::Generated, entries).unwrap()
    }

    #[test]
    fn split_cardinality_disjoint_exhaustive() {
        let ds = toy_dataset(10);
        let spec = SplitSpec {
            train_fraction: 0.8,
            seed: 4,
        };
        let (train, test) = split(&ds, &spec).unwrap();
        assert_eq!(train.len(), 8);
        assert_eq!(test.len(), 2);
        let mut ids: Vec<&str> = train
            .entries()
            .iter()
            .chain(test.entries())
            .map(|e| e.id.as_str())
            .collect();
        ids.sort_unstable();
        ids.dedup();
        assert_eq!(ids.len(), 10, "partitions overlap or drop entries");
    }

    #[test]
    fn split_deterministic() {
        let ds = toy_dataset(20);
        let spec = SplitSpec {
            train_fraction: 0.7,
            seed: 9,
        };
        let (a_train, a_test) = split(&ds, &spec).unwrap();
        let (b_train, b_test) = split(&ds, &spec).unwrap();
        assert_eq!(a_train.entries(), b_train.entries());
        assert_eq!(a_test.entries(), b_test.entries());
        let other = split(
            &ds,
            &SplitSpec {
                train_fraction: 0.7,
                seed: 10,
            },
        )
        .unwrap();
        assert_ne!(a_train.entries(), other.0.entries());
    }

    #[test]
    fn split_rejects_tiny_dataset() {
        let ds = toy_dataset(4);
        assert!(matches!(
            split(&ds, &SplitSpec::default()),
            Err(Error::DatasetTooSmall { .. })
        ));
    }

    #[test]
    fn sealed_labels_refuse_access() {
        let mut ds = toy_dataset(6);
        assert!(ds.labels().is_ok());
        ds.seal();
        assert!(matches!(ds.labels(), Err(Error::SealedLabels(_))));
        ds.unseal();
        assert!(ds.labels().is_ok());
    }

    #[test]
    fn report_rmse_consistency() {
        let report = EvalReport {
            dataset: "d".into(),
            plcc: 0.0,
            srocc: 0.0,
            rmse: (0.02f64 * 0.02 + 0.04 * 0.04).sqrt() / 2.0f64.sqrt(),
            residuals: vec![
                ResidualRow {
                    id: "a".into(),
                    y_true: 0.5,
                    y_pred: 0.52,
                },
                ResidualRow {
                    id: "b".into(),
                    y_true: 0.2,
                    y_pred: 0.16,
                },
            ],
            fingerprint: "0".into(),
            wall_secs: 0.0,
        };
        assert!((report.rmse_from_residuals() - report.rmse).abs() < 1e-12);
        let csv = report.residuals_csv();
        assert!(csv.starts_with("id,y_true,y_pred,residual\n"));
        assert_eq!(csv.lines().count(), 3);
    }

    #[test]
    fn content_hash_tracks_labels() {
        let a = toy_dataset(5);
        let mut entries = a.entries().to_vec();
        entries[2].label += 0.001;
        let b = DatasetHandle::new("toy", Provenance::Generated, entries).unwrap();
        assert_ne!(a.content_hash(), b.content_hash());
    }
}
