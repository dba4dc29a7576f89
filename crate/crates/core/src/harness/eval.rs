//! The end-to-end evaluation pipeline: featurize, optionally pre-train on
//! pseudo-labels, fine-tune several base regressors, combine them with the
//! stepwise meta-learner, and score on held-out data.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::features::feature_matrix;
use super::{DatasetHandle, EvalReport, FeatureConfig, ResidualRow, SplitSpec};
use crate::error::{Error, Result};
use crate::metalearner::{meta_predict, slr_fit, MetaModel, PredictionMatrix};
use crate::metrics::{plcc, rmse, srocc};
use crate::qaloss::LossConfig;
use crate::regressor::{
    finetune_regress, init_params, predict, pretrain_classify, transfer_to_regress, Head,
    ModelParams, TrainConfig, TrainReport,
};
use crate::rng::{fnv1a64, mix};

/// One base learner: hidden-layer widths plus a seed offset so learners
/// differ even on identical data.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BaseLearnerSpec {
    pub hidden: Vec<usize>,
    pub seed_offset: u64,
}

/// Everything the pipeline needs to run an experiment.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub feature: FeatureConfig,
    pub base_learners: Vec<BaseLearnerSpec>,
    /// Pre-train on (model, level) pseudo-labels when the dataset carries
    /// class indices.
    pub pretrain: bool,
    pub pretrain_train: TrainConfig,
    pub loss: LossConfig,
    pub train: TrainConfig,
    pub slr_threshold: f64,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        // Desk-scale training settings: the published schedule assumes many
        // optimizer steps per epoch, so small corpora get a hotter rate and
        // a later drop.
        let train = TrainConfig {
            initial_lr: 0.02,
            lr_drop_factor: 0.1,
            lr_drop_period: 40,
            max_epochs: 60,
            ..Default::default()
        };
        let pretrain_train = TrainConfig {
            max_epochs: 40,
            ..train
        };
        PipelineConfig {
            feature: FeatureConfig::default(),
            base_learners: vec![
                BaseLearnerSpec {
                    hidden: vec![48],
                    seed_offset: 1,
                },
                BaseLearnerSpec {
                    hidden: vec![32],
                    seed_offset: 2,
                },
                BaseLearnerSpec {
                    hidden: vec![16],
                    seed_offset: 3,
                },
                BaseLearnerSpec {
                    hidden: vec![4],
                    seed_offset: 4,
                },
            ],
            pretrain: true,
            pretrain_train,
            loss: LossConfig::default(),
            train,
            slr_threshold: crate::metalearner::DEFAULT_THRESHOLD,
            seed: 0,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.base_learners.is_empty() {
            return Err(Error::InvalidConfig("no base learners configured".into()));
        }
        self.loss.validate()?;
        self.train.validate()?;
        self.pretrain_train.validate()?;
        if !(self.slr_threshold > 0.0) {
            return Err(Error::InvalidConfig(
                "slr threshold must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Stable fingerprint over the full configuration plus dataset content.
    pub fn fingerprint(&self, datasets: &[&DatasetHandle]) -> String {
        let cfg_json = serde_json::to_string(self).expect("config serializes");
        let mut h = fnv1a64(cfg_json.as_bytes());
        for ds in datasets {
            h = mix(&[h, ds.content_hash()]);
        }
        format!("{h:016x}")
    }
}

/// The trained stack: base learners plus the fitted meta-model.
#[derive(Debug, Clone)]
pub struct TrainedPipeline {
    pub base: Vec<ModelParams>,
    pub base_reports: Vec<TrainReport>,
    /// `None` means uniform averaging (the NO_META ablation).
    pub meta: Option<MetaModel>,
}

impl TrainedPipeline {
    /// Final quality predictions for a feature matrix.
    pub fn predict_rows(&self, rows: &[Vec<f64>]) -> Result<Vec<f64>> {
        let per_learner: Vec<Vec<f64>> = self
            .base
            .iter()
            .map(|params| predict(params, rows))
            .collect::<Result<_>>()?;
        let n = rows.len();
        (0..n)
            .map(|i| {
                let sample: Vec<f64> = per_learner.iter().map(|col| col[i]).collect();
                match &self.meta {
                    Some(meta) => meta_predict(meta, &sample),
                    None => Ok(sample.iter().sum::<f64>() / sample.len() as f64),
                }
            })
            .collect()
    }
}

/// Trains the full stack on one (unsealed) training dataset.
pub fn train_pipeline(train: &DatasetHandle, cfg: &PipelineConfig) -> Result<TrainedPipeline> {
    train_pipeline_with(train, cfg, false, &[])
}

fn train_pipeline_with(
    train: &DatasetHandle,
    cfg: &PipelineConfig,
    no_meta: bool,
    dropped: &[usize],
) -> Result<TrainedPipeline> {
    cfg.validate()?;
    let features =
        feature_matrix(train, &cfg.feature, cfg.seed).map_err(|e| Error::stage("features", e))?;
    let labels = train
        .labels()
        .map_err(|e| Error::stage("features", e))?;

    let class_data: Option<Vec<(Vec<f64>, usize)>> = if cfg.pretrain {
        train.class_indices().map(|classes| {
            features
                .iter()
                .cloned()
                .zip(classes)
                .collect::<Vec<_>>()
        })
    } else {
        None
    };
    let regress_data: Vec<(Vec<f64>, f64)> =
        features.iter().cloned().zip(labels.iter().cloned()).collect();
    let feature_dim = features.first().map(|f| f.len()).unwrap_or(0);

    let mut base = Vec::with_capacity(cfg.base_learners.len());
    let mut base_reports = Vec::with_capacity(cfg.base_learners.len());
    for (i, spec) in cfg.base_learners.iter().enumerate() {
        let learner_seed = mix(&[cfg.seed, spec.seed_offset, i as u64]);
        let mut sizes = vec![feature_dim];
        sizes.extend_from_slice(&spec.hidden);

        let init = match &class_data {
            Some(data) => {
                let cls = init_params(
                    &sizes,
                    Head::Classify(crate::distortion::CLASS_COUNT),
                    learner_seed,
                )
                .map_err(|e| Error::stage("pretrain", e))?;
                let pre_cfg = TrainConfig {
                    seed: mix(&[learner_seed, 0x5052_45]),
                    ..cfg.pretrain_train
                };
                let (trained, _) = pretrain_classify(&cls, data, &pre_cfg)
                    .map_err(|e| Error::stage("pretrain", e))?;
                transfer_to_regress(&trained, mix(&[learner_seed, 0x5846_45]))
            }
            None => init_params(&sizes, Head::Regress, learner_seed)
                .map_err(|e| Error::stage("init", e))?,
        };

        let tune_cfg = TrainConfig {
            seed: mix(&[learner_seed, 0x4655_4c4c]),
            ..cfg.train
        };
        let (trained, report) = finetune_regress(&init, &regress_data, &cfg.loss, &tune_cfg)
            .map_err(|e| Error::stage("finetune", e))?;
        base.push(trained);
        base_reports.push(report);
    }

    let meta = if no_meta {
        None
    } else {
        let kept: Vec<usize> = (0..base.len()).filter(|i| !dropped.contains(i)).collect();
        let columns: Vec<Vec<f64>> = kept
            .iter()
            .map(|&i| predict(&base[i], &features))
            .collect::<Result<_>>()
            .map_err(|e| Error::stage("meta-fit", e))?;
        let matrix = PredictionMatrix::new(columns, labels)
            .map_err(|e| Error::stage("meta-fit", e))?;
        let mut meta =
            slr_fit(&matrix, cfg.slr_threshold).map_err(|e| Error::stage("meta-fit", e))?;
        // Re-map term indices from the kept-column space back to learner
        // serials so prediction can index the full base list.
        for term in &mut meta.terms {
            term.index = kept[term.index];
        }
        Some(meta)
    };

    Ok(TrainedPipeline {
        base,
        base_reports,
        meta,
    })
}

fn score(
    pipeline: &TrainedPipeline,
    test: &mut DatasetHandle,
    cfg: &PipelineConfig,
    dataset_desc: String,
    fingerprint: String,
    started: Instant,
) -> Result<EvalReport> {
    let rows = feature_matrix(test, &cfg.feature, cfg.seed)
        .map_err(|e| Error::stage("features", e))?;
    let preds = pipeline
        .predict_rows(&rows)
        .map_err(|e| Error::stage("predict", e))?;
    // Metric stage: only now are the test labels read.
    test.unseal();
    let truth = test.labels()?;
    let report = EvalReport {
        dataset: dataset_desc,
        plcc: plcc(&truth, &preds).map_err(|e| Error::stage("metrics", e))?,
        srocc: srocc(&truth, &preds).map_err(|e| Error::stage("metrics", e))?,
        rmse: rmse(&truth, &preds).map_err(|e| Error::stage("metrics", e))?,
        residuals: test
            .entries()
            .iter()
            .zip(truth.iter().zip(&preds))
            .map(|(e, (&y_true, &y_pred))| ResidualRow {
                id: e.id.clone(),
                y_true,
                y_pred,
            })
            .collect(),
        fingerprint,
        wall_secs: started.elapsed().as_secs_f64(),
    };
    Ok(report)
}

/// Holdout evaluation: train the stack on `train`, report on `test`.
pub fn eval_holdout(
    train: &DatasetHandle,
    test: &DatasetHandle,
    cfg: &PipelineConfig,
) -> Result<EvalReport> {
    eval_holdout_detailed(train, test, cfg).map(|(report, _)| report)
}

/// [`eval_holdout`] that also hands back the trained stack (for model
/// export and training-curve plots).
pub fn eval_holdout_detailed(
    train: &DatasetHandle,
    test: &DatasetHandle,
    cfg: &PipelineConfig,
) -> Result<(EvalReport, TrainedPipeline)> {
    let started = Instant::now();
    let fingerprint = cfg.fingerprint(&[train, test]);
    let pipeline = train_pipeline(train, cfg)?;
    let desc = format!("{}->{}", train.name(), test.name());
    let mut test = test.clone();
    let report = score(&pipeline, &mut test, cfg, desc, fingerprint, started)?;
    Ok((report, pipeline))
}

/// Cross-dataset evaluation: train on 100% of one dataset, test on 100% of
/// another. The test labels are sealed during every training stage.
pub fn eval_cross_dataset(
    train: &DatasetHandle,
    test: &DatasetHandle,
    cfg: &PipelineConfig,
) -> Result<EvalReport> {
    eval_cross_dataset_detailed(train, test, cfg).map(|(report, _)| report)
}

/// [`eval_cross_dataset`] that also hands back the trained stack.
pub fn eval_cross_dataset_detailed(
    train: &DatasetHandle,
    test: &DatasetHandle,
    cfg: &PipelineConfig,
) -> Result<(EvalReport, TrainedPipeline)> {
    if train.name() == test.name() {
        return Err(Error::DatasetNameClash(train.name().to_string()));
    }
    let started = Instant::now();
    let fingerprint = cfg.fingerprint(&[train, test]);
    let desc = format!("{}=>{}", train.name(), test.name());
    let mut sealed_test = test.clone();
    sealed_test.seal();
    let pipeline = train_pipeline(train, cfg)?;
    let report = score(&pipeline, &mut sealed_test, cfg, desc, fingerprint, started)?;
    Ok((report, pipeline))
}

/// Pipeline variations measured by the ablation harness.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AblationToggle {
    /// Replace the meta-learner with uniform averaging.
    NoMeta,
    /// Drop the rank term from the loss (lambda2 = 0).
    MseOnlyLoss,
    /// Skip pseudo-label pre-training (random initialization).
    NoPretrain,
    /// Exclude base predictor `i` before the meta-fit.
    DropBase(usize),
}

impl AblationToggle {
    pub fn parse(text: &str) -> Result<Self> {
        let t = text.trim().to_ascii_uppercase();
        if t == "NO_META" {
            Ok(AblationToggle::NoMeta)
        } else if t == "MSE_ONLY_LOSS" {
            Ok(AblationToggle::MseOnlyLoss)
        } else if t == "NO_PRETRAIN" {
            Ok(AblationToggle::NoPretrain)
        } else if let Some(rest) = t.strip_prefix("DROP_BASE:") {
            rest.parse::<usize>()
                .map(AblationToggle::DropBase)
                .map_err(|_| Error::UnknownToggle(text.to_string()))
        } else {
            Err(Error::UnknownToggle(text.to_string()))
        }
    }

    pub fn label(&self) -> String {
        match self {
            AblationToggle::NoMeta => "NO_META".into(),
            AblationToggle::MseOnlyLoss => "MSE_ONLY_LOSS".into(),
            AblationToggle::NoPretrain => "NO_PRETRAIN".into(),
            AblationToggle::DropBase(i) => format!("DROP_BASE:{i}"),
        }
    }
}

/// Runs the baseline plus one report per toggle on a shared split of `ds`.
/// Returns (label, report) pairs with the baseline first.
pub fn run_ablation(
    ds: &DatasetHandle,
    split_spec: &SplitSpec,
    cfg: &PipelineConfig,
    toggles: &[AblationToggle],
) -> Result<Vec<(String, EvalReport)>> {
    for toggle in toggles {
        if let AblationToggle::DropBase(i) = toggle {
            if *i >= cfg.base_learners.len() {
                return Err(Error::UnknownToggle(format!(
                    "DROP_BASE:{i} with only {} base learners",
                    cfg.base_learners.len()
                )));
            }
        }
    }
    let (train, test) = super::split(ds, split_spec)?;
    let mut out = Vec::with_capacity(toggles.len() + 1);
    out.push((
        "baseline".to_string(),
        eval_holdout(&train, &test, cfg)?,
    ));
    for toggle in toggles {
        let report = match toggle {
            AblationToggle::NoMeta => {
                let started = Instant::now();
                let fingerprint =
                    format!("{}-nometa", cfg.fingerprint(&[&train, &test]));
                let pipeline = train_pipeline_with(&train, cfg, true, &[])?;
                let desc = format!("{}->{}", train.name(), test.name());
                let mut test = test.clone();
                score(&pipeline, &mut test, cfg, desc, fingerprint, started)?
            }
            AblationToggle::MseOnlyLoss => {
                let mut ablated = cfg.clone();
                ablated.loss = LossConfig {
                    lambda2: 0.0,
                    ..cfg.loss
                };
                eval_holdout(&train, &test, &ablated)?
            }
            AblationToggle::NoPretrain => {
                let mut ablated = cfg.clone();
                ablated.pretrain = false;
                eval_holdout(&train, &test, &ablated)?
            }
            AblationToggle::DropBase(i) => {
                let started = Instant::now();
                let fingerprint =
                    format!("{}-drop{}", cfg.fingerprint(&[&train, &test]), i);
                let pipeline = train_pipeline_with(&train, cfg, false, &[*i])?;
                let desc = format!("{}->{}", train.name(), test.name());
                let mut test = test.clone();
                score(&pipeline, &mut test, cfg, desc, fingerprint, started)?
            }
        };
        out.push((toggle.label(), report));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{split, DatasetEntry, Provenance, Source};

    /// Synthetic feature-backed dataset with a planted monotone law:
    /// label = 1 - level/5 (+ jitter), features carry the level signal.
    pub(crate) fn planted_dataset(name: &str, n: usize, seed: u64) -> DatasetHandle {
        let mut rng = crate::rng::Rng::from_seed(seed);
        let entries = (0..n)
            .map(|i| {
                let level = (i % 5) as u8 + 1;
                let label = (1.0 - level as f64 / 5.0 + rng.range_f64(-0.02, 0.02))
                    .clamp(0.0, 1.0);
                let mut features: Vec<f64> =
                    (0..12).map(|_| rng.range_f64(0.0, 0.25)).collect();
                features[1] += level as f64 / 5.0 * 0.7;
                features[5] += (1.0 - level as f64 / 6.0) * 0.4;
                features[9] += (level as f64 / 5.0).powi(2) * 0.5;
                DatasetEntry {
                    id: format!("{name}-{i}"),
                    source: Source::Features(features),
                    label,
                    class_index: Some((level - 1) as usize),
                }
            })
            .collect();
        DatasetHandle::new(name, Provenance::Generated, entries).unwrap()
    }

    fn quick_cfg(seed: u64) -> PipelineConfig {
        PipelineConfig {
            base_learners: vec![
                BaseLearnerSpec {
                    hidden: vec![10],
                    seed_offset: 1,
                },
                BaseLearnerSpec {
                    hidden: vec![6],
                    seed_offset: 2,
                },
                BaseLearnerSpec {
                    hidden: vec![3],
                    seed_offset: 3,
                },
            ],
            train: TrainConfig {
                max_epochs: 30,
                initial_lr: 0.03,
                lr_drop_factor: 0.1,
                lr_drop_period: 25,
                ..Default::default()
            },
            pretrain_train: TrainConfig {
                max_epochs: 20,
                initial_lr: 0.02,
                lr_drop_factor: 0.1,
                lr_drop_period: 25,
                ..Default::default()
            },
            seed,
            ..Default::default()
        }
    }

    #[test]
    fn holdout_on_planted_data_reaches_high_srocc() {
        let ds = planted_dataset("planted", 150, 11);
        let (train, test) = split(&ds, &SplitSpec::default()).unwrap();
        let report = eval_holdout(&train, &test, &quick_cfg(1)).unwrap();
        assert!(report.srocc >= 0.9, "SROCC {}", report.srocc);
        assert!((report.rmse_from_residuals() - report.rmse).abs() < 1e-12);
        assert_eq!(report.residuals.len(), test.len());
    }

    #[test]
    fn train_set_plcc_at_least_test_plcc_in_median() {
        let mut gaps = Vec::new();
        for seed in 0..5u64 {
            let ds = planted_dataset("gap", 120, 40 + seed);
            let (train, test) = split(
                &ds,
                &SplitSpec {
                    train_fraction: 0.8,
                    seed,
                },
            )
            .unwrap();
            let cfg = quick_cfg(seed);
            let pipeline = train_pipeline(&train, &cfg).unwrap();
            let train_rows = feature_matrix(&train, &cfg.feature, cfg.seed).unwrap();
            let test_rows = feature_matrix(&test, &cfg.feature, cfg.seed).unwrap();
            let train_preds = pipeline.predict_rows(&train_rows).unwrap();
            let test_preds = pipeline.predict_rows(&test_rows).unwrap();
            let train_plcc = plcc(&train.labels().unwrap(), &train_preds).unwrap();
            let test_plcc = plcc(&test.labels().unwrap(), &test_preds).unwrap();
            gaps.push(train_plcc - test_plcc);
        }
        gaps.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!(gaps[2] >= 0.0, "median generalization gap {gaps:?}");
    }

    #[test]
    fn cross_dataset_seals_labels_and_requires_distinct_names() {
        let a = planted_dataset("corpus-a", 100, 1);
        let b = planted_dataset("corpus-b", 80, 2);
        let report = eval_cross_dataset(&a, &b, &quick_cfg(3)).unwrap();
        assert!(report.srocc >= 0.8, "cross SROCC {}", report.srocc);
        assert!(report.dataset.contains("corpus-a=>corpus-b"));

        let swapped = eval_cross_dataset(&b, &a, &quick_cfg(3)).unwrap();
        assert_ne!(report.fingerprint, swapped.fingerprint);

        let clash = eval_cross_dataset(&a, &a, &quick_cfg(3));
        assert!(matches!(clash, Err(Error::DatasetNameClash(_))));
    }

    #[test]
    fn sealed_training_set_is_rejected_before_label_use() {
        let mut ds = planted_dataset("sealed", 60, 3);
        ds.seal();
        match train_pipeline(&ds, &quick_cfg(0)) {
            Err(Error::Stage { stage, source }) => {
                assert_eq!(stage, "features");
                assert!(matches!(*source, Error::SealedLabels(_)));
            }
            other => panic!("expected sealed-label failure, got {other:?}"),
        }
    }

    #[test]
    fn identical_fingerprints_mean_identical_reports() {
        let ds = planted_dataset("fp", 90, 5);
        let (train, test) = split(&ds, &SplitSpec::default()).unwrap();
        let cfg = quick_cfg(9);
        let a = eval_holdout(&train, &test, &cfg).unwrap();
        let b = eval_holdout(&train, &test, &cfg).unwrap();
        assert_eq!(a.fingerprint, b.fingerprint);
        assert_eq!(a.residuals, b.residuals);
        assert_eq!((a.plcc, a.srocc, a.rmse), (b.plcc, b.srocc, b.rmse));

        let other = eval_holdout(&train, &test, &quick_cfg(10)).unwrap();
        assert_ne!(a.fingerprint, other.fingerprint);
    }

    #[test]
    fn ablation_matrix_runs_all_toggles() {
        let ds = planted_dataset("ablate", 110, 21);
        let cfg = quick_cfg(2);
        let toggles = vec![
            AblationToggle::NoMeta,
            AblationToggle::MseOnlyLoss,
            AblationToggle::NoPretrain,
            AblationToggle::DropBase(1),
        ];
        let reports = run_ablation(&ds, &SplitSpec::default(), &cfg, &toggles).unwrap();
        assert_eq!(reports.len(), 5);
        assert_eq!(reports[0].0, "baseline");
        assert_eq!(reports[3].0, "NO_PRETRAIN");
        for (_, r) in &reports {
            assert!(r.srocc.is_finite());
        }

        let empty = run_ablation(&ds, &SplitSpec::default(), &cfg, &[]).unwrap();
        assert_eq!(empty.len(), 1);

        assert!(matches!(
            AblationToggle::parse("NO_SUCH"),
            Err(Error::UnknownToggle(_))
        ));
        assert_eq!(
            AblationToggle::parse("drop_base:2").unwrap(),
            AblationToggle::DropBase(2)
        );
        assert!(matches!(
            run_ablation(
                &ds,
                &SplitSpec::default(),
                &cfg,
                &[AblationToggle::DropBase(9)]
            ),
            Err(Error::UnknownToggle(_))
        ));
    }

    /// Dataset whose level signal needs at least two hidden units to
    /// decode: a gating flag selects whether the carrier feature holds the
    /// level or its complement. A width-1 learner underfits it, giving the
    /// meta-learner an unreliable column to exclude while uniform averaging
    /// keeps it.
    fn gated_dataset(name: &str, n: usize, seed: u64) -> DatasetHandle {
        let mut rng = crate::rng::Rng::from_seed(seed);
        let entries = (0..n)
            .map(|i| {
                let level = (i % 5) as u8 + 1;
                let t = (level - 1) as f64 / 4.0;
                let gate = rng.next_f64() < 0.5;
                let label = (1.0 - level as f64 / 5.0 + rng.range_f64(-0.02, 0.02))
                    .clamp(0.0, 1.0);
                let mut features: Vec<f64> =
                    (0..10).map(|_| rng.range_f64(0.0, 0.15)).collect();
                features[0] = if gate { 1.0 } else { 0.0 };
                features[1] = (if gate { t } else { 1.0 - t }) + rng.range_f64(-0.02, 0.02);
                DatasetEntry {
                    id: format!("{name}-{i}"),
                    source: Source::Features(features),
                    label,
                    class_index: Some((level - 1) as usize),
                }
            })
            .collect();
        DatasetHandle::new(name, Provenance::Generated, entries).unwrap()
    }

    #[test]
    fn baseline_beats_no_meta_in_median_over_seeds() {
        let mut pairs = Vec::new();
        for seed in 0..5u64 {
            let ds = gated_dataset("meta-vs-avg", 200, 60 + seed);
            let mut cfg = quick_cfg(seed);
            cfg.base_learners = vec![
                BaseLearnerSpec { hidden: vec![12], seed_offset: 1 },
                BaseLearnerSpec { hidden: vec![8], seed_offset: 2 },
                BaseLearnerSpec { hidden: vec![6], seed_offset: 3 },
                BaseLearnerSpec { hidden: vec![1], seed_offset: 4 },
            ];
            let reports = run_ablation(
                &ds,
                &SplitSpec {
                    train_fraction: 0.8,
                    seed,
                },
                &cfg,
                &[AblationToggle::NoMeta],
            )
            .unwrap();
            pairs.push((reports[0].1.srocc, reports[1].1.srocc));
        }
        let mut base: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let mut avg: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        base.sort_by(|a, b| a.partial_cmp(b).unwrap());
        avg.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!(
            base[2] > avg[2],
            "median baseline {} vs no-meta {} ({pairs:?})",
            base[2],
            avg[2]
        );
    }

    #[test]
    fn mse_only_toggle_records_zero_lambda2() {
        let cfg = quick_cfg(0);
        let mut ablated = cfg.clone();
        ablated.loss = LossConfig {
            lambda2: 0.0,
            ..cfg.loss
        };
        assert_eq!(ablated.loss.lambda2, 0.0);
        assert_eq!(ablated.loss.lambda1, cfg.loss.lambda1);
    }
}
