//! Acceptance suite: one test per release criterion, each printing a
//! PASS/FAIL line (run with `--nocapture` to see them). Tolerances and
//! runtime budgets are pinned in the asserts.

use std::time::Instant;

use iqa_core::distortion::{
    apply_distortion, generate_corpus, DistortionSpec, SeveritySchedule,
};
use iqa_core::harness::{
    dataset_from_manifest, feature_matrix, run_ablation, AblationToggle, BaseLearnerSpec,
    FeatureConfig, PipelineConfig, SplitSpec,
};
use iqa_core::metalearner::{meta_predict, slr_fit, MetaModel, MetaTerm, PredictionMatrix};
use iqa_core::metrics::{plcc, srocc};
use iqa_core::qaloss::{grid_search, qa_loss, LossConfig, MseMode, LAMBDA_GRID};
use iqa_core::regressor::{
    finetune_regress, init_params, pretrain_classify, transfer_to_regress, Head, TrainConfig,
};
use iqa_core::rng::Rng;
use iqa_core::synth::write_synth_corpus;

fn pass(criterion: u32, detail: &str) {
    println!("ACCEPTANCE {criterion}: PASS - {detail}");
}

/// Criterion 1: analytic QA-loss gradients match central finite differences
/// (h = 1e-5) with relative error <= 1e-4 over 200 random instances at batch
/// sizes 4/16/64, in under 10 seconds.
#[test]
fn criterion_1_gradient_fidelity() {
    let started = Instant::now();
    let mut rng = Rng::from_seed(0xACC1);
    let h = 1e-5;
    let mut worst_rel: f64 = 0.0;
    let mut checked = 0usize;
    for case in 0..200 {
        let n = [4usize, 16, 64][case % 3];
        let t: Vec<f64> = (0..n).map(|_| rng.next_f64()).collect();
        let p: Vec<f64> = (0..n).map(|_| rng.next_f64()).collect();
        let cfg = LossConfig {
            lambda1: rng.range_f64(0.1, 1.0),
            lambda2: rng.range_f64(0.1, 1.0),
            temperature: rng.range_f64(0.5, 2.0),
            mse_mode: MseMode::Mean,
        };
        let out = qa_loss(&t, &p, &cfg).unwrap();
        for i in 0..n {
            let mut plus = p.clone();
            let mut minus = p.clone();
            plus[i] += h;
            minus[i] -= h;
            let fd = (qa_loss(&t, &plus, &cfg).unwrap().value
                - qa_loss(&t, &minus, &cfg).unwrap().value)
                / (2.0 * h);
            let an = out.grad[i];
            if an.abs() < 1e-8 {
                assert!(
                    (an - fd).abs() <= 1e-6,
                    "case {case} entry {i}: absolute {an} vs {fd}"
                );
            } else {
                let rel = ((an - fd) / an).abs();
                worst_rel = worst_rel.max(rel);
                assert!(rel <= 1e-4, "case {case} entry {i}: {an} vs {fd} rel {rel}");
            }
            checked += 1;
        }
    }
    let secs = started.elapsed().as_secs_f64();
    assert!(secs < 10.0, "gradient check took {secs:.1}s");
    pass(
        1,
        &format!("{checked} gradient entries, worst relative error {worst_rel:.2e}, {secs:.1}s"),
    );
}

/// Criterion 2: PLCC/SROCC match definition-level oracles (expanded
/// covariance formula; pairwise-counting average ranks) to 1e-10 on 1000
/// random vectors of lengths 2..=200 including tied inputs, in under 5 s.
#[test]
fn criterion_2_metric_oracles() {
    fn pearson_oracle(x: &[f64], y: &[f64]) -> f64 {
        let n = x.len() as f64;
        let sx: f64 = x.iter().sum();
        let sy: f64 = y.iter().sum();
        let sxx: f64 = x.iter().map(|a| a * a).sum();
        let syy: f64 = y.iter().map(|a| a * a).sum();
        let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
        (sxy - sx * sy / n) / ((sxx - sx * sx / n) * (syy - sy * sy / n)).sqrt()
    }
    fn counting_ranks(xs: &[f64]) -> Vec<f64> {
        xs.iter()
            .map(|&v| {
                let below = xs.iter().filter(|&&o| o < v).count() as f64;
                let tied = xs.iter().filter(|&&o| o == v).count() as f64;
                below + (tied + 1.0) / 2.0
            })
            .collect()
    }

    let started = Instant::now();
    let mut rng = Rng::from_seed(0xACC2);
    let mut evaluated = 0usize;
    for case in 0..1000 {
        let n = 2 + rng.below(199);
        let tie_heavy = case % 3 == 0;
        let draw = |rng: &mut Rng| -> Vec<f64> {
            (0..n)
                .map(|_| {
                    let v = rng.range_f64(-5.0, 5.0);
                    if tie_heavy {
                        v.round()
                    } else {
                        v
                    }
                })
                .collect()
        };
        let x = draw(&mut rng);
        let y = draw(&mut rng);
        if let Ok(r) = plcc(&x, &y) {
            let oracle = pearson_oracle(&x, &y);
            assert!(
                (r - oracle).abs() <= 1e-10,
                "case {case}: plcc {r} vs oracle {oracle}"
            );
            evaluated += 1;
        }
        if let Ok(r) = srocc(&x, &y) {
            let oracle = pearson_oracle(&counting_ranks(&x), &counting_ranks(&y));
            assert!(
                (r - oracle).abs() <= 1e-10,
                "case {case}: srocc {r} vs oracle {oracle}"
            );
            evaluated += 1;
        }
    }
    let secs = started.elapsed().as_secs_f64();
    assert!(secs < 5.0, "metric oracle check took {secs:.1}s");
    assert!(evaluated >= 1500, "only {evaluated} comparisons ran");
    pass(2, &format!("{evaluated} oracle comparisons, {secs:.1}s"));
}

/// Criterion 3: feeding the 16 published grid-point loss values to the grid
/// search returns best = (1/2, 1/2) with value exactly 0.032.
#[test]
fn criterion_3_grid_search_reproduction() {
    // Published table, indexed [lambda1][lambda2].
    let published = [
        [0.042, 0.038, 0.041, 0.045],
        [0.036, 0.032, 0.034, 0.039],
        [0.037, 0.035, 0.033, 0.040],
        [0.043, 0.039, 0.037, 0.041],
    ];
    let idx = |v: f64| LAMBDA_GRID.iter().position(|&g| g == v).unwrap();
    let result = grid_search(|l1, l2| Ok(published[idx(l1)][idx(l2)])).unwrap();
    assert_eq!(result.best, (0.5, 0.5));
    assert_eq!(result.best_value, 0.032);
    assert_eq!(result.table, published);
    pass(3, "best = (0.5, 0.5) at 0.032, full table reproduced");
}

/// Criterion 4: stepwise selection on noiseless planted data recovers the
/// (0.6, 0.4) combination to 1e-6, excludes three noise columns, and
/// excludes a planted 0.03 coefficient via the 0.05 threshold, in < 1 s.
#[test]
fn criterion_4_meta_learner_recovery() {
    let started = Instant::now();
    let mut rng = Rng::from_seed(0xACC4);
    let n = 200;
    let p1: Vec<f64> = (0..n).map(|_| rng.next_f64()).collect();
    let p2: Vec<f64> = (0..n).map(|_| rng.next_f64()).collect();
    let target: Vec<f64> = (0..n).map(|i| 0.6 * p1[i] + 0.4 * p2[i]).collect();
    let noise: Vec<Vec<f64>> = (0..3)
        .map(|_| (0..n).map(|_| rng.next_f64()).collect())
        .collect();
    let mut columns = vec![p1.clone(), p2.clone()];
    columns.extend(noise);
    let data = PredictionMatrix::new(columns, target).unwrap();
    let model = slr_fit(&data, 0.05).unwrap();
    let mut selected: Vec<usize> = model.terms.iter().map(|t| t.index).collect();
    selected.sort_unstable();
    assert_eq!(selected, vec![0, 1], "noise columns crept in: {selected:?}");
    for term in &model.terms {
        let expected = if term.index == 0 { 0.6 } else { 0.4 };
        assert!(
            (term.coef - expected).abs() <= 1e-6,
            "coefficient {} vs {expected}",
            term.coef
        );
    }

    // Sub-threshold planted coefficient is excluded.
    let q1: Vec<f64> = (0..n).map(|_| rng.next_f64()).collect();
    let q2: Vec<f64> = (0..n).map(|_| rng.next_f64()).collect();
    let target2: Vec<f64> = (0..n).map(|i| 0.97 * q1[i] + 0.03 * q2[i]).collect();
    let data2 = PredictionMatrix::new(vec![q1, q2], target2).unwrap();
    let model2 = slr_fit(&data2, 0.05).unwrap();
    let selected2: Vec<usize> = model2.terms.iter().map(|t| t.index).collect();
    assert_eq!(selected2, vec![0], "0.03 column survived the threshold");

    let secs = started.elapsed().as_secs_f64();
    assert!(secs < 1.0, "meta recovery took {secs:.2}s");
    pass(
        4,
        &format!(
            "recovered (0.6, 0.4) to 1e-6, excluded 3 noise columns and the 0.03 term, {secs:.2}s"
        ),
    );
}

/// Criterion 5: the published final combination evaluates to 0.05 on
/// all-zero inputs and 1.05 on all-one inputs, to 1e-12.
#[test]
fn criterion_5_published_equation() {
    let model = MetaModel {
        intercept: 0.05,
        terms: vec![
            MetaTerm { index: 6, coef: 0.40 },
            MetaTerm { index: 0, coef: 0.35 },
            MetaTerm { index: 13, coef: 0.15 },
            MetaTerm { index: 9, coef: 0.10 },
        ],
        residuals: Vec::new(),
        r_squared: 0.0,
    };
    let zeros = vec![0.0; 14];
    let at_zero = meta_predict(&model, &zeros).unwrap();
    assert!((at_zero - 0.05).abs() <= 1e-12, "intercept {at_zero}");
    let ones = vec![1.0; 14];
    let at_one = meta_predict(&model, &ones).unwrap();
    assert!((at_one - 1.05).abs() <= 1e-12, "coefficient sum {at_one}");
    pass(5, "0.05 at zeros, 1.05 at ones");
}

/// Criterion 6: all 125 (model, level) pairs produce valid images on a
/// 10-image 256x256 corpus; reruns under fixed seeds are bit-identical;
/// MSE against the pristine image is nondecreasing in level for the six
/// deterministic models; all within 2 minutes.
#[test]
fn criterion_6_distortion_engine() {
    let started = Instant::now();
    let schedule = SeveritySchedule::default();
    let images: Vec<_> = (0..10)
        .map(|i| iqa_core::synth::synth_image(256, 256, 0xACC6 + i as u64))
        .collect();

    let deterministic_monotone = [2u8, 9, 15, 16, 21, 23];
    for (img_idx, img) in images.iter().enumerate() {
        let mut mse_by_model: std::collections::BTreeMap<u8, Vec<f64>> = Default::default();
        for model in 1..=25u8 {
            for level in 1..=5u8 {
                let spec = DistortionSpec::new(model, level, 0xD15 + img_idx as u64).unwrap();
                let out = apply_distortion(img, &spec, &schedule).unwrap();
                out.assert_valid();
                assert_eq!(out.height(), img.height());
                assert_eq!(out.width(), img.width());
                if deterministic_monotone.contains(&model) {
                    mse_by_model
                        .entry(model)
                        .or_default()
                        .push(img.mse(&out).unwrap());
                }
                // Bit-identical rerun.
                let again = apply_distortion(img, &spec, &schedule).unwrap();
                assert_eq!(out, again, "model {model}-{level} differs across reruns");
            }
        }
        for (model, mses) in &mse_by_model {
            for w in mses.windows(2) {
                assert!(
                    w[1] >= w[0],
                    "image {img_idx} model {model}: MSE not nondecreasing: {mses:?}"
                );
            }
        }
    }
    let secs = started.elapsed().as_secs_f64();
    assert!(secs < 120.0, "distortion engine check took {secs:.1}s");
    pass(
        6,
        &format!("125 pairs x 10 images valid, rerun-identical, monotone MSE for 6 models, {secs:.1}s"),
    );
}

/// Pipeline configuration for the toy end-to-end runs: thumbnail features,
/// four base learners including a deliberately narrow one, and a hotter
/// learning schedule suited to few optimizer steps per epoch.
fn toy_pipeline(seed: u64) -> PipelineConfig {
    let train = TrainConfig {
        initial_lr: 0.005,
        lr_drop_factor: 0.1,
        lr_drop_period: 100,
        max_epochs: 150,
        patience: 35,
        seed,
        ..Default::default()
    };
    PipelineConfig {
        feature: FeatureConfig {
            crop: None,
            side: 8,
        },
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
                hidden: vec![2],
                seed_offset: 4,
            },
        ],
        pretrain: true,
        pretrain_train: TrainConfig {
            initial_lr: 0.01,
            max_epochs: 150,
            patience: 40,
            ..train
        },
        loss: LossConfig::default(),
        train,
        slr_threshold: 0.05,
        seed,
    }
}

/// Toy corpus: darken (11) and mean-shift (17), two families whose
/// severity ladders move thumbnail statistics in opposite directions.
/// Built once; criteria 7 and 8 run on parallel test threads.
fn toy_corpus_dir() -> std::path::PathBuf {
    static DIR: std::sync::OnceLock<std::path::PathBuf> = std::sync::OnceLock::new();
    DIR.get_or_init(|| {
        let dir = std::env::temp_dir().join(format!("iqa-acc7-{}", std::process::id()));
        let _ = std::fs::remove_dir_all(&dir);
        write_synth_corpus(dir.join("pristine"), 70, 128, 128, 0xACC7).unwrap();
        generate_corpus(
            dir.join("pristine"),
            dir.join("corpus"),
            &[11, 17],
            &[1, 2, 3, 4, 5],
            0xACC7,
            &SeveritySchedule::default(),
            4,
        )
        .unwrap();
        dir
    })
    .clone()
}

/// Criterion 7: on a generated corpus with the planted quality law
/// (1 - level/5 plus seeded jitter), the full pipeline reaches holdout
/// SROCC >= 0.9 and strictly exceeds the NO_META uniform-averaging
/// ablation, both in median over 5 seeds, within 10 minutes.
#[test]
fn criterion_7_end_to_end_toy_pipeline() {
    let started = Instant::now();
    let dir = toy_corpus_dir();
    let manifest = dir.join("corpus/manifest.jsonl");

    let mut baseline = Vec::new();
    let mut no_meta = Vec::new();
    for seed in 0..5u64 {
        let ds = dataset_from_manifest(&manifest, "toy", 0.02, 0xACC7 + seed).unwrap();
        let cfg = toy_pipeline(seed);
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
        baseline.push(reports[0].1.srocc);
        no_meta.push(reports[1].1.srocc);
    }
    let median = |xs: &[f64]| -> f64 {
        let mut s = xs.to_vec();
        s.sort_by(|a, b| a.partial_cmp(b).unwrap());
        s[s.len() / 2]
    };
    let med_base = median(&baseline);
    let med_avg = median(&no_meta);
    let secs = started.elapsed().as_secs_f64();
    assert!(
        med_base >= 0.9,
        "median holdout SROCC {med_base} < 0.9 ({baseline:?})"
    );
    assert!(
        med_base > med_avg,
        "meta-learner ({med_base}) did not beat uniform averaging ({med_avg})"
    );
    assert!(secs < 600.0, "toy pipeline took {secs:.0}s");
    pass(
        7,
        &format!("median SROCC {med_base:.4} (no-meta {med_avg:.4}), {secs:.0}s"),
    );
}

/// Criterion 8: pre-trained initialization reaches the random-init run's
/// best validation loss in no more epochs than the random run needed,
/// median over 5 seeds.
#[test]
fn criterion_8_transfer_learning_direction() {
    let dir = toy_corpus_dir();
    let manifest = dir.join("corpus/manifest.jsonl");
    let cfg = toy_pipeline(0);
    let ds = dataset_from_manifest(&manifest, "toy", 0.02, 0xBEEF).unwrap();
    let features = feature_matrix(&ds, &cfg.feature, cfg.seed).unwrap();
    let labels = ds.labels().unwrap();
    let classes = ds.class_indices().unwrap();
    let class_data: Vec<(Vec<f64>, usize)> =
        features.iter().cloned().zip(classes).collect();
    let reg_data: Vec<(Vec<f64>, f64)> =
        features.iter().cloned().zip(labels.iter().cloned()).collect();

    let mut warm_epochs = Vec::new();
    let mut cold_epochs = Vec::new();
    for seed in 0..5u64 {
        let sizes = [cfg.feature.feature_dim(), 32];
        let tune = TrainConfig {
            seed: 0x7EA + seed,
            ..cfg.train
        };
        let pre_cfg = TrainConfig {
            seed: 0x9E + seed,
            ..cfg.pretrain_train
        };
        let base = init_params(
            &sizes,
            Head::Classify(iqa_core::distortion::CLASS_COUNT),
            seed,
        )
        .unwrap();
        let (pretrained, _) = pretrain_classify(&base, &class_data, &pre_cfg).unwrap();
        let warm = transfer_to_regress(&pretrained, seed + 999);
        let cold = init_params(&sizes, Head::Regress, seed + 999).unwrap();
        let (_, warm_report) =
            finetune_regress(&warm, &reg_data, &cfg.loss, &tune).unwrap();
        let (_, cold_report) =
            finetune_regress(&cold, &reg_data, &cfg.loss, &tune).unwrap();

        let cold_best = cold_report.val_loss[cold_report.best_epoch];
        cold_epochs.push(cold_report.best_epoch as f64);
        let reach = warm_report
            .val_loss
            .iter()
            .position(|&v| v <= cold_best)
            .map(|e| e as f64)
            .unwrap_or(f64::INFINITY);
        warm_epochs.push(reach);
    }
    let median = |xs: &[f64]| -> f64 {
        let mut s = xs.to_vec();
        s.sort_by(|a, b| a.partial_cmp(b).unwrap());
        s[s.len() / 2]
    };
    let warm_med = median(&warm_epochs);
    let cold_med = median(&cold_epochs);
    assert!(
        warm_med <= cold_med,
        "pretrained reach {warm_epochs:?} vs random best {cold_epochs:?}"
    );
    pass(
        8,
        &format!("median epochs to random-init's best loss: {warm_med} (random needed {cold_med})"),
    );
}

/// Criterion 9: every seeded stage is bit-identical across two runs and
/// across 1 vs 4 worker threads.
#[test]
fn criterion_9_determinism_suite() {
    let dir = std::env::temp_dir().join(format!("iqa-acc9-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    write_synth_corpus(dir.join("pristine"), 4, 64, 64, 0xACC9).unwrap();
    let schedule = SeveritySchedule::default();

    // Corpus generation: two runs, 1 vs 4 threads, byte-identical files.
    let models = [3u8, 9, 14, 25];
    let levels = [1u8, 3, 5];
    let a = generate_corpus(
        dir.join("pristine"),
        dir.join("corpus-a"),
        &models,
        &levels,
        42,
        &schedule,
        1,
    )
    .unwrap();
    let b = generate_corpus(
        dir.join("pristine"),
        dir.join("corpus-b"),
        &models,
        &levels,
        42,
        &schedule,
        4,
    )
    .unwrap();
    assert_eq!(a, b, "manifests differ across thread counts");
    assert_eq!(
        std::fs::read(dir.join("corpus-a/manifest.jsonl")).unwrap(),
        std::fs::read(dir.join("corpus-b/manifest.jsonl")).unwrap()
    );
    for entry in &a {
        assert_eq!(
            std::fs::read(dir.join("corpus-a").join(&entry.output)).unwrap(),
            std::fs::read(dir.join("corpus-b").join(&entry.output)).unwrap(),
            "{} differs across thread counts",
            entry.output
        );
    }

    // Training pipeline: identical seeds give bit-identical predictions.
    let ds = dataset_from_manifest(dir.join("corpus-a/manifest.jsonl"), "det", 0.02, 7).unwrap();
    let mut cfg = toy_pipeline(3);
    cfg.feature = FeatureConfig {
        crop: Some(32),
        side: 8,
    };
    cfg.train.max_epochs = 8;
    cfg.pretrain_train.max_epochs = 5;
    let p1 = iqa_core::harness::train_pipeline(&ds, &cfg).unwrap();
    let p2 = iqa_core::harness::train_pipeline(&ds, &cfg).unwrap();
    let rows = feature_matrix(&ds, &cfg.feature, cfg.seed).unwrap();
    let pred1 = p1.predict_rows(&rows).unwrap();
    let pred2 = p2.predict_rows(&rows).unwrap();
    assert_eq!(pred1, pred2, "pipeline predictions differ across runs");

    // Seeded image ops.
    let img = iqa_core::synth::synth_image(48, 48, 1);
    let op = iqa_core::image::AugmentOp {
        kind: iqa_core::image::AugmentKind::RandomCrop,
        magnitude: 24.0,
        seed: 5,
    };
    assert_eq!(
        iqa_core::image::augment(&img, &op).unwrap(),
        iqa_core::image::augment(&img, &op).unwrap()
    );

    pass(9, "corpus, pipeline, and image ops bit-identical across runs and thread counts");
}
