//! `iqa`: distortion corpora, training, and evaluation from the shell.
//!
//! Exit codes: 0 success, 2 configuration error, 3 data error, 4 numeric
//! failure.

mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{load_settings, Settings};
use iqa_core::distortion::{
    apply_distortion, generate_corpus, DistortionSpec, LEVEL_COUNT, MODEL_COUNT,
};
use iqa_core::harness::{
    dataset_from_manifest, eval_cross_dataset_detailed, eval_holdout_detailed, feature_matrix,
    import_external, load_dataset, run_ablation, save_dataset, split, AblationToggle,
    DatasetHandle, EvalReport, SplitSpec, TrainedPipeline,
};
use iqa_core::image::{load_image, save_image};
use iqa_core::metalearner::{slr_fit, PredictionMatrix};
use iqa_core::qaloss::{grid_search, GridSearchResult, LossConfig};
use iqa_core::regressor::{
    finetune_regress, init_params, load_params, pretrain_classify, save_params,
    transfer_to_regress, Head, TrainReport,
};
use iqa_core::rng::mix;
use iqa_core::synth::write_synth_corpus;
use iqa_core::{Error, ErrorKind, Result};

#[derive(Parser)]
#[command(name = "iqa", version, about = "No-reference image quality assessment pipeline")]
struct Cli {
    /// Master seed; overrides the seed from config files.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// JSON config file(s) with schedule / loss / train / pipeline
    /// sections; later files override earlier ones.
    #[arg(long, global = true)]
    config: Vec<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Apply one distortion (model, level) to one image.
    Distort(DistortArgs),
    /// Generate a distorted corpus plus manifest from pristine images.
    Corpus(CorpusArgs),
    /// Write synthetic pristine images (a stand-in for real sources).
    Synth(SynthArgs),
    /// Pre-train a distortion classifier on a corpus-derived dataset.
    Pretrain(PretrainArgs),
    /// Fine-tune a quality regressor (optionally from pre-trained weights).
    Train(TrainArgs),
    /// Search the 16-point loss-weight grid.
    GridSearch(GridSearchArgs),
    /// Fit the stepwise meta-learner on a prediction matrix CSV.
    MetaFit(MetaFitArgs),
    /// Holdout or cross-dataset evaluation of the full pipeline.
    Eval(EvalArgs),
    /// Run the ablation matrix.
    Ablate(AblateArgs),
    /// Import an external dataset from a (filename, mos) CSV.
    Import(ImportArgs),
}

#[derive(Args)]
struct DistortArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    model: u8,
    #[arg(long)]
    level: u8,
    /// Output file; defaults to `<out>/<stem>_<model>-<level>.png`.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct CorpusArgs {
    #[arg(long)]
    pristine: PathBuf,
    /// Model subset, e.g. `9` or `1-25` or `3,9,16`.
    #[arg(long, default_value = "1-25")]
    models: String,
    /// Level subset, e.g. `1-5` or `2,4`.
    #[arg(long, default_value = "1-5")]
    levels: String,
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 10)]
    count: usize,
    #[arg(long, default_value_t = 256)]
    height: usize,
    #[arg(long, default_value_t = 256)]
    width: usize,
}

#[derive(Args)]
struct PretrainArgs {
    /// Corpus manifest (.jsonl) or dataset file (.json) with class labels.
    #[arg(long)]
    dataset: PathBuf,
    /// Hidden-layer widths, e.g. `32` or `48,16`.
    #[arg(long, default_value = "32")]
    widths: String,
    #[arg(long)]
    model_out: Option<PathBuf>,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    dataset: PathBuf,
    /// Pre-trained parameter file to transfer from.
    #[arg(long)]
    init: Option<PathBuf>,
    #[arg(long, default_value = "32")]
    widths: String,
    #[arg(long)]
    model_out: Option<PathBuf>,
    /// Label jitter amplitude for corpus-derived datasets.
    #[arg(long, default_value_t = 0.02)]
    jitter: f64,
}

#[derive(Args)]
struct GridSearchArgs {
    /// CSV of precomputed loss values (`lambda1,lambda2,loss` rows).
    #[arg(long, conflicts_with = "dataset")]
    loss_table: Option<PathBuf>,
    /// Dataset to train on per grid cell (short fine-tune runs).
    #[arg(long)]
    dataset: Option<PathBuf>,
    #[arg(long, default_value_t = 0.02)]
    jitter: f64,
}

#[derive(Args)]
struct MetaFitArgs {
    /// CSV whose last column is the target and the rest are predictors.
    #[arg(long)]
    predictions: PathBuf,
    #[arg(long, default_value_t = iqa_core::metalearner::DEFAULT_THRESHOLD)]
    threshold: f64,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long, conflicts_with = "cross")]
    holdout: bool,
    #[arg(long)]
    cross: bool,
    /// Dataset for holdout evaluation.
    #[arg(long, required_if_eq("holdout", "true"))]
    dataset: Option<PathBuf>,
    #[arg(long, required_if_eq("cross", "true"))]
    train_ds: Option<PathBuf>,
    #[arg(long, required_if_eq("cross", "true"))]
    test_ds: Option<PathBuf>,
    #[arg(long, default_value_t = 0.8)]
    train_fraction: f64,
    #[arg(long, default_value_t = 0.02)]
    jitter: f64,
}

#[derive(Args)]
struct AblateArgs {
    #[arg(long)]
    dataset: PathBuf,
    /// Comma-separated toggles: NO_META, MSE_ONLY_LOSS, NO_PRETRAIN,
    /// `DROP_BASE:<i>`.
    #[arg(long, default_value = "NO_META,MSE_ONLY_LOSS,NO_PRETRAIN")]
    toggles: String,
    #[arg(long, default_value_t = 0.8)]
    train_fraction: f64,
    #[arg(long, default_value_t = 0.02)]
    jitter: f64,
}

#[derive(Args)]
struct ImportArgs {
    #[arg(long)]
    mos_file: PathBuf,
    #[arg(long)]
    image_dir: PathBuf,
    #[arg(long)]
    mos_min: f64,
    #[arg(long)]
    mos_max: f64,
    #[arg(long)]
    name: String,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            match e.kind() {
                ErrorKind::Config => ExitCode::from(2),
                ErrorKind::Data => ExitCode::from(3),
                ErrorKind::Numeric => ExitCode::from(4),
            }
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let settings = load_settings(&cli.config, cli.seed)?;
    std::fs::create_dir_all(&cli.out).map_err(|e| Error::io(&cli.out, e))?;
    let out = cli.out.as_path();
    match cli.command {
        Command::Distort(args) => distort(args, &settings, out),
        Command::Corpus(args) => corpus(args, &settings, out),
        Command::Synth(args) => synth(args, &settings, out),
        Command::Pretrain(args) => pretrain(args, &settings, out),
        Command::Train(args) => train(args, &settings, out),
        Command::GridSearch(args) => grid(args, &settings, out),
        Command::MetaFit(args) => meta_fit(args, out),
        Command::Eval(args) => eval(args, &settings, out),
        Command::Ablate(args) => ablate(args, &settings, out),
        Command::Import(args) => import(args, out),
    }
}

fn distort(args: DistortArgs, settings: &Settings, out: &Path) -> Result<()> {
    let img = load_image(&args.input)?;
    let spec = DistortionSpec::new(args.model, args.level, settings.pipeline.seed)?;
    let distorted = apply_distortion(&img, &spec, &settings.schedule)?;
    let output = args.output.unwrap_or_else(|| {
        let stem = args
            .input
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or("image");
        out.join(format!("{stem}_{:02}-{}.png", args.model, args.level))
    });
    save_image(&distorted, &output)?;
    println!("{}", output.display());
    Ok(())
}

fn corpus(args: CorpusArgs, settings: &Settings, out: &Path) -> Result<()> {
    let models = parse_id_list(&args.models, MODEL_COUNT)?;
    let levels = parse_id_list(&args.levels, LEVEL_COUNT)?;
    let entries = generate_corpus(
        &args.pristine,
        out,
        &models,
        &levels,
        settings.pipeline.seed,
        &settings.schedule,
        args.threads,
    )?;
    println!(
        "{} images -> {} ({} entries in manifest.jsonl)",
        entries.len(),
        out.display(),
        entries.len()
    );
    Ok(())
}

fn synth(args: SynthArgs, settings: &Settings, out: &Path) -> Result<()> {
    let paths = write_synth_corpus(
        out,
        args.count,
        args.height,
        args.width,
        settings.pipeline.seed,
    )?;
    println!("{} pristine images in {}", paths.len(), out.display());
    Ok(())
}

/// Loads a dataset from either a corpus manifest (`.jsonl`) or a dataset
/// JSON document.
fn load_any_dataset(path: &Path, jitter: f64, seed: u64) -> Result<DatasetHandle> {
    let is_manifest = path
        .extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("jsonl"));
    if is_manifest {
        let name = path
            .parent()
            .and_then(|p| p.file_name())
            .and_then(|n| n.to_str())
            .unwrap_or("corpus")
            .to_string();
        dataset_from_manifest(path, name, jitter, seed)
    } else {
        load_dataset(path)
    }
}

fn parse_widths(text: &str) -> Result<Vec<usize>> {
    text.split(',')
        .map(|p| {
            p.trim()
                .parse::<usize>()
                .map_err(|_| Error::InvalidConfig(format!("bad width `{p}`")))
        })
        .collect()
}

fn write_loss_curves(report: &TrainReport, out: &Path, prefix: &str) -> Result<()> {
    let mut train = String::new();
    let mut val = String::new();
    for (i, (t, v)) in report.train_loss.iter().zip(&report.val_loss).enumerate() {
        train.push_str(&format!("{} {}\n", i + 1, t));
        val.push_str(&format!("{} {}\n", i + 1, v));
    }
    let train_path = out.join(format!("{prefix}_train_loss.txt"));
    std::fs::write(&train_path, train).map_err(|e| Error::io(&train_path, e))?;
    let val_path = out.join(format!("{prefix}_val_loss.txt"));
    std::fs::write(&val_path, val).map_err(|e| Error::io(&val_path, e))?;
    let csv_path = out.join(format!("{prefix}_report.csv"));
    std::fs::write(&csv_path, report.to_csv()).map_err(|e| Error::io(&csv_path, e))
}

fn pretrain(args: PretrainArgs, settings: &Settings, out: &Path) -> Result<()> {
    let ds = load_any_dataset(&args.dataset, 0.0, settings.pipeline.seed)?;
    let classes = ds.class_indices().ok_or_else(|| {
        Error::InvalidConfig("dataset has no pseudo-label classes to pre-train on".into())
    })?;
    let features = feature_matrix(&ds, &settings.pipeline.feature, settings.pipeline.seed)?;
    let data: Vec<(Vec<f64>, usize)> = features.into_iter().zip(classes).collect();
    let widths = parse_widths(&args.widths)?;
    let mut sizes = vec![settings.pipeline.feature.feature_dim()];
    sizes.extend_from_slice(&widths);
    let params = init_params(
        &sizes,
        Head::Classify(iqa_core::distortion::CLASS_COUNT),
        settings.pipeline.seed,
    )?;
    let (trained, report) = pretrain_classify(&params, &data, &settings.pipeline.pretrain_train)?;
    let model_path = args.model_out.unwrap_or_else(|| out.join("pretrained.bin"));
    save_params(&trained, &model_path)?;
    write_loss_curves(&report, out, "pretrain")?;
    println!(
        "pretrained {} classes, best epoch {} -> {}",
        iqa_core::distortion::CLASS_COUNT,
        report.best_epoch + 1,
        model_path.display()
    );
    Ok(())
}

fn train(args: TrainArgs, settings: &Settings, out: &Path) -> Result<()> {
    let ds = load_any_dataset(&args.dataset, args.jitter, settings.pipeline.seed)?;
    let features = feature_matrix(&ds, &settings.pipeline.feature, settings.pipeline.seed)?;
    let labels = ds.labels()?;
    let data: Vec<(Vec<f64>, f64)> = features.into_iter().zip(labels).collect();
    let init = match &args.init {
        Some(path) => {
            let loaded = load_params(path)?;
            match loaded.head() {
                Head::Classify(_) => {
                    transfer_to_regress(&loaded, mix(&[settings.pipeline.seed, 0x43_4c49]))
                }
                Head::Regress => loaded,
            }
        }
        None => {
            let widths = parse_widths(&args.widths)?;
            let mut sizes = vec![settings.pipeline.feature.feature_dim()];
            sizes.extend_from_slice(&widths);
            init_params(&sizes, Head::Regress, settings.pipeline.seed)?
        }
    };
    let (trained, report) =
        finetune_regress(&init, &data, &settings.pipeline.loss, &settings.pipeline.train)?;
    let model_path = args.model_out.unwrap_or_else(|| out.join("regressor.bin"));
    save_params(&trained, &model_path)?;
    write_loss_curves(&report, out, "finetune")?;
    println!(
        "trained on {} samples, best epoch {} -> {}",
        data.len(),
        report.best_epoch + 1,
        model_path.display()
    );
    Ok(())
}

fn grid(args: GridSearchArgs, settings: &Settings, out: &Path) -> Result<()> {
    let result: GridSearchResult = if let Some(table_path) = &args.loss_table {
        let table = read_loss_table(table_path)?;
        grid_search(|l1, l2| {
            table
                .get(&(key(l1), key(l2)))
                .copied()
                .ok_or_else(|| Error::InvalidConfig(format!("no table entry for ({l1}, {l2})")))
        })?
    } else if let Some(ds_path) = &args.dataset {
        let ds = load_any_dataset(ds_path, args.jitter, settings.pipeline.seed)?;
        let (train_ds, _) = split(
            &ds,
            &SplitSpec {
                train_fraction: 0.8,
                seed: settings.pipeline.seed,
            },
        )?;
        let features =
            feature_matrix(&train_ds, &settings.pipeline.feature, settings.pipeline.seed)?;
        let labels = train_ds.labels()?;
        let data: Vec<(Vec<f64>, f64)> = features.into_iter().zip(labels).collect();
        let base = &settings.pipeline.base_learners[0];
        let mut sizes = vec![settings.pipeline.feature.feature_dim()];
        sizes.extend_from_slice(&base.hidden);
        let init = init_params(&sizes, Head::Regress, settings.pipeline.seed)?;
        grid_search(|l1, l2| {
            let loss_cfg = LossConfig {
                lambda1: l1,
                lambda2: l2,
                ..settings.pipeline.loss
            };
            let (_, report) = finetune_regress(&init, &data, &loss_cfg, &settings.pipeline.train)?;
            Ok(report.val_loss[report.best_epoch])
        })?
    } else {
        return Err(Error::InvalidConfig(
            "grid-search needs --loss-table or --dataset".into(),
        ));
    };
    let csv_path = out.join("grid.csv");
    std::fs::write(&csv_path, result.to_csv()).map_err(|e| Error::io(&csv_path, e))?;
    println!(
        "best (lambda1, lambda2) = ({}, {}) with loss {}",
        result.best.0, result.best.1, result.best_value
    );
    println!("{}", csv_path.display());
    Ok(())
}

fn key(v: f64) -> u64 {
    (v * 4.0).round() as u64
}

fn read_loss_table(path: &Path) -> Result<std::collections::BTreeMap<(u64, u64), f64>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::decode(path, e.to_string()))?;
    let mut table = std::collections::BTreeMap::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::BadRecord {
            path: path.to_path_buf(),
            row: i + 2,
            reason: e.to_string(),
        })?;
        let parse = |j: usize| -> Result<f64> {
            record
                .get(j)
                .and_then(|s| s.parse::<f64>().ok())
                .ok_or_else(|| Error::BadRecord {
                    path: path.to_path_buf(),
                    row: i + 2,
                    reason: format!("bad column {j}"),
                })
        };
        table.insert((key(parse(0)?), key(parse(1)?)), parse(2)?);
    }
    Ok(table)
}

fn meta_fit(args: MetaFitArgs, out: &Path) -> Result<()> {
    let path = &args.predictions;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::decode(path, e.to_string()))?;
    let mut columns: Vec<Vec<f64>> = Vec::new();
    let mut target: Vec<f64> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::BadRecord {
            path: path.to_path_buf(),
            row: i + 2,
            reason: e.to_string(),
        })?;
        let values: Vec<f64> = record
            .iter()
            .map(|s| {
                s.parse::<f64>().map_err(|_| Error::BadRecord {
                    path: path.to_path_buf(),
                    row: i + 2,
                    reason: format!("bad value `{s}`"),
                })
            })
            .collect::<Result<_>>()?;
        if values.len() < 2 {
            return Err(Error::BadRecord {
                path: path.to_path_buf(),
                row: i + 2,
                reason: "need at least one predictor column plus the target".into(),
            });
        }
        if columns.is_empty() {
            columns = vec![Vec::new(); values.len() - 1];
        }
        for (col, v) in columns.iter_mut().zip(&values) {
            col.push(*v);
        }
        target.push(*values.last().unwrap());
    }
    let matrix = PredictionMatrix::new(columns, target)?;
    let model = slr_fit(&matrix, args.threshold)?;
    let json_path = out.join("meta.json");
    std::fs::write(&json_path, model.to_json()).map_err(|e| Error::io(&json_path, e))?;
    println!("{}", model.equation());
    println!("R^2 = {:.6} -> {}", model.r_squared, json_path.display());
    Ok(())
}

fn write_report(report: &EvalReport, pipeline: Option<&TrainedPipeline>, out: &Path) -> Result<()> {
    let report_path = out.join("report.csv");
    let text = format!("{}\n{}\n", EvalReport::csv_header(), report.to_csv_row());
    std::fs::write(&report_path, text).map_err(|e| Error::io(&report_path, e))?;
    let residuals_path = out.join("residuals.csv");
    std::fs::write(&residuals_path, report.residuals_csv())
        .map_err(|e| Error::io(&residuals_path, e))?;
    let scatter_path = out.join("scatter.txt");
    std::fs::write(&scatter_path, report.scatter_data())
        .map_err(|e| Error::io(&scatter_path, e))?;
    if let Some(pipeline) = pipeline {
        for (i, learner_report) in pipeline.base_reports.iter().enumerate() {
            write_loss_curves(learner_report, out, &format!("learner{i}"))?;
        }
        if let Some(meta) = &pipeline.meta {
            let meta_path = out.join("meta.json");
            std::fs::write(&meta_path, meta.to_json()).map_err(|e| Error::io(&meta_path, e))?;
        }
    }
    println!(
        "{}: PLCC {:.4} SROCC {:.4} RMSE {:.4} [{}]",
        report.dataset, report.plcc, report.srocc, report.rmse, report.fingerprint
    );
    Ok(())
}

fn eval(args: EvalArgs, settings: &Settings, out: &Path) -> Result<()> {
    if args.cross {
        let train_ds = load_any_dataset(
            args.train_ds.as_ref().unwrap(),
            args.jitter,
            settings.pipeline.seed,
        )?;
        let test_ds = load_any_dataset(
            args.test_ds.as_ref().unwrap(),
            args.jitter,
            settings.pipeline.seed,
        )?;
        let (report, pipeline) =
            eval_cross_dataset_detailed(&train_ds, &test_ds, &settings.pipeline)?;
        write_report(&report, Some(&pipeline), out)
    } else if args.holdout {
        let ds = load_any_dataset(
            args.dataset.as_ref().unwrap(),
            args.jitter,
            settings.pipeline.seed,
        )?;
        let (train_ds, test_ds) = split(
            &ds,
            &SplitSpec {
                train_fraction: args.train_fraction,
                seed: settings.pipeline.seed,
            },
        )?;
        let (report, pipeline) = eval_holdout_detailed(&train_ds, &test_ds, &settings.pipeline)?;
        write_report(&report, Some(&pipeline), out)
    } else {
        Err(Error::InvalidConfig(
            "eval needs --holdout or --cross".into(),
        ))
    }
}

fn ablate(args: AblateArgs, settings: &Settings, out: &Path) -> Result<()> {
    let ds = load_any_dataset(&args.dataset, args.jitter, settings.pipeline.seed)?;
    let toggles: Vec<AblationToggle> = args
        .toggles
        .split(',')
        .filter(|t| !t.trim().is_empty())
        .map(AblationToggle::parse)
        .collect::<Result<_>>()?;
    let reports = run_ablation(
        &ds,
        &SplitSpec {
            train_fraction: args.train_fraction,
            seed: settings.pipeline.seed,
        },
        &settings.pipeline,
        &toggles,
    )?;
    let mut csv = format!("experiment,{}\n", EvalReport::csv_header());
    for (label, report) in &reports {
        csv.push_str(&format!("{label},{}\n", report.to_csv_row()));
        let residuals_path = out.join(format!(
            "residuals_{}.csv",
            label.to_ascii_lowercase().replace(':', "_")
        ));
        std::fs::write(&residuals_path, report.residuals_csv())
            .map_err(|e| Error::io(&residuals_path, e))?;
        println!(
            "{label}: PLCC {:.4} SROCC {:.4} RMSE {:.4}",
            report.plcc, report.srocc, report.rmse
        );
    }
    let table_path = out.join("ablation.csv");
    std::fs::write(&table_path, csv).map_err(|e| Error::io(&table_path, e))?;
    println!("{}", table_path.display());
    Ok(())
}

fn import(args: ImportArgs, out: &Path) -> Result<()> {
    let ds = import_external(
        &args.mos_file,
        &args.image_dir,
        args.mos_min,
        args.mos_max,
        &args.name,
    )?;
    let path = out.join(format!("{}.json", args.name));
    save_dataset(&ds, &path)?;
    println!("{} entries -> {}", ds.len(), path.display());
    Ok(())
}

/// Parses `1-25`, `9`, or `3,9,16` into a validated id list.
fn parse_id_list(text: &str, max: u8) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    for part in text.split(',') {
        let part = part.trim();
        if let Some((lo, hi)) = part.split_once('-') {
            let lo: u8 = lo
                .trim()
                .parse()
                .map_err(|_| Error::InvalidConfig(format!("bad id `{part}`")))?;
            let hi: u8 = hi
                .trim()
                .parse()
                .map_err(|_| Error::InvalidConfig(format!("bad id `{part}`")))?;
            if lo == 0 || hi > max || lo > hi {
                return Err(Error::InvalidConfig(format!(
                    "range `{part}` outside 1..={max}"
                )));
            }
            out.extend(lo..=hi);
        } else {
            let id: u8 = part
                .parse()
                .map_err(|_| Error::InvalidConfig(format!("bad id `{part}`")))?;
            if id == 0 || id > max {
                return Err(Error::InvalidConfig(format!("id {id} outside 1..={max}")));
            }
            out.push(id);
        }
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}
