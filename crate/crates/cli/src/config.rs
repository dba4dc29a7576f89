//! Layered configuration: defaults, then any number of `--config` JSON
//! files applied in order. Each file may set any subset of the sections
//! below; a `loss`/`train` section also overrides the copy embedded in the
//! pipeline section so small overrides don't need a full pipeline block.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use iqa_core::distortion::SeveritySchedule;
use iqa_core::harness::PipelineConfig;
use iqa_core::qaloss::LossConfig;
use iqa_core::regressor::TrainConfig;
use iqa_core::{Error, Result};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    /// Inline ladder map (`{"9": [1,2,3,4,5], ...}`) or a path to a
    /// schedule JSON file.
    #[serde(default)]
    schedule: Option<ScheduleSection>,
    #[serde(default)]
    loss: Option<LossConfig>,
    #[serde(default)]
    train: Option<TrainConfig>,
    #[serde(default)]
    pretrain_train: Option<TrainConfig>,
    #[serde(default)]
    pipeline: Option<PipelineConfig>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum ScheduleSection {
    Path(String),
    Inline(std::collections::BTreeMap<String, [f64; 5]>),
}

/// The merged configuration handed to every subcommand.
#[derive(Debug, Clone, Default)]
pub struct Settings {
    pub schedule: SeveritySchedule,
    pub pipeline: PipelineConfig,
}

pub fn load_settings(config_paths: &[PathBuf], seed: Option<u64>) -> Result<Settings> {
    let mut settings = Settings::default();
    for path in config_paths {
        apply_file(&mut settings, path)?;
    }
    if let Some(seed) = seed {
        settings.pipeline.seed = seed;
        settings.pipeline.train.seed = seed;
        settings.pipeline.pretrain_train.seed = seed;
    }
    settings.schedule.validate()?;
    settings.pipeline.validate()?;
    Ok(settings)
}

fn apply_file(settings: &mut Settings, path: &Path) -> Result<()> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let file: ConfigFile = serde_json::from_str(&text)
        .map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))?;
    if let Some(pipeline) = file.pipeline {
        settings.pipeline = pipeline;
    }
    if let Some(loss) = file.loss {
        settings.pipeline.loss = loss;
    }
    if let Some(train) = file.train {
        settings.pipeline.train = train;
    }
    if let Some(pretrain_train) = file.pretrain_train {
        settings.pipeline.pretrain_train = pretrain_train;
    }
    match file.schedule {
        Some(ScheduleSection::Path(p)) => {
            let schedule_path = if Path::new(&p).is_absolute() {
                PathBuf::from(&p)
            } else {
                path.parent().unwrap_or(Path::new(".")).join(&p)
            };
            settings.schedule = SeveritySchedule::load(schedule_path)?;
        }
        Some(ScheduleSection::Inline(map)) => {
            let mut schedule = SeveritySchedule::default();
            for (key, ladder) in map {
                let model: u8 = key.parse().map_err(|_| {
                    Error::InvalidConfig(format!("bad model id `{key}` in schedule"))
                })?;
                schedule.set(model, ladder);
            }
            schedule.validate()?;
            settings.schedule = schedule;
        }
        None => {}
    }
    Ok(())
}
