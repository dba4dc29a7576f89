//! Synthetic distortion: 25 models x 5 severity levels, severity schedules,
//! pseudo-labels, and reproducible corpus generation.

mod color;
mod corpus;
mod filter;
mod models;
mod schedule;

pub use corpus::{generate_corpus, read_manifest, ManifestEntry};
pub use filter::downscale_to;
pub use schedule::{parameter_meaning, SeveritySchedule, LEVEL_COUNT, MODEL_COUNT};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::ImageTensor;
use crate::rng::Rng;

/// One distortion application: model serial (1..=25), severity level
/// (1..=5), and the seed for any stochastic component.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DistortionSpec {
    pub model: u8,
    pub level: u8,
    pub seed: u64,
}

impl DistortionSpec {
    pub fn new(model: u8, level: u8, seed: u64) -> Result<Self> {
        let spec = DistortionSpec { model, level, seed };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=MODEL_COUNT).contains(&self.model) {
            return Err(Error::ModelOutOfRange(self.model));
        }
        if !(1..=LEVEL_COUNT).contains(&self.level) {
            return Err(Error::LevelOutOfRange(self.level));
        }
        Ok(())
    }
}

/// Class annotation for quality-aware pre-training: the text form "m-l" and
/// a dense index over the 125 (model, level) pairs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PseudoLabel {
    pub text: String,
    pub class_index: usize,
}

/// Number of distinct (model, level) classes.
pub const CLASS_COUNT: usize = (MODEL_COUNT as usize) * (LEVEL_COUNT as usize);

/// Maps a spec to its pseudo-label; bijective over the 125 classes.
pub fn pseudo_label(spec: &DistortionSpec) -> Result<PseudoLabel> {
    spec.validate()?;
    Ok(PseudoLabel {
        text: format!("{}-{}", spec.model, spec.level),
        class_index: (spec.model as usize - 1) * LEVEL_COUNT as usize + (spec.level as usize - 1),
    })
}

/// Inverse of [`pseudo_label`]'s index component.
pub fn class_to_model_level(class_index: usize) -> Result<(u8, u8)> {
    if class_index >= CLASS_COUNT {
        return Err(Error::InvalidConfig(format!(
            "class index {class_index} out of range 0..{CLASS_COUNT}"
        )));
    }
    let model = (class_index / LEVEL_COUNT as usize) as u8 + 1;
    let level = (class_index % LEVEL_COUNT as usize) as u8 + 1;
    Ok((model, level))
}

/// Applies the distortion described by `spec` using the given schedule.
/// Output dimensions equal the input; values are clamped to [0, 1]; the
/// result is a pure function of (img, spec, schedule).
pub fn apply_distortion(
    img: &ImageTensor,
    spec: &DistortionSpec,
    schedule: &SeveritySchedule,
) -> Result<ImageTensor> {
    spec.validate()?;
    let p = schedule.param(spec.model, spec.level)?;
    let mut rng = Rng::from_seed(spec.seed);
    models::apply_model(img, spec.model, p, spec.level, &mut rng)
}
