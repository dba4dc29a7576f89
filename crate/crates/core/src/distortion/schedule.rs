//! Severity schedules: the per-(model, level) parameter ladders.
//!
//! The published distortion bank describes each model qualitatively but does
//! not give per-level parameter magnitudes, so this crate ships a documented
//! default ladder per model and accepts user overrides from a JSON config
//! file keyed by model id. Whatever the source, the ladder must be strictly
//! monotone across levels 1..=5 (direction depends on the parameter: blur
//! sigma rises, JPEG quality falls).

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MODEL_COUNT: u8 = 25;
pub const LEVEL_COUNT: u8 = 5;

/// Parameter ladder per model: `params[model][level - 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SeveritySchedule {
    ladders: BTreeMap<u8, [f64; 5]>,
}

/// What the single severity parameter means for each model.
pub fn parameter_meaning(model: u8) -> &'static str {
    match model {
        1 => "palette size (colors) for minimum-variance-style quantization with dithering",
        2 => "wavelet detail-coefficient quantization step (JPEG2000-style approximation)",
        3 => "salt-and-pepper flip probability per pixel",
        4 => "number of random colored blocks",
        5 => "blend weight of the normalized gradient magnitude into the green channel",
        6 => "Gaussian sigma applied to the a/b channels in Lab space",
        7 => "variance of multiplicative (speckle) noise",
        8 => "sigma of Gaussian noise added before bilateral denoising",
        9 => "Gaussian blur sigma",
        10 => "unsharp-mask amount",
        11 => "gamma applied to luminance (Y^gamma darkens)",
        12 => "logistic S-curve slope for contrast change",
        13 => "HSV saturation multiplier",
        14 => "maximum per-pixel jitter offset in pixels",
        15 => "disk (lens) kernel radius in pixels",
        16 => "JPEG quality (1..=100)",
        17 => "constant added to all pixel values before truncation",
        18 => "gamma applied to luminance (Y^(1/gamma) brightens)",
        19 => "multiplier on the a/b channels in Lab space",
        20 => "number of displaced patches",
        21 => "pixelation block size factor",
        22 => "number of Otsu thresholds on luminance (fewer = coarser)",
        23 => "motion-blur line kernel length in pixels",
        24 => "variance of Gaussian noise in YCbCr (luma and chroma)",
        25 => "variance of Gaussian white noise per RGB channel",
        _ => "unknown model",
    }
}

impl Default for SeveritySchedule {
    fn default() -> Self {
        let table: [(u8, [f64; 5]); 25] = [
            (1, [64.0, 32.0, 16.0, 8.0, 4.0]),
            (2, [0.03, 0.06, 0.12, 0.24, 0.48]),
            (3, [0.005, 0.015, 0.04, 0.09, 0.18]),
            (4, [2.0, 4.0, 7.0, 11.0, 16.0]),
            (5, [0.1, 0.2, 0.35, 0.55, 0.8]),
            (6, [1.0, 2.0, 3.0, 4.5, 6.5]),
            (7, [0.01, 0.03, 0.08, 0.16, 0.3]),
            (8, [0.03, 0.06, 0.1, 0.16, 0.25]),
            (9, [1.0, 2.0, 3.0, 4.0, 5.0]),
            (10, [1.0, 2.0, 4.0, 7.0, 12.0]),
            (11, [1.3, 1.7, 2.2, 2.9, 3.8]),
            (12, [2.0, 3.2, 4.6, 6.4, 9.0]),
            (13, [0.7, 0.5, 0.34, 0.2, 0.1]),
            (14, [0.6, 1.2, 2.0, 3.2, 5.0]),
            (15, [1.0, 2.0, 3.0, 5.0, 7.0]),
            (16, [43.0, 36.0, 24.0, 7.0, 4.0]),
            (17, [0.05, 0.09, 0.14, 0.2, 0.28]),
            (18, [1.3, 1.7, 2.2, 2.9, 3.8]),
            (19, [1.35, 1.8, 2.4, 3.2, 4.5]),
            (20, [8.0, 16.0, 28.0, 44.0, 64.0]),
            // Factors form a divisor chain so each level's blocks nest
            // inside the next level's; block-mean error is then provably
            // nondecreasing (law of total variance).
            (21, [2.0, 4.0, 8.0, 16.0, 32.0]),
            (22, [5.0, 4.0, 3.0, 2.0, 1.0]),
            (23, [3.0, 5.0, 9.0, 15.0, 23.0]),
            (24, [0.001, 0.004, 0.012, 0.03, 0.08]),
            (25, [0.001, 0.004, 0.012, 0.03, 0.08]),
        ];
        SeveritySchedule {
            ladders: table.into_iter().collect(),
        }
    }
}

impl SeveritySchedule {
    /// The parameter for (model, level). Levels are 1-based.
    pub fn param(&self, model: u8, level: u8) -> Result<f64> {
        if !(1..=MODEL_COUNT).contains(&model) {
            return Err(Error::ModelOutOfRange(model));
        }
        if !(1..=LEVEL_COUNT).contains(&level) {
            return Err(Error::LevelOutOfRange(level));
        }
        let ladder = self
            .ladders
            .get(&model)
            .ok_or(Error::ScheduleMissing(model))?;
        Ok(ladder[(level - 1) as usize])
    }

    pub fn set(&mut self, model: u8, ladder: [f64; 5]) {
        self.ladders.insert(model, ladder);
    }

    /// Strict monotonicity (either direction) of every ladder.
    pub fn validate(&self) -> Result<()> {
        for (&model, ladder) in &self.ladders {
            if !(1..=MODEL_COUNT).contains(&model) {
                return Err(Error::ModelOutOfRange(model));
            }
            let increasing = ladder.windows(2).all(|w| w[0] < w[1]);
            let decreasing = ladder.windows(2).all(|w| w[0] > w[1]);
            if !(increasing || decreasing) {
                return Err(Error::ScheduleNotMonotone {
                    model,
                    params: ladder.to_vec(),
                });
            }
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let raw: BTreeMap<String, [f64; 5]> = serde_json::from_str(&text)
            .map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))?;
        let mut ladders = BTreeMap::new();
        for (key, ladder) in raw {
            let model: u8 = key.parse().map_err(|_| {
                Error::InvalidConfig(format!("{}: bad model id `{key}`", path.display()))
            })?;
            ladders.insert(model, ladder);
        }
        let schedule = SeveritySchedule { ladders };
        schedule.validate()?;
        Ok(schedule)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let raw: BTreeMap<String, [f64; 5]> = self
            .ladders
            .iter()
            .map(|(k, v)| (k.to_string(), *v))
            .collect();
        let text = serde_json::to_string_pretty(&raw).expect("schedule serializes");
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}
