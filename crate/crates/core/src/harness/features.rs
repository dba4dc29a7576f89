//! Patch featurization: an optional seeded random crop followed by an
//! area-average downscale, flattened to one row per image.

use serde::{Deserialize, Serialize};

use super::{DatasetHandle, Source};
use crate::distortion::downscale_to;
use crate::error::Result;
use crate::image::{crop, load_image, CropOrigin, CropSpec, ImageTensor};
use crate::rng::mix_str;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct FeatureConfig {
    /// Square patch side extracted before downscaling; images smaller than
    /// this are used whole. `None` skips cropping entirely.
    pub crop: Option<usize>,
    /// Downscale target; the feature row has `side * side * 3` values.
    pub side: usize,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            crop: Some(64),
            side: 16,
        }
    }
}

impl FeatureConfig {
    pub fn feature_dim(&self) -> usize {
        self.side * self.side * 3
    }

    /// Featurizes one image. The crop origin is drawn from `seed`, so a
    /// fixed (config, seed, image) triple always yields the same row.
    pub fn extract(&self, img: &ImageTensor, seed: u64) -> Result<Vec<f64>> {
        let cropped;
        let img = match self.crop {
            Some(size) if size <= img.height().min(img.width()) && size > 0 => {
                cropped = crop(
                    img,
                    &CropSpec {
                        size,
                        origin: CropOrigin::Random,
                    },
                    seed,
                )?;
                &cropped
            }
            _ => img,
        };
        let small = downscale_to(img, self.side);
        Ok(small.data().to_vec())
    }
}

/// Materializes the feature matrix for a dataset. Entries that already
/// carry feature rows pass through unchanged (their width must match);
/// image-backed entries are loaded and featurized with a per-entry seed
/// derived from `seed` and the entry id.
pub fn feature_matrix(
    ds: &DatasetHandle,
    fc: &FeatureConfig,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    ds.entries()
        .iter()
        .map(|e| match &e.source {
            Source::Features(row) => Ok(row.clone()),
            Source::Path(path) => {
                let img = load_image(path)?;
                fc.extract(&img, mix_str(seed, &e.id, &[]))
            }
        })
        .collect()
}
