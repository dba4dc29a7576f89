//! Image representation, file I/O, cropping, and quality-preserving
//! augmentation (translate / rotate / random crop).
//!
//! Pixels are stored as `f64` in [0, 1], row-major H x W x 3. All operations
//! are pure: they take an image by reference and return a new one, so
//! per-image parallelism is safe as long as each call gets its own seed.

mod io;
mod ops;

pub use io::{load_image, save_image};
pub use ops::{augment, crop, rotate, translate};

use crate::error::{Error, Result};

/// An RGB image with unit-interval intensities.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageTensor {
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl ImageTensor {
    /// Builds a tensor, validating dimensions, length, and value range.
    pub fn new(height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::InvalidConfig(format!(
                "image dimensions must be positive, got {height}x{width}"
            )));
        }
        if data.len() != height * width * 3 {
            return Err(Error::InvalidConfig(format!(
                "data length {} != {height}*{width}*3",
                data.len()
            )));
        }
        if data.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::InvalidConfig(
                "pixel values must lie in [0, 1]".into(),
            ));
        }
        Ok(ImageTensor {
            height,
            width,
            data,
        })
    }

    /// Constant-intensity image.
    pub fn filled(height: usize, width: usize, value: f64) -> Self {
        assert!((0.0..=1.0).contains(&value));
        ImageTensor {
            height,
            width,
            data: vec![value; height * width * 3],
        }
    }

    /// Builds from already-validated data, clamping each value into [0, 1].
    /// Distortion models use this after additive operations.
    pub fn from_clamped(height: usize, width: usize, mut data: Vec<f64>) -> Self {
        assert_eq!(data.len(), height * width * 3);
        for v in &mut data {
            *v = v.clamp(0.0, 1.0);
        }
        ImageTensor {
            height,
            width,
            data,
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn idx(&self, row: usize, col: usize, ch: usize) -> usize {
        (row * self.width + col) * 3 + ch
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize, ch: usize) -> f64 {
        self.data[(row * self.width + col) * 3 + ch]
    }

    /// RGB triple at (row, col).
    #[inline]
    pub fn pixel(&self, row: usize, col: usize) -> [f64; 3] {
        let i = (row * self.width + col) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    /// Edge-replicated read: out-of-range coordinates clamp to the border.
    #[inline]
    pub fn get_clamped(&self, row: i64, col: i64, ch: usize) -> f64 {
        let r = row.clamp(0, self.height as i64 - 1) as usize;
        let c = col.clamp(0, self.width as i64 - 1) as usize;
        self.get(r, c, ch)
    }

    /// Mean squared error against another image of identical dimensions.
    pub fn mse(&self, other: &ImageTensor) -> Result<f64> {
        if self.height != other.height || self.width != other.width {
            return Err(Error::LengthMismatch {
                left: self.data.len(),
                right: other.data.len(),
            });
        }
        let n = self.data.len() as f64;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            / n)
    }

    /// Bilinear sample at fractional pixel-center coordinates, edge
    /// replicated. `(0.0, 0.0)` is the center of the top-left pixel.
    pub fn sample_bilinear(&self, row: f64, col: f64, ch: usize) -> f64 {
        let r0 = row.floor();
        let c0 = col.floor();
        let fr = row - r0;
        let fc = col - c0;
        let r0 = r0 as i64;
        let c0 = c0 as i64;
        let p00 = self.get_clamped(r0, c0, ch);
        let p01 = self.get_clamped(r0, c0 + 1, ch);
        let p10 = self.get_clamped(r0 + 1, c0, ch);
        let p11 = self.get_clamped(r0 + 1, c0 + 1, ch);
        (1.0 - fr) * ((1.0 - fc) * p00 + fc * p01) + fr * ((1.0 - fc) * p10 + fc * p11)
    }

    /// Catmull-Rom bicubic sample, edge replicated.
    pub fn sample_bicubic(&self, row: f64, col: f64, ch: usize) -> f64 {
        fn weight(t: f64) -> f64 {
            // Catmull-Rom kernel (a = -0.5).
            let t = t.abs();
            if t < 1.0 {
                1.5 * t * t * t - 2.5 * t * t + 1.0
            } else if t < 2.0 {
                -0.5 * t * t * t + 2.5 * t * t - 4.0 * t + 2.0
            } else {
                0.0
            }
        }
        let r0 = row.floor() as i64;
        let c0 = col.floor() as i64;
        let mut acc = 0.0;
        for dr in -1..=2 {
            let wr = weight(row - (r0 + dr) as f64);
            if wr == 0.0 {
                continue;
            }
            for dc in -1..=2 {
                let wc = weight(col - (c0 + dc) as f64);
                if wc == 0.0 {
                    continue;
                }
                acc += wr * wc * self.get_clamped(r0 + dr, c0 + dc, ch);
            }
        }
        acc.clamp(0.0, 1.0)
    }

    /// Asserts the range invariant; used by tests after every operation.
    pub fn assert_valid(&self) {
        assert_eq!(self.data.len(), self.height * self.width * 3);
        assert!(
            self.data.iter().all(|v| (0.0..=1.0).contains(v)),
            "pixel value out of [0,1]"
        );
    }
}

/// Where a crop is anchored.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CropOrigin {
    /// Fixed top-left corner (row, col).
    At(usize, usize),
    /// Uniform over all valid offsets, drawn from the caller's seed.
    Random,
}

/// A square crop request.
#[derive(Debug, Clone, Copy)]
pub struct CropSpec {
    pub size: usize,
    pub origin: CropOrigin,
}

/// The three quality-preserving augmentations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AugmentKind {
    Translate,
    Rotate,
    RandomCrop,
}

/// One augmentation application. `magnitude` is kind-specific: pixels for
/// translate (both offsets drawn from [-m, m]), signed degrees for rotate,
/// output side length for random crop.
#[derive(Debug, Clone, Copy)]
pub struct AugmentOp {
    pub kind: AugmentKind,
    pub magnitude: f64,
    pub seed: u64,
}

/// Rotation bound in degrees; beyond this the crop no longer plausibly
/// preserves perceptual quality.
pub const MAX_ROTATE_DEGREES: f64 = 15.0;
/// Translation bound as a fraction of the smaller image dimension.
pub const MAX_TRANSLATE_FRACTION: f64 = 0.10;
