//! Cropping and augmentation.

use super::{
    AugmentKind, AugmentOp, CropOrigin, CropSpec, ImageTensor, MAX_ROTATE_DEGREES,
    MAX_TRANSLATE_FRACTION,
};
use crate::error::{Error, Result};
use crate::rng::Rng;

/// Extracts a square patch. A `Random` origin is uniform over all valid
/// offsets and fully determined by `seed`.
pub fn crop(img: &ImageTensor, spec: &CropSpec, seed: u64) -> Result<ImageTensor> {
    let size = spec.size;
    if size == 0 || size > img.height() || size > img.width() {
        return Err(Error::CropTooLarge {
            size,
            height: img.height(),
            width: img.width(),
        });
    }
    let (row0, col0) = match spec.origin {
        CropOrigin::At(r, c) => {
            if r + size > img.height() || c + size > img.width() {
                return Err(Error::CropTooLarge {
                    size,
                    height: img.height(),
                    width: img.width(),
                });
            }
            (r, c)
        }
        CropOrigin::Random => {
            let mut rng = Rng::from_seed(seed);
            let r = rng.below(img.height() - size + 1);
            let c = rng.below(img.width() - size + 1);
            (r, c)
        }
    };
    let mut data = Vec::with_capacity(size * size * 3);
    for r in 0..size {
        let src = img.idx(row0 + r, col0, 0);
        data.extend_from_slice(&img.data()[src..src + size * 3]);
    }
    Ok(ImageTensor::new(size, size, data).expect("crop preserves validity"))
}

/// Shifts the image by integer offsets, replicating edge pixels into the
/// revealed border. Retained pixels are copied bit-exactly.
pub fn translate(img: &ImageTensor, d_row: i64, d_col: i64) -> ImageTensor {
    let (h, w) = (img.height(), img.width());
    let mut data = vec![0.0; h * w * 3];
    for r in 0..h {
        for c in 0..w {
            let sr = r as i64 - d_row;
            let sc = c as i64 - d_col;
            let dst = (r * w + c) * 3;
            for ch in 0..3 {
                data[dst + ch] = img.get_clamped(sr, sc, ch);
            }
        }
    }
    ImageTensor::new(h, w, data).expect("translate preserves validity")
}

/// Rotates about the image center with bilinear interpolation and edge
/// replication. Quadrant angles (multiples of 90) use exact sine/cosine so
/// they reduce to pure index permutations.
pub fn rotate(img: &ImageTensor, degrees: f64) -> ImageTensor {
    let (h, w) = (img.height(), img.width());
    let (sin, cos) = sin_cos_degrees(degrees);
    let cy = (h as f64 - 1.0) / 2.0;
    let cx = (w as f64 - 1.0) / 2.0;
    let mut data = vec![0.0; h * w * 3];
    for r in 0..h {
        for c in 0..w {
            // Inverse mapping: rotate the output coordinate by -degrees.
            let y = r as f64 - cy;
            let x = c as f64 - cx;
            let src_row = cy + (-sin) * x + cos * y;
            let src_col = cx + cos * x + sin * y;
            let dst = (r * w + c) * 3;
            for ch in 0..3 {
                data[dst + ch] = img.sample_bilinear(src_row, src_col, ch);
            }
        }
    }
    ImageTensor::new(h, w, data).expect("rotate preserves validity")
}

fn sin_cos_degrees(degrees: f64) -> (f64, f64) {
    let norm = degrees.rem_euclid(360.0);
    if norm == 0.0 {
        (0.0, 1.0)
    } else if norm == 90.0 {
        (1.0, 0.0)
    } else if norm == 180.0 {
        (0.0, -1.0)
    } else if norm == 270.0 {
        (-1.0, 0.0)
    } else {
        let rad = degrees.to_radians();
        (rad.sin(), rad.cos())
    }
}

/// Applies one augmentation. Translate and rotate keep the input dimensions;
/// random crop returns a `magnitude`-sized patch.
pub fn augment(img: &ImageTensor, op: &AugmentOp) -> Result<ImageTensor> {
    match op.kind {
        AugmentKind::Translate => {
            let bound = (img.height().min(img.width()) as f64 * MAX_TRANSLATE_FRACTION).floor();
            if op.magnitude < 0.0 || op.magnitude > bound {
                return Err(Error::MagnitudeOutOfBounds {
                    kind: "translate",
                    magnitude: op.magnitude,
                    bound,
                });
            }
            let m = op.magnitude.floor() as i64;
            if m == 0 {
                return Ok(img.clone());
            }
            let mut rng = Rng::from_seed(op.seed);
            let dr = rng.range_i64(-m, m);
            let dc = rng.range_i64(-m, m);
            Ok(translate(img, dr, dc))
        }
        AugmentKind::Rotate => {
            if op.magnitude.abs() > MAX_ROTATE_DEGREES {
                return Err(Error::MagnitudeOutOfBounds {
                    kind: "rotate",
                    magnitude: op.magnitude,
                    bound: MAX_ROTATE_DEGREES,
                });
            }
            Ok(rotate(img, op.magnitude))
        }
        AugmentKind::RandomCrop => {
            let size = op.magnitude as usize;
            crop(
                img,
                &CropSpec {
                    size,
                    origin: CropOrigin::Random,
                },
                op.seed,
            )
        }
    }
}
