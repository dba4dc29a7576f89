//! Procedural pristine-image generation for demos and tests.
//!
//! No benchmark datasets ship with this crate, so experiments that need
//! pristine sources synthesize them: smooth color gradients, a few random
//! rectangles and disks, and a sinusoidal texture field, all seeded. The
//! images are not photorealistic; they only need enough structure that
//! blurring, noising, and compressing them is measurable.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::image::{save_image, ImageTensor};
use crate::rng::{mix, Rng};

/// Deterministic textured image. Tonal statistics are kept within a
/// mid-exposure band, like curated photo collections: distortions must stay
/// distinguishable from source variation at desk scale.
pub fn synth_image(height: usize, width: usize, seed: u64) -> ImageTensor {
    let mut rng = Rng::from_seed(mix(&[seed, 0x5359_4e54_4849_4d47]));
    let base: [f64; 3] = [
        rng.range_f64(0.45, 0.55),
        rng.range_f64(0.45, 0.55),
        rng.range_f64(0.45, 0.55),
    ];
    let grad: [f64; 3] = [
        rng.range_f64(-0.2, 0.2),
        rng.range_f64(-0.2, 0.2),
        rng.range_f64(-0.2, 0.2),
    ];
    let freq_r = rng.range_f64(2.0, 7.0);
    let freq_c = rng.range_f64(2.0, 7.0);
    let phase = rng.range_f64(0.0, std::f64::consts::TAU);
    let amp = rng.range_f64(0.05, 0.12);

    let mut data = Vec::with_capacity(height * width * 3);
    for r in 0..height {
        for c in 0..width {
            let fr = r as f64 / height as f64;
            let fc = c as f64 / width as f64;
            let wave = amp
                * (freq_r * std::f64::consts::TAU * fr
                    + freq_c * std::f64::consts::TAU * fc
                    + phase)
                    .sin();
            for ch in 0..3 {
                let v = base[ch] + grad[ch] * (fr + fc) / 2.0 + wave;
                data.push(v.clamp(0.0, 1.0));
            }
        }
    }
    let mut img = ImageTensor::from_clamped(height, width, data);

    // A few solid shapes give the image edges and flat regions.
    let shapes = 3 + rng.below(4);
    for _ in 0..shapes {
        img = stamp_shape(&img, &mut rng);
    }
    img
}

fn stamp_shape(img: &ImageTensor, rng: &mut Rng) -> ImageTensor {
    let (h, w) = (img.height(), img.width());
    let mut data = img.data().to_vec();
    let color = [
        rng.range_f64(0.2, 0.8),
        rng.range_f64(0.2, 0.8),
        rng.range_f64(0.2, 0.8),
    ];
    let cy = rng.below(h) as i64;
    let cx = rng.below(w) as i64;
    let extent = (h.min(w) as f64 * rng.range_f64(0.08, 0.25)) as i64;
    let circular = rng.next_f64() < 0.5;
    for r in (cy - extent).max(0)..(cy + extent).min(h as i64) {
        for c in (cx - extent).max(0)..(cx + extent).min(w as i64) {
            let inside = if circular {
                let dy = r - cy;
                let dx = c - cx;
                dy * dy + dx * dx <= extent * extent
            } else {
                true
            };
            if inside {
                let i = (r as usize * w + c as usize) * 3;
                data[i..i + 3].copy_from_slice(&color);
            }
        }
    }
    ImageTensor::from_clamped(h, w, data)
}

/// Writes `count` synthetic pristine PNGs into `dir` and returns their paths.
pub fn write_synth_corpus(
    dir: impl AsRef<Path>,
    count: usize,
    height: usize,
    width: usize,
    seed: u64,
) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    if count == 0 {
        return Err(Error::InvalidConfig("count must be positive".into()));
    }
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut paths = Vec::with_capacity(count);
    for i in 0..count {
        let img = synth_image(height, width, mix(&[seed, i as u64]));
        let path = dir.join(format!("synth{i:03}.png"));
        save_image(&img, &path)?;
        paths.push(path);
    }
    Ok(paths)
}
