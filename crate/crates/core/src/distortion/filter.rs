//! Convolution and resampling kernels shared by the distortion models.
//!
//! Everything works on single-channel f64 planes with edge replication; the
//! model code splits/merges channels as needed.

use crate::image::ImageTensor;

/// One channel of an image as a contiguous plane.
pub fn channel_plane(img: &ImageTensor, ch: usize) -> Vec<f64> {
    let (h, w) = (img.height(), img.width());
    let mut plane = Vec::with_capacity(h * w);
    for r in 0..h {
        for c in 0..w {
            plane.push(img.get(r, c, ch));
        }
    }
    plane
}

/// Reassembles three planes into an image, clamping to [0, 1].
pub fn merge_planes(h: usize, w: usize, planes: [&[f64]; 3]) -> ImageTensor {
    let mut data = Vec::with_capacity(h * w * 3);
    for i in 0..h * w {
        data.push(planes[0][i]);
        data.push(planes[1][i]);
        data.push(planes[2][i]);
    }
    ImageTensor::from_clamped(h, w, data)
}

#[inline]
fn clamped(plane: &[f64], h: usize, w: usize, r: i64, c: i64) -> f64 {
    let r = r.clamp(0, h as i64 - 1) as usize;
    let c = c.clamp(0, w as i64 - 1) as usize;
    plane[r * w + c]
}

/// Normalized 1-D Gaussian taps with radius ceil(3 sigma).
pub fn gaussian_taps(sigma: f64) -> Vec<f64> {
    assert!(sigma > 0.0);
    let radius = (3.0 * sigma).ceil() as i64;
    let mut taps = Vec::with_capacity((2 * radius + 1) as usize);
    let denom = 2.0 * sigma * sigma;
    for k in -radius..=radius {
        taps.push((-(k * k) as f64 / denom).exp());
    }
    let sum: f64 = taps.iter().sum();
    for t in &mut taps {
        *t /= sum;
    }
    taps
}

/// Separable Gaussian blur of one plane, edge replicated.
pub fn gaussian_blur_plane(plane: &[f64], h: usize, w: usize, sigma: f64) -> Vec<f64> {
    let taps = gaussian_taps(sigma);
    let radius = (taps.len() / 2) as i64;
    let mut tmp = vec![0.0; h * w];
    for r in 0..h {
        for c in 0..w {
            let mut acc = 0.0;
            for (k, &t) in taps.iter().enumerate() {
                acc += t * clamped(plane, h, w, r as i64, c as i64 + k as i64 - radius);
            }
            tmp[r * w + c] = acc;
        }
    }
    let mut out = vec![0.0; h * w];
    for r in 0..h {
        for c in 0..w {
            let mut acc = 0.0;
            for (k, &t) in taps.iter().enumerate() {
                acc += t * clamped(&tmp, h, w, r as i64 + k as i64 - radius, c as i64);
            }
            out[r * w + c] = acc;
        }
    }
    out
}

/// Gaussian blur applied to all three channels.
pub fn gaussian_blur(img: &ImageTensor, sigma: f64) -> ImageTensor {
    let (h, w) = (img.height(), img.width());
    let planes: Vec<Vec<f64>> = (0..3)
        .map(|ch| gaussian_blur_plane(&channel_plane(img, ch), h, w, sigma))
        .collect();
    merge_planes(h, w, [&planes[0], &planes[1], &planes[2]])
}

/// Dense 2-D convolution of one plane with an arbitrary kernel, edge
/// replicated. The kernel must already be normalized.
pub fn conv2d_plane(
    plane: &[f64],
    h: usize,
    w: usize,
    kernel: &[f64],
    kh: usize,
    kw: usize,
) -> Vec<f64> {
    let (cy, cx) = (kh as i64 / 2, kw as i64 / 2);
    let mut out = vec![0.0; h * w];
    for r in 0..h {
        for c in 0..w {
            let mut acc = 0.0;
            for kr in 0..kh {
                for kc in 0..kw {
                    let weight = kernel[kr * kw + kc];
                    if weight == 0.0 {
                        continue;
                    }
                    acc += weight
                        * clamped(
                            plane,
                            h,
                            w,
                            r as i64 + kr as i64 - cy,
                            c as i64 + kc as i64 - cx,
                        );
                }
            }
            out[r * w + c] = acc;
        }
    }
    out
}

/// Convolves all channels with the same kernel.
pub fn convolve(img: &ImageTensor, kernel: &[f64], kh: usize, kw: usize) -> ImageTensor {
    let (h, w) = (img.height(), img.width());
    let planes: Vec<Vec<f64>> = (0..3)
        .map(|ch| conv2d_plane(&channel_plane(img, ch), h, w, kernel, kh, kw))
        .collect();
    merge_planes(h, w, [&planes[0], &planes[1], &planes[2]])
}

/// Normalized disk kernel of the given radius (circular aperture).
pub fn disk_kernel(radius: usize) -> (Vec<f64>, usize) {
    let side = 2 * radius + 1;
    let mut kernel = vec![0.0; side * side];
    let r2 = (radius as f64 + 0.5) * (radius as f64 + 0.5);
    let mut sum = 0.0;
    for y in 0..side {
        for x in 0..side {
            let dy = y as f64 - radius as f64;
            let dx = x as f64 - radius as f64;
            if dy * dy + dx * dx <= r2 {
                kernel[y * side + x] = 1.0;
                sum += 1.0;
            }
        }
    }
    for v in &mut kernel {
        *v /= sum;
    }
    (kernel, side)
}

/// Normalized line kernel of the given length and angle, rasterized with
/// bilinear splatting so fractional positions contribute smoothly.
pub fn line_kernel(length: usize, angle_degrees: f64) -> (Vec<f64>, usize) {
    assert!(length >= 1);
    let side = length | 1; // odd side so the line is centered
    let mut kernel = vec![0.0; side * side];
    let center = (side / 2) as f64;
    let rad = angle_degrees.to_radians();
    let (dy, dx) = (rad.sin(), rad.cos());
    let half = (length as f64 - 1.0) / 2.0;
    let samples = length * 4;
    for s in 0..=samples {
        let t = -half + (s as f64 / samples as f64) * (length as f64 - 1.0);
        let y = center + t * dy;
        let x = center + t * dx;
        let y0 = y.floor();
        let x0 = x.floor();
        let fy = y - y0;
        let fx = x - x0;
        for (oy, wy) in [(0i64, 1.0 - fy), (1, fy)] {
            for (ox, wx) in [(0i64, 1.0 - fx), (1, fx)] {
                let yy = y0 as i64 + oy;
                let xx = x0 as i64 + ox;
                if (0..side as i64).contains(&yy) && (0..side as i64).contains(&xx) {
                    kernel[yy as usize * side + xx as usize] += wy * wx;
                }
            }
        }
    }
    let sum: f64 = kernel.iter().sum();
    for v in &mut kernel {
        *v /= sum;
    }
    (kernel, side)
}

/// Box-average downscale by an integer factor followed by nearest-neighbor
/// upsampling back to the original size (one fused pass).
pub fn pixelate(img: &ImageTensor, factor: usize) -> ImageTensor {
    assert!(factor >= 1);
    let (h, w) = (img.height(), img.width());
    let mut data = vec![0.0; h * w * 3];
    let blocks_r = h.div_ceil(factor);
    let blocks_c = w.div_ceil(factor);
    for br in 0..blocks_r {
        for bc in 0..blocks_c {
            let r0 = br * factor;
            let c0 = bc * factor;
            let r1 = (r0 + factor).min(h);
            let c1 = (c0 + factor).min(w);
            let count = ((r1 - r0) * (c1 - c0)) as f64;
            let mut mean = [0.0; 3];
            for r in r0..r1 {
                for c in c0..c1 {
                    for (m, p) in mean.iter_mut().zip(img.pixel(r, c)) {
                        *m += p;
                    }
                }
            }
            for m in &mut mean {
                *m /= count;
            }
            for r in r0..r1 {
                for c in c0..c1 {
                    let i = (r * w + c) * 3;
                    data[i] = mean[0];
                    data[i + 1] = mean[1];
                    data[i + 2] = mean[2];
                }
            }
        }
    }
    ImageTensor::from_clamped(h, w, data)
}

/// Area-average downscale of the whole image to `side x side`; used for
/// feature extraction.
pub fn downscale_to(img: &ImageTensor, side: usize) -> ImageTensor {
    assert!(side >= 1);
    let (h, w) = (img.height(), img.width());
    let mut data = vec![0.0; side * side * 3];
    for orow in 0..side {
        let r0 = orow * h / side;
        let r1 = (((orow + 1) * h).div_ceil(side)).max(r0 + 1).min(h);
        for ocol in 0..side {
            let c0 = ocol * w / side;
            let c1 = (((ocol + 1) * w).div_ceil(side)).max(c0 + 1).min(w);
            let count = ((r1 - r0) * (c1 - c0)) as f64;
            let mut mean = [0.0; 3];
            for r in r0..r1 {
                for c in c0..c1 {
                    for (m, p) in mean.iter_mut().zip(img.pixel(r, c)) {
                        *m += p;
                    }
                }
            }
            let i = (orow * side + ocol) * 3;
            for ch in 0..3 {
                data[i + ch] = mean[ch] / count;
            }
        }
    }
    ImageTensor::from_clamped(side, side, data)
}

/// Sobel gradient magnitude of the luminance plane, normalized to [0, 1] by
/// its maximum (all-zeros if the image is constant).
pub fn normalized_gradient_magnitude(img: &ImageTensor) -> Vec<f64> {
    let (h, w) = (img.height(), img.width());
    let mut luma = vec![0.0; h * w];
    for r in 0..h {
        for c in 0..w {
            luma[r * w + c] = super::color::luminance(img.pixel(r, c));
        }
    }
    let mut mag = vec![0.0; h * w];
    let mut max = 0.0f64;
    for r in 0..h {
        for c in 0..w {
            let s = |dr: i64, dc: i64| clamped(&luma, h, w, r as i64 + dr, c as i64 + dc);
            let gx = (s(-1, 1) + 2.0 * s(0, 1) + s(1, 1)) - (s(-1, -1) + 2.0 * s(0, -1) + s(1, -1));
            let gy = (s(1, -1) + 2.0 * s(1, 0) + s(1, 1)) - (s(-1, -1) + 2.0 * s(-1, 0) + s(-1, 1));
            let m = (gx * gx + gy * gy).sqrt();
            mag[r * w + c] = m;
            max = max.max(m);
        }
    }
    if max > 0.0 {
        for m in &mut mag {
            *m /= max;
        }
    }
    mag
}
