//! Color-space conversions used by the distortion models.
//!
//! All conversions operate on unit-interval sRGB triples. Lab uses the D65
//! white point; YCbCr uses the BT.601 full-range coefficients.

/// RGB -> YCbCr, all components in [0, 1] (chroma centered at 0.5).
pub fn rgb_to_ycbcr(rgb: [f64; 3]) -> [f64; 3] {
    let [r, g, b] = rgb;
    let y = 0.299 * r + 0.587 * g + 0.114 * b;
    let cb = 0.564 * (b - y) + 0.5;
    let cr = 0.713 * (r - y) + 0.5;
    [y, cb, cr]
}

pub fn ycbcr_to_rgb(ycc: [f64; 3]) -> [f64; 3] {
    let [y, cb, cr] = ycc;
    let r = y + (cr - 0.5) / 0.713;
    let b = y + (cb - 0.5) / 0.564;
    let g = (y - 0.299 * r - 0.114 * b) / 0.587;
    [r, g, b]
}

/// Luminance (the Y of YCbCr).
pub fn luminance(rgb: [f64; 3]) -> f64 {
    0.299 * rgb[0] + 0.587 * rgb[1] + 0.114 * rgb[2]
}

/// RGB -> HSV with H in [0, 1) (scaled from degrees), S and V in [0, 1].
pub fn rgb_to_hsv(rgb: [f64; 3]) -> [f64; 3] {
    let [r, g, b] = rgb;
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = max - min;
    let h = if delta == 0.0 {
        0.0
    } else if max == r {
        (((g - b) / delta).rem_euclid(6.0)) / 6.0
    } else if max == g {
        ((b - r) / delta + 2.0) / 6.0
    } else {
        ((r - g) / delta + 4.0) / 6.0
    };
    let s = if max == 0.0 { 0.0 } else { delta / max };
    [h, s, max]
}

pub fn hsv_to_rgb(hsv: [f64; 3]) -> [f64; 3] {
    let [h, s, v] = hsv;
    let h6 = (h.rem_euclid(1.0)) * 6.0;
    let c = v * s;
    let x = c * (1.0 - (h6.rem_euclid(2.0) - 1.0).abs());
    let (r1, g1, b1) = match h6 as usize {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = v - c;
    [r1 + m, g1 + m, b1 + m]
}

// sRGB <-> CIE Lab (D65).

fn srgb_to_linear(c: f64) -> f64 {
    if c <= 0.04045 {
        c / 12.92
    } else {
        ((c + 0.055) / 1.055).powf(2.4)
    }
}

fn linear_to_srgb(c: f64) -> f64 {
    if c <= 0.003_130_8 {
        12.92 * c
    } else {
        1.055 * c.powf(1.0 / 2.4) - 0.055
    }
}

const D65: [f64; 3] = [0.95047, 1.0, 1.08883];

fn lab_f(t: f64) -> f64 {
    const DELTA: f64 = 6.0 / 29.0;
    if t > DELTA * DELTA * DELTA {
        t.cbrt()
    } else {
        t / (3.0 * DELTA * DELTA) + 4.0 / 29.0
    }
}

fn lab_f_inv(t: f64) -> f64 {
    const DELTA: f64 = 6.0 / 29.0;
    if t > DELTA {
        t * t * t
    } else {
        3.0 * DELTA * DELTA * (t - 4.0 / 29.0)
    }
}

/// RGB -> Lab with L in [0, 100], a/b roughly in [-128, 128].
pub fn rgb_to_lab(rgb: [f64; 3]) -> [f64; 3] {
    let rl = srgb_to_linear(rgb[0]);
    let gl = srgb_to_linear(rgb[1]);
    let bl = srgb_to_linear(rgb[2]);
    let x = 0.4124564 * rl + 0.3575761 * gl + 0.1804375 * bl;
    let y = 0.2126729 * rl + 0.7151522 * gl + 0.0721750 * bl;
    let z = 0.0193339 * rl + 0.1191920 * gl + 0.9503041 * bl;
    let fx = lab_f(x / D65[0]);
    let fy = lab_f(y / D65[1]);
    let fz = lab_f(z / D65[2]);
    [116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)]
}

pub fn lab_to_rgb(lab: [f64; 3]) -> [f64; 3] {
    let fy = (lab[0] + 16.0) / 116.0;
    let fx = fy + lab[1] / 500.0;
    let fz = fy - lab[2] / 200.0;
    let x = D65[0] * lab_f_inv(fx);
    let y = D65[1] * lab_f_inv(fy);
    let z = D65[2] * lab_f_inv(fz);
    let rl = 3.2404542 * x - 1.5371385 * y - 0.4985314 * z;
    let gl = -0.9692660 * x + 1.8760108 * y + 0.0415560 * z;
    let bl = 0.0556434 * x - 0.2040259 * y + 1.0572252 * z;
    [
        linear_to_srgb(rl.max(0.0)),
        linear_to_srgb(gl.max(0.0)),
        linear_to_srgb(bl.max(0.0)),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;

    fn close3(a: [f64; 3], b: [f64; 3], tol: f64) -> bool {
        a.iter().zip(&b).all(|(x, y)| (x - y).abs() < tol)
    }

    #[test]
    fn ycbcr_round_trip() {
        let mut rng = Rng::from_seed(1);
        for _ in 0..500 {
            let rgb = [rng.next_f64(), rng.next_f64(), rng.next_f64()];
            let back = ycbcr_to_rgb(rgb_to_ycbcr(rgb));
            assert!(close3(rgb, back, 1e-12), "{rgb:?} vs {back:?}");
        }
    }

    #[test]
    fn hsv_round_trip() {
        let mut rng = Rng::from_seed(2);
        for _ in 0..500 {
            let rgb = [rng.next_f64(), rng.next_f64(), rng.next_f64()];
            let back = hsv_to_rgb(rgb_to_hsv(rgb));
            assert!(close3(rgb, back, 1e-12), "{rgb:?} vs {back:?}");
        }
    }

    #[test]
    fn lab_round_trip_and_anchors() {
        let mut rng = Rng::from_seed(3);
        for _ in 0..500 {
            let rgb = [rng.next_f64(), rng.next_f64(), rng.next_f64()];
            let back = lab_to_rgb(rgb_to_lab(rgb));
            assert!(close3(rgb, back, 5e-6), "{rgb:?} vs {back:?}");
        }
        // White and black anchors (the standard matrix rows sum to the
        // white point only to ~7 significant digits).
        let white = rgb_to_lab([1.0, 1.0, 1.0]);
        assert!((white[0] - 100.0).abs() < 1e-4);
        assert!(white[1].abs() < 1e-3 && white[2].abs() < 1e-3);
        let black = rgb_to_lab([0.0, 0.0, 0.0]);
        assert!(black[0].abs() < 1e-9);
    }

    #[test]
    fn luminance_weights() {
        assert!((luminance([1.0, 1.0, 1.0]) - 1.0).abs() < 1e-12);
        assert!((luminance([1.0, 0.0, 0.0]) - 0.299).abs() < 1e-12);
    }
}
