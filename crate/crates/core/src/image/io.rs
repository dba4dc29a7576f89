//! PNG and binary PPM image files.
//!
//! Both formats are lossless 8-bit RGB, so `load(save(img))` recovers the
//! quantized image exactly. Quantization is `round(v * 255)` with ties away
//! from zero, giving a worst-case round-trip error of 1/510 per channel.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use image::{ImageFormat, ImageReader};

use super::ImageTensor;
use crate::error::{Error, Result};

/// Loads an 8-bit RGB image (PNG or binary PPM) and maps bytes to v/255.
pub fn load_image(path: impl AsRef<Path>) -> Result<ImageTensor> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.starts_with(b"P6") {
        return decode_ppm(path, &bytes);
    }
    if bytes.starts_with(&[0x89, b'P', b'N', b'G']) {
        return decode_png(path, &bytes);
    }
    Err(Error::UnsupportedFormat(format!(
        "{}: expected PNG or binary PPM",
        path.display()
    )))
}

/// Saves as PNG or binary PPM depending on the file extension.
pub fn save_image(img: &ImageTensor, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase());
    match ext.as_deref() {
        Some("png") => save_png(img, path),
        Some("ppm") => save_ppm(img, path),
        other => Err(Error::UnsupportedFormat(format!(
            "cannot save `{}`: unknown extension {:?}",
            path.display(),
            other
        ))),
    }
}

/// Quantizes a unit-interval value to an 8-bit byte, ties away from zero.
#[inline]
pub fn quantize(v: f64) -> u8 {
    (v * 255.0).round() as u8
}

fn decode_png(path: &Path, bytes: &[u8]) -> Result<ImageTensor> {
    let reader = ImageReader::with_format(std::io::Cursor::new(bytes), ImageFormat::Png);
    let dynamic = reader
        .decode()
        .map_err(|e| Error::decode(path, e.to_string()))?;
    let rgb = match dynamic {
        image::DynamicImage::ImageRgb8(img) => img,
        other => {
            return Err(Error::decode(
                path,
                format!("expected 8-bit RGB, got {:?}", other.color()),
            ))
        }
    };
    let (w, h) = (rgb.width() as usize, rgb.height() as usize);
    let data = rgb.as_raw().iter().map(|&b| b as f64 / 255.0).collect();
    ImageTensor::new(h, w, data)
}

fn decode_ppm(path: &Path, bytes: &[u8]) -> Result<ImageTensor> {
    // Binary PPM: "P6" <ws> width <ws> height <ws> maxval <single ws> raster.
    // Comments (# to end of line) may appear in the header.
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for field in &mut fields {
        pos = skip_ppm_whitespace(bytes, pos);
        let start = pos;
        while pos < bytes.len() && bytes[pos].is_ascii_digit() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::decode(path, "malformed PPM header"));
        }
        let text = std::str::from_utf8(&bytes[start..pos]).unwrap();
        *field = text
            .parse()
            .map_err(|_| Error::decode(path, "bad PPM header field"))?;
    }
    let (width, height, maxval) = (fields[0], fields[1], fields[2]);
    if maxval != 255 {
        return Err(Error::decode(
            path,
            format!("only maxval 255 supported, got {maxval}"),
        ));
    }
    pos += 1; // single whitespace byte after maxval
    let need = width * height * 3;
    let raster = bytes
        .get(pos..pos + need)
        .ok_or_else(|| Error::decode(path, "truncated PPM raster"))?;
    let data = raster.iter().map(|&b| b as f64 / 255.0).collect();
    ImageTensor::new(height, width, data)
}

fn skip_ppm_whitespace(bytes: &[u8], mut pos: usize) -> usize {
    loop {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if pos < bytes.len() && bytes[pos] == b'#' {
            while pos < bytes.len() && bytes[pos] != b'\n' {
                pos += 1;
            }
        } else {
            return pos;
        }
    }
}

fn quantized_bytes(img: &ImageTensor) -> Vec<u8> {
    img.data().iter().map(|&v| quantize(v)).collect()
}

fn save_png(img: &ImageTensor, path: &Path) -> Result<()> {
    let buf = image::RgbImage::from_raw(
        img.width() as u32,
        img.height() as u32,
        quantized_bytes(img),
    )
    .expect("raw buffer length matches dimensions");
    buf.save_with_format(path, ImageFormat::Png)
        .map_err(|e| Error::decode(path, e.to_string()))
}

fn save_ppm(img: &ImageTensor, path: &Path) -> Result<()> {
    let mut out = Vec::with_capacity(32 + img.data().len());
    write!(out, "P6\n{} {}\n255\n", img.width(), img.height()).unwrap();
    out.extend_from_slice(&quantized_bytes(img));
    fs::write(path, out).map_err(|e| Error::io(path, e))
}
