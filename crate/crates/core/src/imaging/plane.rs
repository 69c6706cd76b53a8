use std::path::Path;

use image::{GrayImage, RgbImage};

use crate::error::{Error, Result};

/// Single-channel luma image, row-major, samples in [0, 1].
#[derive(Clone, Debug, PartialEq)]
pub struct Plane {
    h: usize,
    w: usize,
    data: Vec<f32>,
}

impl Plane {
    /// Builds a plane, clamping samples into [0, 1].
    pub fn new(h: usize, w: usize, mut data: Vec<f32>) -> Result<Self> {
        if h == 0 || w == 0 {
            return Err(Error::InvalidArgument(format!("plane dims must be positive, got {h}×{w}")));
        }
        if data.len() != h * w {
            return Err(Error::shape("plane", (h, w), data.len()));
        }
        for v in &mut data {
            *v = if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) };
        }
        Ok(Plane { h, w, data })
    }

    pub fn filled(h: usize, w: usize, value: f32) -> Result<Self> {
        Plane::new(h, w, vec![value; h * w])
    }

    pub fn from_fn(h: usize, w: usize, mut f: impl FnMut(usize, usize) -> f32) -> Result<Self> {
        let mut data = Vec::with_capacity(h * w);
        for r in 0..h {
            for c in 0..w {
                data.push(f(r, c));
            }
        }
        Plane::new(h, w, data)
    }

    pub fn h(&self) -> usize {
        self.h
    }

    pub fn w(&self) -> usize {
        self.w
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f32 {
        self.data[row * self.w + col]
    }

    /// size×size crop with top-left corner at (row, col).
    pub fn crop(&self, row: usize, col: usize, rows: usize, cols: usize) -> Result<Plane> {
        if row + rows > self.h || col + cols > self.w || rows == 0 || cols == 0 {
            return Err(Error::shape("crop", (self.h, self.w), (row, col, rows, cols)));
        }
        let mut data = Vec::with_capacity(rows * cols);
        for r in row..row + rows {
            data.extend_from_slice(&self.data[r * self.w + col..r * self.w + col + cols]);
        }
        Ok(Plane { h: rows, w: cols, data })
    }

    pub fn mse(&self, other: &Plane) -> Result<f64> {
        if (self.h, self.w) != (other.h, other.w) {
            return Err(Error::shape("mse", (self.h, self.w), (other.h, other.w)));
        }
        let sum: f64 = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| ((a - b) as f64).powi(2))
            .sum();
        Ok(sum / self.data.len() as f64)
    }

    /// Values are already in [0, 1]; crate-internal constructor skips the clamp.
    pub(crate) fn from_raw(h: usize, w: usize, data: Vec<f32>) -> Plane {
        debug_assert_eq!(data.len(), h * w);
        Plane { h, w, data }
    }
}

/// A decoded image: luma for processing, RGB kept for provenance.
#[derive(Debug)]
pub struct LoadedImage {
    pub plane: Plane,
    pub rgb: RgbImage,
}

/// Decodes PNG or JPEG and converts to BT.601 luma in [0, 1].
pub fn load_image(path: &Path) -> Result<LoadedImage> {
    let reader = image::ImageReader::open(path).map_err(|e| Error::io(path, e))?;
    let reader = reader.with_guessed_format().map_err(|e| Error::io(path, e))?;
    let img = reader.decode().map_err(|source| Error::Image {
        path: path.to_path_buf(),
        source,
    })?;
    let rgb = img.to_rgb8();
    let (w, h) = (rgb.width() as usize, rgb.height() as usize);
    let data = rgb
        .pixels()
        .map(|p| (0.299 * p[0] as f32 + 0.587 * p[1] as f32 + 0.114 * p[2] as f32) / 255.0)
        .collect();
    Ok(LoadedImage {
        plane: Plane::new(h, w, data)?,
        rgb,
    })
}

/// Writes an 8-bit grayscale PNG.
pub fn save_png(plane: &Plane, path: &Path) -> Result<()> {
    let bytes = plane.data.iter().map(|&v| (v * 255.0).round() as u8).collect();
    let img = GrayImage::from_raw(plane.w as u32, plane.h as u32, bytes).expect("sized buffer");
    img.save(path).map_err(|source| Error::Image {
        path: path.to_path_buf(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_rgb(dir: &Path, name: &str, px: [u8; 3]) -> std::path::PathBuf {
        let path = dir.join(name);
        RgbImage::from_pixel(4, 3, image::Rgb(px)).save(&path).unwrap();
        path
    }

    #[test]
    fn luma_of_primaries() {
        let dir = tempfile::tempdir().unwrap();
        let white = load_image(&write_rgb(dir.path(), "w.png", [255, 255, 255])).unwrap();
        assert_eq!((white.plane.h(), white.plane.w()), (3, 4));
        assert!(white.plane.data().iter().all(|&v| (v - 1.0).abs() < 1e-6));
        let black = load_image(&write_rgb(dir.path(), "b.png", [0, 0, 0])).unwrap();
        assert!(black.plane.data().iter().all(|&v| v == 0.0));
        let red = load_image(&write_rgb(dir.path(), "r.png", [255, 0, 0])).unwrap();
        assert!(red.plane.data().iter().all(|&v| (v - 0.299).abs() <= 1.0 / 255.0));
        assert_eq!(red.rgb.get_pixel(0, 0).0, [255, 0, 0]);
    }

    #[test]
    fn jpeg_decodes() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_rgb(dir.path(), "g.jpg", [128, 128, 128]);
        let img = load_image(&path).unwrap();
        assert!(img.plane.data().iter().all(|&v| (v - 128.0 / 255.0).abs() < 3.0 / 255.0));
    }

    #[test]
    fn unreadable_files_name_the_path() {
        let dir = tempfile::tempdir().unwrap();
        let missing = dir.path().join("missing.png");
        assert!(load_image(&missing).unwrap_err().to_string().contains("missing.png"));
        let junk = dir.path().join("junk.png");
        std::fs::write(&junk, b"not an image").unwrap();
        assert!(load_image(&junk).unwrap_err().to_string().contains("junk.png"));
    }

    #[test]
    fn png_roundtrip_is_8bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let p = Plane::from_fn(5, 7, |r, c| ((r * 7 + c) * 7) as f32 / 255.0).unwrap();
        let path = dir.path().join("p.png");
        save_png(&p, &path).unwrap();
        let q = load_image(&path).unwrap().plane;
        assert!(p.data().iter().zip(q.data()).all(|(a, b)| (a - b).abs() < 1e-6));
    }

    #[test]
    fn new_clamps_and_validates() {
        let p = Plane::new(1, 3, vec![-1.0, 0.5, 2.0]).unwrap();
        assert_eq!(p.data(), &[0.0, 0.5, 1.0]);
        assert!(Plane::new(0, 3, vec![]).is_err());
        assert!(Plane::new(2, 2, vec![0.0; 3]).is_err());
    }
}
