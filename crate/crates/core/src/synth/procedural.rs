//! Seeded procedural source images: hard-edged shapes, fine stripes and
//! multi-octave noise, so every degradation level removes visible detail.

use std::path::Path;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::imaging::{save_png, Plane};
use crate::numkernel::seeded_rng;

/// Value noise: a random lattice with `cell`-pixel spacing, bilinearly
/// interpolated.
fn value_noise(h: usize, w: usize, cell: usize, rng: &mut ChaCha8Rng) -> Vec<f32> {
    let gh = h / cell + 2;
    let gw = w / cell + 2;
    let grid: Vec<f32> = (0..gh * gw).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut out = vec![0.0; h * w];
    for r in 0..h {
        let fy = r as f32 / cell as f32;
        let y0 = fy as usize;
        let ty = fy - y0 as f32;
        for c in 0..w {
            let fx = c as f32 / cell as f32;
            let x0 = fx as usize;
            let tx = fx - x0 as f32;
            let g = |y: usize, x: usize| grid[y * gw + x];
            let top = g(y0, x0) * (1.0 - tx) + g(y0, x0 + 1) * tx;
            let bottom = g(y0 + 1, x0) * (1.0 - tx) + g(y0 + 1, x0 + 1) * tx;
            out[r * w + c] = top * (1.0 - ty) + bottom * ty;
        }
    }
    out
}

enum Shape {
    Rect { r0: usize, c0: usize, r1: usize, c1: usize },
    Disc { r: f32, c: f32, radius: f32 },
    Band { r: f32, c: f32, nr: f32, nc: f32, half: f32 },
}

impl Shape {
    fn random(h: usize, w: usize, rng: &mut ChaCha8Rng) -> Self {
        let scale = rng.random_range(0.02..0.3) * h.min(w) as f32;
        let r = rng.random_range(0.0..h as f32);
        let c = rng.random_range(0.0..w as f32);
        match rng.random_range(0..3) {
            0 => {
                let dh = scale * rng.random_range(0.3..1.5);
                let dw = scale * rng.random_range(0.3..1.5);
                Shape::Rect {
                    r0: r as usize,
                    c0: c as usize,
                    r1: ((r + dh) as usize).min(h),
                    c1: ((c + dw) as usize).min(w),
                }
            }
            1 => Shape::Disc { r, c, radius: scale / 2.0 },
            _ => {
                let theta: f32 = rng.random_range(0.0..std::f32::consts::PI);
                Shape::Band {
                    r,
                    c,
                    nr: theta.cos(),
                    nc: theta.sin(),
                    half: rng.random_range(0.5..4.0),
                }
            }
        }
    }

    /// Bounding rows and columns touched by the shape.
    fn bounds(&self, h: usize, w: usize) -> (usize, usize, usize, usize) {
        match *self {
            Shape::Rect { r0, c0, r1, c1 } => (r0, r1, c0, c1),
            Shape::Disc { r, c, radius } => (
                (r - radius).max(0.0) as usize,
                ((r + radius + 1.0) as usize).min(h),
                (c - radius).max(0.0) as usize,
                ((c + radius + 1.0) as usize).min(w),
            ),
            Shape::Band { .. } => (0, h, 0, w),
        }
    }

    fn contains(&self, row: usize, col: usize) -> bool {
        let (y, x) = (row as f32, col as f32);
        match *self {
            Shape::Rect { r0, c0, r1, c1 } => (r0..r1).contains(&row) && (c0..c1).contains(&col),
            Shape::Disc { r, c, radius } => (y - r).powi(2) + (x - c).powi(2) <= radius * radius,
            Shape::Band { r, c, nr, nc, half } => ((y - r) * nr + (x - c) * nc).abs() <= half,
        }
    }
}

/// Fill pattern of a shape: flat, stripes, or a checkerboard of small period.
fn fill(kind: u8, level: f32, contrast: f32, period: usize, row: usize, col: usize) -> f32 {
    match kind {
        0 => level,
        1 => level + if ((row + col) / period).is_multiple_of(2) { contrast } else { -contrast },
        _ => level + if (row / period + col / period).is_multiple_of(2) { contrast } else { -contrast },
    }
}

/// One h×w procedural image drawn on top of an oversized canvas offset by
/// (`dy`, `dx`), so consecutive frames of a video can pan over one scene.
fn render(h: usize, w: usize, seed: u64, dy: usize, dx: usize, canvas: usize) -> Result<Plane> {
    let ch = h + canvas;
    let cw = w + canvas;
    let mut rng = seeded_rng(seed);
    let mut img = vec![0f32; ch * cw];
    let base = rng.random_range(0.3..0.7);
    let (gy, gx) = (rng.random_range(-0.2..0.2) / ch as f32, rng.random_range(-0.2..0.2) / cw as f32);
    for (i, v) in img.iter_mut().enumerate() {
        *v = base + gy * (i / cw) as f32 + gx * (i % cw) as f32;
    }
    for (cell, amp) in [(96, 0.15), (24, 0.08), (6, 0.05)] {
        for (v, n) in img.iter_mut().zip(value_noise(ch, cw, cell, &mut rng)) {
            *v += amp * n;
        }
    }
    let shapes = rng.random_range(40..90);
    for _ in 0..shapes {
        let shape = Shape::random(ch, cw, &mut rng);
        let level: f32 = rng.random_range(0.0..1.0);
        let kind = rng.random_range(0..3u8);
        let contrast = rng.random_range(0.05..0.25);
        let period = rng.random_range(1..4);
        let (r0, r1, c0, c1) = shape.bounds(ch, cw);
        for row in r0..r1 {
            for col in c0..c1 {
                if shape.contains(row, col) {
                    img[row * cw + col] = fill(kind, level, contrast, period, row, col);
                }
            }
        }
    }
    let grain = rng.random_range(0.01..0.04);
    for v in img.iter_mut() {
        *v += rng.random_range(-grain..grain);
    }
    Plane::from_fn(h, w, |r, c| img[(r + dy) * cw + c + dx])
}

pub fn procedural_image(h: usize, w: usize, seed: u64) -> Result<Plane> {
    render(h, w, seed, 0, 0, 0)
}

/// `frames` views of one scene panning diagonally by `step` pixels per frame.
pub fn procedural_video(h: usize, w: usize, frames: usize, step: usize, seed: u64) -> Result<Vec<Plane>> {
    let canvas = step * frames.saturating_sub(1);
    (0..frames).map(|f| render(h, w, seed, f * step, f * step, canvas)).collect()
}

/// Writes `images` PNG sources and `videos` frame directories into `dir`.
pub fn write_procedural_corpus(
    dir: &Path,
    images: usize,
    videos: usize,
    frames: usize,
    size: (usize, usize),
    seed: u64,
) -> Result<()> {
    if images + videos == 0 {
        return Err(Error::InvalidArgument("corpus needs at least one source".into()));
    }
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let (h, w) = size;
    for i in 0..images {
        let p = procedural_image(h, w, seed.wrapping_mul(1_000_003).wrapping_add(i as u64))?;
        save_png(&p, &dir.join(format!("img_{i:03}.png")))?;
    }
    for v in 0..videos {
        let vdir = dir.join(format!("video_{v:02}"));
        std::fs::create_dir_all(&vdir).map_err(|e| Error::io(&vdir, e))?;
        let clip = procedural_video(h, w, frames, 6, seed.wrapping_mul(7_000_003).wrapping_add((v as u64 + 1) << 32))?;
        for (f, p) in clip.iter().enumerate() {
            save_png(p, &vdir.join(format!("frame_{f:04}.png")))?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeded_and_distinct() {
        let a = procedural_image(96, 128, 1).unwrap();
        assert_eq!(a, procedural_image(96, 128, 1).unwrap());
        assert_ne!(a, procedural_image(96, 128, 2).unwrap());
        assert!(a.data().iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn video_frames_pan() {
        let v = procedural_video(80, 80, 3, 6, 4).unwrap();
        assert_eq!(v.len(), 3);
        assert_eq!(v[0].get(6, 6), v[1].get(0, 0));
        assert_eq!(v[1].get(10, 20), v[2].get(4, 14));
    }
}
