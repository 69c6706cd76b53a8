//! Harris corner response and greedy non-maximal suppression.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::Plane;

/// Detector constants. Defaults: κ = 0.05, σ = 1.5 (window truncated at 3σ),
/// NMS radius 10, threshold 1% of the peak response, at most 200 corners.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CornerConfig {
    pub kappa: f64,
    pub sigma: f64,
    pub nms_radius: usize,
    pub rel_threshold: f64,
    pub max_corners: usize,
}

impl Default for CornerConfig {
    fn default() -> Self {
        CornerConfig {
            kappa: 0.05,
            sigma: 1.5,
            nms_radius: 10,
            rel_threshold: 0.01,
            max_corners: 200,
        }
    }
}

/// Real-valued map aligned with a plane.
#[derive(Clone, Debug, PartialEq)]
pub struct ResponseMap {
    pub h: usize,
    pub w: usize,
    pub data: Vec<f64>,
}

impl ResponseMap {
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.w + col]
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Corner {
    pub row: usize,
    pub col: usize,
    pub response: f64,
}

/// Corners sorted by descending response, pairwise Chebyshev distance
/// greater than the suppression radius.
#[derive(Clone, Debug, PartialEq)]
pub struct CornerSet {
    pub h: usize,
    pub w: usize,
    pub points: Vec<Corner>,
}

impl CornerSet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn to_mask(&self) -> Mask {
        let mut bits = vec![0u8; self.h * self.w];
        for p in &self.points {
            bits[p.row * self.w + p.col] = 1;
        }
        Mask {
            h: self.h,
            w: self.w,
            bits,
        }
    }

    /// `row,col,response` lines with a header.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("row,col,response\n");
        for p in &self.points {
            let _ = writeln!(s, "{},{},{}", p.row, p.col, p.response);
        }
        s
    }
}

/// Binary grid; `bits` holds 0 or 1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mask {
    pub h: usize,
    pub w: usize,
    pub bits: Vec<u8>,
}

impl Mask {
    pub fn zeros(h: usize, w: usize) -> Self {
        Mask {
            h,
            w,
            bits: vec![0; h * w],
        }
    }

    pub fn from_points(h: usize, w: usize, points: &[(usize, usize)]) -> Result<Self> {
        let mut m = Mask::zeros(h, w);
        for &(r, c) in points {
            if r >= h || c >= w {
                return Err(Error::shape("mask point", (h, w), (r, c)));
            }
            m.bits[r * w + c] = 1;
        }
        Ok(m)
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        self.bits[row * self.w + col] != 0
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b != 0).count()
    }
}

fn sobel(p: &Plane) -> (Vec<f64>, Vec<f64>) {
    let (h, w) = (p.h(), p.w());
    let at = |r: isize, c: isize| -> f64 {
        let r = r.clamp(0, h as isize - 1) as usize;
        let c = c.clamp(0, w as isize - 1) as usize;
        p.get(r, c) as f64
    };
    let mut gx = vec![0.0; h * w];
    let mut gy = vec![0.0; h * w];
    for r in 0..h as isize {
        for c in 0..w as isize {
            let i = r as usize * w + c as usize;
            gx[i] = (at(r - 1, c + 1) + 2.0 * at(r, c + 1) + at(r + 1, c + 1))
                - (at(r - 1, c - 1) + 2.0 * at(r, c - 1) + at(r + 1, c - 1));
            gy[i] = (at(r + 1, c - 1) + 2.0 * at(r + 1, c) + at(r + 1, c + 1))
                - (at(r - 1, c - 1) + 2.0 * at(r - 1, c) + at(r - 1, c + 1));
        }
    }
    (gx, gy)
}

fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil() as isize;
    let k: Vec<f64> = (-radius..=radius)
        .map(|x| (-(x * x) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let s: f64 = k.iter().sum();
    k.into_iter().map(|v| v / s).collect()
}

fn blur(data: &[f64], h: usize, w: usize, kernel: &[f64]) -> Vec<f64> {
    let radius = (kernel.len() / 2) as isize;
    let mut tmp = vec![0.0; h * w];
    for r in 0..h {
        for c in 0..w {
            let mut acc = 0.0;
            for (j, &k) in kernel.iter().enumerate() {
                let cc = (c as isize + j as isize - radius).clamp(0, w as isize - 1) as usize;
                acc += k * data[r * w + cc];
            }
            tmp[r * w + c] = acc;
        }
    }
    let mut out = vec![0.0; h * w];
    for r in 0..h {
        for (j, &k) in kernel.iter().enumerate() {
            let rr = (r as isize + j as isize - radius).clamp(0, h as isize - 1) as usize;
            let src = &tmp[rr * w..(rr + 1) * w];
            for (d, s) in out[r * w..(r + 1) * w].iter_mut().zip(src) {
                *d += k * s;
            }
        }
    }
    out
}

/// Harris response R = det(S) − κ·trace(S)² of the Gaussian-weighted
/// structure tensor of Sobel gradients. Borders replicate.
pub fn harris(p: &Plane, cfg: &CornerConfig) -> Result<ResponseMap> {
    if p.h() < 7 || p.w() < 7 {
        return Err(Error::InvalidArgument(format!(
            "Harris needs at least 7×7, got {}×{}",
            p.h(),
            p.w()
        )));
    }
    let (h, w) = (p.h(), p.w());
    let (gx, gy) = sobel(p);
    let kernel = gaussian_kernel(cfg.sigma);
    let xx: Vec<f64> = gx.iter().map(|v| v * v).collect();
    let yy: Vec<f64> = gy.iter().map(|v| v * v).collect();
    let xy: Vec<f64> = gx.iter().zip(&gy).map(|(a, b)| a * b).collect();
    let sxx = blur(&xx, h, w, &kernel);
    let syy = blur(&yy, h, w, &kernel);
    let sxy = blur(&xy, h, w, &kernel);
    let data = (0..h * w)
        .map(|i| {
            let tr = sxx[i] + syy[i];
            sxx[i] * syy[i] - sxy[i] * sxy[i] - cfg.kappa * tr * tr
        })
        .collect();
    Ok(ResponseMap { h, w, data })
}

/// Sliding-window maximum with Chebyshev radius, separable.
fn max_filter(m: &ResponseMap, radius: usize) -> Vec<f64> {
    let (h, w) = (m.h, m.w);
    let mut tmp = vec![f64::NEG_INFINITY; h * w];
    for r in 0..h {
        for c in 0..w {
            let lo = c.saturating_sub(radius);
            let hi = (c + radius).min(w - 1);
            tmp[r * w + c] = m.data[r * w + lo..=r * w + hi].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        }
    }
    let mut out = vec![f64::NEG_INFINITY; h * w];
    for r in 0..h {
        let lo = r.saturating_sub(radius);
        let hi = (r + radius).min(h - 1);
        for c in 0..w {
            out[r * w + c] = (lo..=hi).map(|rr| tmp[rr * w + c]).fold(f64::NEG_INFINITY, f64::max);
        }
    }
    out
}

/// Keeps window maxima above `rel_threshold · max(response)`, accepting them
/// in descending response order (ties in row-major order) and dropping any
/// within Chebyshev distance `radius` of an accepted point.
pub fn nms(response: &ResponseMap, radius: usize, rel_threshold: f64, max_corners: usize) -> Result<CornerSet> {
    if radius < 1 {
        return Err(Error::InvalidArgument("NMS radius must be at least 1".into()));
    }
    let mut set = CornerSet {
        h: response.h,
        w: response.w,
        points: Vec::new(),
    };
    let peak = response.data.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(peak > 0.0) || max_corners == 0 {
        return Ok(set);
    }
    let threshold = rel_threshold * peak;
    let local = max_filter(response, radius);
    let mut candidates: Vec<Corner> = response
        .data
        .iter()
        .enumerate()
        .filter(|&(i, &v)| v > threshold && v > 0.0 && v >= local[i])
        .map(|(i, &v)| Corner {
            row: i / response.w,
            col: i % response.w,
            response: v,
        })
        .collect();
    // Stable sort keeps row-major order among equal responses.
    candidates.sort_by(|a, b| b.response.total_cmp(&a.response));
    for cand in candidates {
        let clear = set
            .points
            .iter()
            .all(|p| p.row.abs_diff(cand.row).max(p.col.abs_diff(cand.col)) > radius);
        if clear {
            set.points.push(cand);
            if set.points.len() == max_corners {
                break;
            }
        }
    }
    Ok(set)
}

pub fn detect_corners(p: &Plane, cfg: &CornerConfig) -> Result<CornerSet> {
    let r = harris(p, cfg)?;
    nms(&r, cfg.nms_radius, cfg.rel_threshold, cfg.max_corners)
}
