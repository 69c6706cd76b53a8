//! Separable convolution-based resampling with pixel-center alignment.
//! When shrinking, the kernel is stretched by the scale factor so the
//! result is low-pass filtered rather than aliased.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::Plane;

/// Smallest intermediate height/width accepted by [`degrade`].
pub const DEGRADE_MIN_DIM: usize = 8;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResampleMethod {
    Bilinear,
    #[default]
    Bicubic,
}

impl ResampleMethod {
    fn support(self) -> f64 {
        match self {
            ResampleMethod::Bilinear => 1.0,
            ResampleMethod::Bicubic => 2.0,
        }
    }

    fn kernel(self, x: f64) -> f64 {
        let x = x.abs();
        match self {
            ResampleMethod::Bilinear => (1.0 - x).max(0.0),
            ResampleMethod::Bicubic => {
                // Keys cubic convolution, a = -0.5.
                const A: f64 = -0.5;
                if x <= 1.0 {
                    ((A + 2.0) * x - (A + 3.0)) * x * x + 1.0
                } else if x < 2.0 {
                    ((A * x - 5.0 * A) * x + 8.0 * A) * x - 4.0 * A
                } else {
                    0.0
                }
            }
        }
    }
}

impl std::str::FromStr for ResampleMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bilinear" => Ok(ResampleMethod::Bilinear),
            "bicubic" => Ok(ResampleMethod::Bicubic),
            _ => Err(Error::InvalidArgument(format!("unknown resample method {s:?}"))),
        }
    }
}

impl std::fmt::Display for ResampleMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ResampleMethod::Bilinear => "bilinear",
            ResampleMethod::Bicubic => "bicubic",
        })
    }
}

/// Normalized taps for one output sample: first input index and weights.
struct Taps {
    start: usize,
    weights: Vec<f32>,
}

fn taps(in_len: usize, out_len: usize, method: ResampleMethod) -> Vec<Taps> {
    let scale = in_len as f64 / out_len as f64;
    let stretch = scale.max(1.0);
    let radius = method.support() * stretch;
    (0..out_len)
        .map(|o| {
            let center = (o as f64 + 0.5) * scale;
            let lo = (center - radius).floor() as isize;
            let hi = (center + radius).ceil() as isize;
            let first = lo.clamp(0, in_len as isize - 1) as usize;
            let last = (hi - 1).clamp(0, in_len as isize - 1) as usize;
            let mut weights = vec![0.0f64; last - first + 1];
            for i in lo..hi {
                let w = method.kernel((i as f64 + 0.5 - center) / stretch);
                if w != 0.0 {
                    // Edge samples are replicated outside the plane.
                    let idx = i.clamp(0, in_len as isize - 1) as usize;
                    weights[idx - first] += w;
                }
            }
            let sum: f64 = weights.iter().sum();
            Taps {
                start: first,
                weights: weights.iter().map(|w| (w / sum) as f32).collect(),
            }
        })
        .collect()
}

/// Resamples to exactly `out_h`×`out_w`; output clamped to [0, 1].
pub fn resample(p: &Plane, out_h: usize, out_w: usize, method: ResampleMethod) -> Result<Plane> {
    if out_h == 0 || out_w == 0 {
        return Err(Error::InvalidArgument(format!(
            "resample target must be positive, got {out_h}×{out_w}"
        )));
    }
    let (h, w) = (p.h(), p.w());
    let src = p.data();

    let htaps = taps(w, out_w, method);
    let mut tmp = vec![0.0f32; h * out_w];
    for r in 0..h {
        let row = &src[r * w..(r + 1) * w];
        let dst = &mut tmp[r * out_w..(r + 1) * out_w];
        for (d, t) in dst.iter_mut().zip(&htaps) {
            *d = t
                .weights
                .iter()
                .zip(&row[t.start..t.start + t.weights.len()])
                .map(|(a, b)| a * b)
                .sum();
        }
    }

    let vtaps = taps(h, out_h, method);
    let mut out = vec![0.0f32; out_h * out_w];
    for (r, t) in vtaps.iter().enumerate() {
        let dst = &mut out[r * out_w..(r + 1) * out_w];
        for (k, &wt) in t.weights.iter().enumerate() {
            let srow = &tmp[(t.start + k) * out_w..(t.start + k + 1) * out_w];
            for (d, s) in dst.iter_mut().zip(srow) {
                *d += wt * s;
            }
        }
    }
    for v in &mut out {
        *v = v.clamp(0.0, 1.0);
    }
    Ok(Plane::from_raw(out_h, out_w, out))
}

/// Downscales by `k` (intermediate dims `round(k·dim)`) and upscales back to
/// the original dims. `k = 1` returns the input unchanged.
pub fn degrade(p: &Plane, k: f64, method: ResampleMethod) -> Result<Plane> {
    if !(k > 0.0 && k <= 1.0) {
        return Err(Error::InvalidArgument(format!("degradation factor must be in (0, 1], got {k}")));
    }
    if k == 1.0 {
        return Ok(p.clone());
    }
    let ih = (k * p.h() as f64).round() as usize;
    let iw = (k * p.w() as f64).round() as usize;
    if ih < DEGRADE_MIN_DIM || iw < DEGRADE_MIN_DIM {
        return Err(Error::InvalidArgument(format!(
            "factor {k} shrinks {}×{} to {ih}×{iw}, below the {DEGRADE_MIN_DIM} px minimum",
            p.h(),
            p.w()
        )));
    }
    let small = resample(p, ih, iw, method)?;
    resample(&small, p.h(), p.w(), method)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn textured(h: usize, w: usize) -> Plane {
        Plane::from_fn(h, w, |r, c| {
            let v = ((r * 131 + c * 71) % 97) as f32 / 97.0;
            0.5 + 0.4 * (v - 0.5) + 0.1 * ((r as f32 * 0.3).sin() * (c as f32 * 0.2).cos())
        })
        .unwrap()
    }

    #[test]
    fn constant_stays_constant() {
        let p = Plane::filled(13, 17, 0.5).unwrap();
        for method in [ResampleMethod::Bilinear, ResampleMethod::Bicubic] {
            for (oh, ow) in [(1, 1), (5, 40), (13, 17), (100, 3)] {
                let q = resample(&p, oh, ow, method).unwrap();
                assert_eq!((q.h(), q.w()), (oh, ow));
                assert!(q.data().iter().all(|&v| (v - 0.5).abs() < 1e-6));
            }
        }
    }

    #[test]
    fn identity_size_is_exact() {
        let p = textured(9, 12);
        for method in [ResampleMethod::Bilinear, ResampleMethod::Bicubic] {
            assert_eq!(resample(&p, 9, 12, method).unwrap(), p);
        }
    }

    #[test]
    fn bilinear_midpoint() {
        let p = Plane::new(2, 2, vec![0.0, 1.0, 0.0, 1.0]).unwrap();
        let q = resample(&p, 2, 3, ResampleMethod::Bilinear).unwrap();
        assert!((q.get(0, 1) - 0.5).abs() < 1e-6);
        assert!((q.get(1, 1) - 0.5).abs() < 1e-6);
    }

    #[test]
    fn rejects_zero_target() {
        let p = textured(4, 4);
        assert!(resample(&p, 0, 3, ResampleMethod::Bicubic).is_err());
        assert!(resample(&p, 3, 0, ResampleMethod::Bilinear).is_err());
    }

    #[test]
    fn degrade_keeps_dims_and_short_circuits() {
        let p = textured(40, 56);
        assert_eq!(degrade(&p, 1.0, ResampleMethod::Bicubic).unwrap(), p);
        let q = degrade(&p, 0.37, ResampleMethod::Bicubic).unwrap();
        assert_eq!((q.h(), q.w()), (40, 56));
    }

    #[test]
    fn degrade_guards() {
        let p = textured(40, 40);
        assert!(degrade(&p, 0.0, ResampleMethod::Bicubic).is_err());
        assert!(degrade(&p, 1.5, ResampleMethod::Bicubic).is_err());
        assert!(degrade(&p, f64::NAN, ResampleMethod::Bicubic).is_err());
        // 0.15 · 40 = 6 < 8
        assert!(degrade(&p, 0.15, ResampleMethod::Bicubic).is_err());
        assert!(degrade(&p, 0.2, ResampleMethod::Bicubic).is_ok());
    }
}
