//! Per-image and per-video aggregation of unit-level predictions.
//!
//! Percentiles are nearest-rank: the ⌈p·n/100⌉-th smallest element (1-based,
//! clamped to [1, n]), so the result is always a member of the sample and
//! class aggregates stay valid class indices.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::OutputMap;
use crate::numkernel::Real;

pub const DEFAULT_IMAGE_PCT: f64 = 90.0;
pub const DEFAULT_VIDEO_PCT: f64 = 70.0;

/// Class reported, and the regression value, when an image has no corners.
pub const FALLBACK_CLASS: u8 = 6;
pub const FALLBACK_VALUE: f64 = 1.0;

/// 1-based nearest rank for percentile `p` of `n` elements.
pub fn nearest_rank(n: usize, p: f64) -> usize {
    // p·n first so integer percentiles divide exactly.
    let rank = (p * n as f64 / 100.0).ceil();
    (rank.max(1.0) as usize).min(n)
}

pub fn percentile<T: Copy + PartialOrd>(values: &[T], p: f64) -> Result<T> {
    if values.is_empty() {
        return Err(Error::Empty("percentile"));
    }
    if !(0.0..=100.0).contains(&p) {
        return Err(Error::InvalidArgument(format!("percentile {p} outside [0, 100]")));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    Ok(sorted[nearest_rank(sorted.len(), p) - 1])
}

/// Aggregate for one image (or video) with a flag for fallback results.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict<V> {
    pub value: V,
    pub low_confidence: bool,
}

/// Percentile of per-patch / per-location class predictions.
pub fn image_class(q: &[u8], image_pct: f64) -> Result<u8> {
    if q.is_empty() {
        return Err(Error::NoCorners);
    }
    if let Some(bad) = q.iter().find(|&&c| !(1..=6).contains(&c)) {
        return Err(Error::InvalidArgument(format!("class {bad} outside 1..=6")));
    }
    percentile(q, image_pct)
}

/// [`image_class`] with the flat-image fallback to the top class.
pub fn image_class_or_fallback(q: &[u8], image_pct: f64) -> Result<Verdict<u8>> {
    match image_class(q, image_pct) {
        Ok(value) => Ok(Verdict {
            value,
            low_confidence: false,
        }),
        Err(Error::NoCorners) => Ok(Verdict {
            value: FALLBACK_CLASS,
            low_confidence: true,
        }),
        Err(e) => Err(e),
    }
}

/// Mean of a single-channel output map over the locations `s`.
pub fn image_reg<T: Real>(map: &OutputMap<T>, s: &[(usize, usize)]) -> Result<f64> {
    if s.is_empty() {
        return Err(Error::NoCorners);
    }
    if map.d() != 1 {
        return Err(Error::shape("image_reg", map.map.shape(), "one channel"));
    }
    let sum: f64 = s.iter().map(|&(x, y)| map.value(0, x, y).as_f64()).sum();
    Ok(sum / s.len() as f64)
}

/// Percentile of per-frame predictions (classes or values).
pub fn video_quality<V: Copy + PartialOrd>(frame_preds: &[V], video_pct: f64) -> Result<V> {
    if frame_preds.is_empty() {
        return Err(Error::Empty("video frame predictions"));
    }
    percentile(frame_preds, video_pct)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkernel::Tensor;

    #[test]
    fn percentile_examples() {
        let v: Vec<u32> = (1..=10).collect();
        assert_eq!(percentile(&v, 90.0).unwrap(), 9);
        assert_eq!(percentile(&v, 100.0).unwrap(), 10);
        assert_eq!(percentile(&v, 0.0).unwrap(), 1);
        assert_eq!(percentile(&[4.5], 37.0).unwrap(), 4.5);
        assert!(percentile::<f64>(&[], 50.0).is_err());
        assert!(percentile(&[1.0], 101.0).is_err());
    }

    #[test]
    fn image_class_examples() {
        assert_eq!(image_class(&[3; 7], 90.0).unwrap(), 3);
        let mut q = vec![2u8; 9];
        q.push(5);
        assert_eq!(image_class(&q, 90.0).unwrap(), 2);
        assert_eq!(image_class(&[1, 2, 3, 4, 5, 6], 90.0).unwrap(), 6);
        assert!(matches!(image_class(&[], 90.0), Err(Error::NoCorners)));
        assert!(image_class(&[0, 1], 90.0).is_err());
    }

    #[test]
    fn fallback_on_no_corners() {
        let v = image_class_or_fallback(&[], 90.0).unwrap();
        assert_eq!(v.value, FALLBACK_CLASS);
        assert!(v.low_confidence);
        assert!(!image_class_or_fallback(&[2], 90.0).unwrap().low_confidence);
    }

    #[test]
    fn image_reg_means() {
        let map = OutputMap {
            map: Tensor::<f32>::filled([1, 1, 3, 4], 0.5),
            source_dims: (72, 76),
        };
        assert!((image_reg(&map, &[(0, 0), (2, 3)]).unwrap() - 0.5).abs() < 1e-12);
        let mut t = Tensor::<f64>::zeros([1, 1, 2, 2]);
        t.data_mut().copy_from_slice(&[0.1, 0.2, 0.3, 0.4]);
        let map = OutputMap {
            map: t,
            source_dims: (68, 68),
        };
        assert_eq!(image_reg(&map, &[(1, 0)]).unwrap(), 0.3);
        assert!((image_reg(&map, &[(0, 0), (1, 1), (0, 1)]).unwrap() - 0.7 / 3.0).abs() < 1e-12);
        assert!(image_reg(&map, &[]).is_err());
    }

    #[test]
    fn video_examples() {
        assert_eq!(video_quality(&[4u8; 10], 70.0).unwrap(), 4);
        assert_eq!(video_quality(&[1u8, 1, 1, 1, 1, 1, 1, 6, 6, 6], 70.0).unwrap(), 1);
        assert_eq!(video_quality(&[0.42], 70.0).unwrap(), 0.42);
        assert!(video_quality::<u8>(&[], 70.0).is_err());
    }
}
