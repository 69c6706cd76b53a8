//! Property tests over random shapes, images and samples.

use latres::aggregate::percentile;
use latres::imaging::{degrade, nms, CornerSet, Plane, ResampleMethod, ResponseMap, DEGRADE_MIN_DIM};
use latres::numkernel::{conv2d, Tensor};
use latres::synth::extract_patches;
use proptest::prelude::*;

fn plane(h: usize, w: usize, seed: u64) -> Plane {
    Plane::from_fn(h, w, |r, c| {
        let x = (r as u64 * 7919 + c as u64 * 104_729 + seed * 31).wrapping_mul(2_654_435_761) % 1000;
        x as f32 / 1000.0
    })
    .unwrap()
}

fn response(h: usize, w: usize, values: &[u16]) -> ResponseMap {
    ResponseMap {
        h,
        w,
        data: (0..h * w).map(|i| values[i % values.len()] as f64 - 100.0).collect(),
    }
}

fn chebyshev_separated(set: &CornerSet, radius: usize) -> bool {
    set.points.iter().enumerate().all(|(i, a)| {
        set.points[i + 1..]
            .iter()
            .all(|b| a.row.abs_diff(b.row).max(a.col.abs_diff(b.col)) > radius)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn conv_output_shape(n in 1usize..3, c in 1usize..3, oc in 1usize..4, k in 1usize..6, dh in 0usize..6, dw in 0usize..6) {
        let (h, w) = (k + dh, k + dw);
        let x = Tensor::from_vec([n, c, h, w], vec![0.5f64; n * c * h * w]).unwrap();
        let wt = Tensor::from_vec([oc, c, k, k], vec![0.1f64; oc * c * k * k]).unwrap();
        let y = conv2d(&x, &wt, &vec![0.0; oc]).unwrap();
        prop_assert_eq!(y.shape(), [n, oc, dh + 1, dw + 1]);
    }

    #[test]
    fn degrade_keeps_dims(h in 16usize..90, w in 16usize..90, a in 1u32..=100, bicubic in any::<bool>(), seed in 0u64..1000) {
        let k = a as f64 / 100.0;
        let p = plane(h, w, seed);
        let method = if bicubic { ResampleMethod::Bicubic } else { ResampleMethod::Bilinear };
        let small = |d: usize| ((k * d as f64).round() as usize) < DEGRADE_MIN_DIM;
        match degrade(&p, k, method) {
            Ok(q) => {
                prop_assert_eq!((q.h(), q.w()), (h, w));
                prop_assert!(q.data().iter().all(|v| (0.0..=1.0).contains(v)));
            }
            Err(_) => prop_assert!(small(h) || small(w)),
        }
    }

    #[test]
    fn nms_invariants(h in 8usize..40, w in 8usize..40, values in prop::collection::vec(0u16..400, 1..50), radius in 1usize..6, cap in 1usize..30) {
        let r = response(h, w, &values);
        let set = nms(&r, radius, 0.01, cap).unwrap();
        prop_assert!(set.len() <= cap);
        prop_assert!(chebyshev_separated(&set, radius));
        prop_assert!(set.points.windows(2).all(|p| p[0].response >= p[1].response));
        let peak = r.data.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(set.points.iter().all(|p| p.response > 0.01 * peak && p.response == r.get(p.row, p.col)));
        // Re-suppressing the kept points alone keeps all of them.
        let mut kept = ResponseMap { h, w, data: vec![0.0; h * w] };
        for p in &set.points {
            kept.data[p.row * w + p.col] = p.response;
        }
        let again = nms(&kept, radius, 0.0, cap).unwrap();
        prop_assert_eq!(again.points, set.points);
    }

    #[test]
    fn percentile_is_a_monotone_member(mut v in prop::collection::vec(0u32..50, 1..80), p in 0.0f64..=100.0, dp in 0.0f64..50.0) {
        let x = percentile(&v, p).unwrap();
        prop_assert!(v.contains(&x));
        prop_assert!(percentile(&v, (p + dp).min(100.0)).unwrap() >= x);
        v.reverse();
        prop_assert_eq!(percentile(&v, p).unwrap(), x);
    }

    #[test]
    fn patches_stay_inside(h in 64usize..140, w in 64usize..140, pts in prop::collection::vec((0usize..140, 0usize..140), 0..20), seed in 0u64..100) {
        let p = plane(h, w, seed);
        let mut set = CornerSet { h, w, points: Vec::new() };
        for (r, c) in pts.into_iter().filter(|&(r, c)| r < h && c < w) {
            set.points.push(latres::imaging::Corner { row: r, col: c, response: 1.0 });
        }
        let patches = extract_patches(&p, &set, 64);
        let inside = set.points.iter().filter(|c| c.row >= 32 && c.col >= 32 && c.row + 32 <= h && c.col + 32 <= w).count();
        prop_assert_eq!(patches.len(), inside);
        for cp in &patches {
            prop_assert_eq!((cp.pixels.h(), cp.pixels.w()), (64, 64));
            prop_assert_eq!(cp.pixels.get(32, 32), p.get(cp.row, cp.col));
            prop_assert_eq!(cp.pixels.get(0, 0), p.get(cp.row - 32, cp.col - 32));
        }
    }
}
