//! Aggregation rules against brute-force definitions on random inputs.

use latres::aggregate::{image_class, image_reg, percentile, video_quality};
use latres::models::OutputMap;
use latres::numkernel::{seeded_rng, Tensor};
use rand::Rng;

/// Smallest sample value v with at least p% of the sample ≤ v.
fn oracle_percentile(values: &[u32], p: u32) -> u32 {
    let n = values.len();
    let mut candidates = values.to_vec();
    candidates.sort_unstable();
    candidates.dedup();
    *candidates
        .iter()
        .find(|&&v| 100 * values.iter().filter(|&&x| x <= v).count() >= (p as usize * n).max(1))
        .unwrap()
}

pub fn percentile_matches_definition() {
    let mut rng = seeded_rng(1);
    for _ in 0..1000 {
        let n = rng.random_range(1..60);
        let v: Vec<u32> = (0..n).map(|_| rng.random_range(0..20)).collect();
        let p = rng.random_range(0..=100);
        assert_eq!(percentile(&v, p as f64).unwrap(), oracle_percentile(&v, p), "{v:?} p={p}");
    }
}

pub fn class_percentiles_match_definition() {
    let mut rng = seeded_rng(2);
    for _ in 0..1000 {
        let q: Vec<u8> = (0..rng.random_range(1..300)).map(|_| rng.random_range(1..=6)).collect();
        let wide: Vec<u32> = q.iter().map(|&c| c as u32).collect();
        assert_eq!(image_class(&q, 90.0).unwrap() as u32, oracle_percentile(&wide, 90));
        let frames: Vec<u8> = (0..rng.random_range(1..15)).map(|_| rng.random_range(1..=6)).collect();
        let wide: Vec<u32> = frames.iter().map(|&c| c as u32).collect();
        assert_eq!(video_quality(&frames, 70.0).unwrap() as u32, oracle_percentile(&wide, 70));
    }
}

pub fn image_reg_is_the_mean_over_locations() {
    let mut rng = seeded_rng(3);
    for _ in 0..1000 {
        let (p, q) = (rng.random_range(1..8), rng.random_range(1..8));
        // dyadic values keep every partial sum exact
        let data: Vec<f64> = (0..p * q).map(|_| rng.random_range(0..256) as f64 / 256.0).collect();
        let map = OutputMap {
            map: Tensor::from_vec([1, 1, p, q], data.clone()).unwrap(),
            source_dims: (0, 0),
        };
        let s: Vec<(usize, usize)> = (0..rng.random_range(1..10)).map(|_| (rng.random_range(0..p), rng.random_range(0..q))).collect();
        let mut total = 0.0;
        for &(x, y) in &s {
            total += data[x * q + y];
        }
        assert_eq!(image_reg(&map, &s).unwrap(), total / s.len() as f64);
    }
}

#[cfg(test)]
mod tests {
    #[test]
    fn percentile_matches_definition() {
        super::percentile_matches_definition();
    }

    #[test]
    fn class_percentiles_match_definition() {
        super::class_percentiles_match_definition();
    }

    #[test]
    fn image_reg_is_the_mean_over_locations() {
        super::image_reg_is_the_mean_over_locations();
    }
}
