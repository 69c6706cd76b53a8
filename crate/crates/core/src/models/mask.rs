//! Corner-mask propagation through the network's geometry.
//!
//! A valid k×k convolution maps input position `i + top` to output `i`, so
//! the mask loses `top = ⌈(k−1)/2⌉` rows/cols at the top/left and
//! `⌊(k−1)/2⌋` at the bottom/right (2/2 for k = 5, 4/3 for k = 8).
//! Pooling ORs each 2×2 window, dropping odd trailing rows/cols.

use crate::error::{Error, Result};
use crate::imaging::Mask;
use crate::numkernel::Step;

use super::Architecture;

/// Rows/cols removed before and after for a kernel of size `k`.
pub(crate) fn crop_split(k: usize) -> (usize, usize) {
    (k / 2, (k - 1) / 2)
}

fn crop(m: &Mask, before: usize, after: usize) -> Option<Mask> {
    let h = m.h.checked_sub(before + after).filter(|&v| v > 0)?;
    let w = m.w.checked_sub(before + after).filter(|&v| v > 0)?;
    let mut bits = Vec::with_capacity(h * w);
    for r in 0..h {
        let start = (r + before) * m.w + before;
        bits.extend_from_slice(&m.bits[start..start + w]);
    }
    Some(Mask { h, w, bits })
}

fn or_pool(m: &Mask) -> Option<Mask> {
    let (h, w) = (m.h / 2, m.w / 2);
    if h == 0 || w == 0 {
        return None;
    }
    let mut bits = Vec::with_capacity(h * w);
    for r in 0..h {
        for c in 0..w {
            let i = 2 * r * m.w + 2 * c;
            bits.push(m.bits[i] | m.bits[i + 1] | m.bits[i + m.w] | m.bits[i + m.w + 1]);
        }
    }
    Some(Mask { h, w, bits })
}

/// Maps an input-aligned binary mask onto the output map of `arch`.
pub fn propagate_mask(arch: &Architecture, mask: &Mask) -> Result<Mask> {
    let too_small = || Error::shape("propagate_mask", (mask.h, mask.w), "input of at least 64×64");
    let mut m = mask.clone();
    for step in &arch.steps {
        m = match *step {
            Step::Conv(i) => {
                let (before, after) = crop_split(arch.layers[i].kernel);
                crop(&m, before, after).ok_or_else(too_small)?
            }
            Step::Pool => or_pool(&m).ok_or_else(too_small)?,
            Step::BatchNorm(_) | Step::Relu => m,
        };
    }
    Ok(m)
}

/// Nonzero cells of `t` in row-major order, as (row, col).
pub fn mask_locations(t: &Mask) -> Vec<(usize, usize)> {
    t.bits
        .iter()
        .enumerate()
        .filter(|(_, &b)| b != 0)
        .map(|(i, _)| (i / t.w, i % t.w))
        .collect()
}
