//! Rotary position embeddings: block-diagonal 2-D rotations with fixed
//! per-block frequencies, applied to interleaved pairs `(v[2j], v[2j+1])`.

use crate::error::{Error, Result};

/// Geometric schedule `base^(-2j/dim)` for `j = 0..dim/2`.
pub fn frequencies(dim: usize, base: f64) -> Result<Vec<f64>> {
    if dim == 0 || !dim.is_multiple_of(2) {
        return Err(Error::Config(format!("rope dimension must be even, got {dim}")));
    }
    if !(base > 1.0) {
        return Err(Error::Config(format!("rope base must exceed 1, got {base}")));
    }
    Ok((0..dim / 2)
        .map(|j| base.powf(-2.0 * j as f64 / dim as f64))
        .collect())
}

fn check(len: usize, freqs: &[f64]) -> Result<()> {
    if !len.is_multiple_of(2) {
        return Err(Error::Config(format!("rope dimension must be even, got {len}")));
    }
    if freqs.len() * 2 != len {
        return Err(Error::DimensionMismatch {
            expected: freqs.len() * 2,
            got: len,
        });
    }
    Ok(())
}

/// Rotates `v` in place by `R_t`.
pub fn rotate_in_place(v: &mut [f64], t: f64, freqs: &[f64]) -> Result<()> {
    check(v.len(), freqs)?;
    rotate_unchecked(v, t, freqs);
    Ok(())
}

#[inline]
pub(crate) fn rotate_unchecked(v: &mut [f64], t: f64, freqs: &[f64]) {
    if t == 0.0 {
        return;
    }
    for (pair, &theta) in v.chunks_exact_mut(2).zip(freqs) {
        let (s, c) = (theta * t).sin_cos();
        let (x, y) = (pair[0], pair[1]);
        pair[0] = c * x - s * y;
        pair[1] = s * x + c * y;
    }
}

/// `R_t v`.
pub fn rope(v: &[f64], t: f64, freqs: &[f64]) -> Result<Vec<f64>> {
    let mut out = v.to_vec();
    rotate_in_place(&mut out, t, freqs)?;
    Ok(out)
}

/// `<a, R_t b>` without allocating.
#[inline]
pub(crate) fn rotated_dot(a: &[f64], b: &[f64], t: f64, freqs: &[f64]) -> f64 {
    if t == 0.0 {
        return a.iter().zip(b).map(|(x, y)| x * y).sum();
    }
    let mut acc = 0.0;
    for ((pa, pb), &theta) in a.chunks_exact(2).zip(b.chunks_exact(2)).zip(freqs) {
        let (s, c) = (theta * t).sin_cos();
        let rx = c * pb[0] - s * pb[1];
        let ry = s * pb[0] + c * pb[1];
        acc += pa[0] * rx + pa[1] * ry;
    }
    acc
}

/// Dense `R_t` (row-major), for checks and small experiments.
pub fn rotation_matrix(t: f64, freqs: &[f64]) -> Vec<Vec<f64>> {
    let d = freqs.len() * 2;
    let mut m = vec![vec![0.0; d]; d];
    for (j, &theta) in freqs.iter().enumerate() {
        let (s, c) = (theta * t).sin_cos();
        let r = 2 * j;
        m[r][r] = c;
        m[r][r + 1] = -s;
        m[r + 1][r] = s;
        m[r + 1][r + 1] = c;
    }
    m
}
