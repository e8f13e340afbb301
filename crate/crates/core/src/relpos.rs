//! Relative positional mapping of chunk indices.
//!
//! The selected indices `i_1 < .. < i_k` cut the document into `k + 1`
//! intervals with boundaries `b_0 = 1, b_j = i_j, b_{k+1} = m + 1`. Chunk `i`
//! in interval `j` maps to `j * delta + ell * (i - b_j) / (b_{j+1} - b_j)`, so
//! every value lies in `[0, k * delta + ell)` whatever the context length.

use crate::error::{Error, Result};

pub const DEFAULT_DELTA: f64 = 10.0;
pub const DEFAULT_ELL: f64 = 9.0;

#[derive(Debug, Clone, PartialEq)]
pub struct RelPosMap {
    boundaries: Vec<usize>,
    delta: f64,
    ell: f64,
}

impl RelPosMap {
    /// `selected` must be sorted ascending and lie in `1..=m`.
    pub fn new(selected: &[usize], m: usize, delta: f64, ell: f64) -> Result<Self> {
        if !(ell > 0.0 && ell < delta) {
            return Err(Error::Config(format!(
                "relative mapping needs 0 < ell < delta, got ell={ell}, delta={delta}"
            )));
        }
        if let Some(&bad) = selected.iter().find(|&&i| i == 0 || i > m) {
            return Err(Error::OutOfRange { index: bad, max: m });
        }
        if selected.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("selected indices must be strictly increasing".into()));
        }
        let mut boundaries = Vec::with_capacity(selected.len() + 2);
        boundaries.push(1);
        boundaries.extend_from_slice(selected);
        boundaries.push(m + 1);
        Ok(Self {
            boundaries,
            delta,
            ell,
        })
    }

    pub fn boundaries(&self) -> &[usize] {
        &self.boundaries
    }

    pub fn num_chunks(&self) -> usize {
        self.boundaries[self.boundaries.len() - 1] - 1
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn ell(&self) -> f64 {
        self.ell
    }

    /// The `j` with `b_j <= i < b_{j+1}`. When chunk 1 is selected the first
    /// interval is empty and chunk 1 belongs to interval 1.
    pub fn interval(&self, i: usize) -> Result<usize> {
        let m = self.num_chunks();
        if i == 0 || i > m {
            return Err(Error::OutOfRange { index: i, max: m });
        }
        Ok(self.boundaries.partition_point(|&b| b <= i) - 1)
    }

    pub fn rho(&self, i: usize) -> Result<f64> {
        let j = self.interval(i)?;
        Ok(self.rho_in(i, j))
    }

    #[inline]
    fn rho_in(&self, i: usize, j: usize) -> f64 {
        let lo = self.boundaries[j];
        let hi = self.boundaries[j + 1];
        j as f64 * self.delta + self.ell * (i - lo) as f64 / (hi - lo) as f64
    }

    /// Values for ascending indices in one sweep over the intervals.
    pub fn rhos_sorted(&self, ascending: impl IntoIterator<Item = usize>) -> Result<Vec<f64>> {
        let m = self.num_chunks();
        let mut j = 0;
        let mut prev = 0;
        let mut out = Vec::new();
        for i in ascending {
            if i == 0 || i > m {
                return Err(Error::OutOfRange { index: i, max: m });
            }
            if i < prev {
                return Err(Error::Config("indices must be ascending".into()));
            }
            prev = i;
            while self.boundaries[j + 1] <= i {
                j += 1;
            }
            out.push(self.rho_in(i, j));
        }
        Ok(out)
    }
}
