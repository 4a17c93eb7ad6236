use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

const CLAMP_TOL: f64 = 1e-9;

/// Per-feature min-max bounds; maps a raw `d`-vector to a unit `(d+1)`-vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Normalization {
    pub fn from_bounds(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::DimensionMismatch { expected: lo.len(), got: hi.len() });
        }
        if lo.iter().zip(&hi).any(|(l, h)| !(h > l) || !l.is_finite() || !h.is_finite()) {
            return Err(Error::InvalidConfig("normalization needs finite bounds with max > min".into()));
        }
        Ok(Normalization { lo, hi })
    }

    /// Fits bounds on row-major samples of width `dim`. Constant features get a
    /// unit-wide window centred on their value.
    pub fn fit(samples: &[f64], dim: usize) -> Result<Self> {
        if dim == 0 || samples.is_empty() || samples.len() % dim != 0 {
            return Err(Error::Empty("normalization samples"));
        }
        let mut lo = samples[..dim].to_vec();
        let mut hi = lo.clone();
        for row in samples.chunks_exact(dim) {
            for (k, &v) in row.iter().enumerate() {
                lo[k] = lo[k].min(v);
                hi[k] = hi[k].max(v);
            }
        }
        for (l, h) in lo.iter_mut().zip(hi.iter_mut()) {
            if *h - *l < 1e-12 {
                *l -= 0.5;
                *h += 0.5;
            }
        }
        Self::from_bounds(lo, hi)
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    /// Min-max to `[-1, 1]`, clamp, scale by `1/sqrt(d+1)`, append the slack
    /// `sqrt(1 - sum z_i^2)`. Returns how many features fell outside the bounds.
    pub fn apply(&self, x: &[f64], out: &mut [f64]) -> usize {
        debug_assert_eq!(x.len(), self.dim());
        debug_assert_eq!(out.len(), self.dim() + 1);
        let scale = 1.0 / libm::sqrt((self.dim() + 1) as f64);
        let mut clamped = 0;
        let mut sq = 0.0;
        for k in 0..self.dim() {
            let z = 2.0 * (x[k] - self.lo[k]) / (self.hi[k] - self.lo[k]) - 1.0;
            if !(z.abs() <= 1.0 + CLAMP_TOL) {
                clamped += 1;
            }
            let z = if z.is_nan() { 0.0 } else { z.clamp(-1.0, 1.0) } * scale;
            out[k] = z;
            sq += z * z;
        }
        out[self.dim()] = libm::sqrt((1.0 - sq).max(0.0));
        clamped
    }

    pub fn normalize(&self, x: &[f64]) -> (Vec<f64>, usize) {
        let mut out = alloc::vec![0.0; self.dim() + 1];
        let c = self.apply(x, &mut out);
        (out, c)
    }
}
