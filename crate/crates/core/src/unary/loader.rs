use alloc::vec;
use alloc::vec::Vec;

use super::Gate;
use crate::{Error, Result};

const NORM_TOL: f64 = 1e-9;

/// Angles of the diagonal loader that maps `e` on its first wire to `sum_i x_i e_i`.
///
/// Gate `k` acts on wires `(k, k+1)` of the block. It keeps `x_k` on wire `k` and
/// pushes the tail norm `r_{k+1} = |x_{k+1..}|` forward:
/// `theta_k = atan2(-r_{k+1}, x_k)`; the last gate places the signed final pair,
/// `theta_{n-2} = atan2(-x_{n-1}, x_{n-2})`.
pub fn loader_angles(x: &[f64]) -> Result<Vec<f64>> {
    let n = x.len();
    if n == 0 {
        return Err(Error::Empty("loader input"));
    }
    let norm = libm::sqrt(x.iter().map(|v| v * v).sum::<f64>());
    if (norm - 1.0).abs() > NORM_TOL {
        return Err(Error::NotNormalized { norm });
    }
    if n == 1 {
        // a lone wire has no rotation to carry a sign
        if x[0] < 0.0 {
            return Err(Error::InvalidConfig("a one-wire loader cannot encode a negative amplitude".into()));
        }
        return Ok(Vec::new());
    }
    // tail[k] = |x_{k..}|, accumulated from the end for accuracy
    let mut tail = vec![0.0; n + 1];
    for k in (0..n).rev() {
        tail[k] = libm::hypot(tail[k + 1], x[k]);
    }
    let mut angles = Vec::with_capacity(n - 1);
    for k in 0..n - 2 {
        angles.push(libm::atan2(-tail[k + 1], x[k]));
    }
    angles.push(libm::atan2(-x[n - 1], x[n - 2]));
    Ok(angles)
}

/// Loader gates for `x` placed on wires `offset..offset + x.len()`.
pub fn loader_gates(x: &[f64], offset: usize) -> Result<Vec<Gate>> {
    Ok(loader_angles(x)?.into_iter().enumerate().map(|(k, t)| Gate::rbs(offset + k, offset + k + 1, t)).collect())
}

/// The uniform unit vector `(1/sqrt q, ..., 1/sqrt q)`.
pub fn uniform_vector(q: usize) -> Vec<f64> {
    vec![1.0 / libm::sqrt(q as f64); q]
}
