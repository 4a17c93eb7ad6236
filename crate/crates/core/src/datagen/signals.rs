//! Damped multi-tone signals standing in for measured transients.

use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// `sum_k A_k exp(-d_k t) sin(2 pi f_k t + phi_k)` sampled at `length` points of
/// `[0, 1]`, plus optional white noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalFamily {
    pub length: usize,
    pub tones: usize,
    pub freq_range: (f64, f64),
    pub amp_range: (f64, f64),
    pub damping_range: (f64, f64),
    pub noise: f64,
}

impl Default for SignalFamily {
    fn default() -> Self {
        SignalFamily { length: 200, tones: 3, freq_range: (1.0, 8.0), amp_range: (0.2, 1.0), damping_range: (0.0, 3.0), noise: 0.0 }
    }
}

fn draw<R: Rng + ?Sized>(r: &mut R, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        r.random_range(lo..hi)
    } else {
        lo
    }
}

pub fn multitone_signal<R: Rng + ?Sized>(fam: &SignalFamily, rng: &mut R) -> Vec<f64> {
    let tau = 2.0 * core::f64::consts::PI;
    let tones: Vec<[f64; 4]> = (0..fam.tones)
        .map(|_| [draw(rng, fam.amp_range), draw(rng, fam.damping_range), draw(rng, fam.freq_range), rng.random_range(0.0..tau)])
        .collect();
    let dt = if fam.length > 1 { 1.0 / (fam.length - 1) as f64 } else { 0.0 };
    (0..fam.length)
        .map(|k| {
            let t = k as f64 * dt;
            let clean: f64 = tones.iter().map(|[a, d, f, p]| a * libm::exp(-d * t) * libm::sin(tau * f * t + p)).sum();
            if fam.noise > 0.0 {
                clean + fam.noise * rng.random_range(-1.0..1.0)
            } else {
                clean
            }
        })
        .collect()
}

/// `tau + 1` samples ending at `end`, and the sample `horizon` steps later.
#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    pub end: usize,
    pub window: Vec<f64>,
    pub target: f64,
}

/// Every admissible window in time order; there are `len - tau - horizon`.
pub fn online_windows(signal: &[f64], tau: usize, horizon: usize) -> Result<Vec<Window>> {
    let len = signal.len();
    if horizon == 0 || tau + horizon >= len {
        return Err(Error::WindowTooLong { window: tau + 1, horizon, len });
    }
    Ok((tau..len - horizon).map(|end| Window { end, window: signal[end - tau..=end].to_vec(), target: signal[end + horizon] }).collect())
}
