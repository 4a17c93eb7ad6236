//! Split-conformal intervals scaled by ensemble dispersion.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const DEFAULT_EPSILON: f64 = 1e-8;

/// `|s - mu| / (sigma + eps)`.
#[inline]
pub fn nonconformity(s: f64, mu: f64, sigma: f64, epsilon: f64) -> f64 {
    (s - mu).abs() / (sigma + epsilon)
}

/// One-based rank `ceil((n+1)(1-alpha))` of the calibrated score, or `None` when it
/// exceeds `n` and no finite quantile gives the coverage.
pub fn quantile_rank(n: usize, alpha: f64) -> Option<usize> {
    let raw = (n as f64 + 1.0) * (1.0 - alpha);
    // absorb representation error so that e.g. 11 * 0.9 ranks as 10, not 11
    let k = libm::ceil(raw - 1e-9 * raw.abs().max(1.0)).max(1.0) as usize;
    (k <= n).then_some(k)
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::OutOfRange { name: "alpha", value: alpha, min: 0.0, max: 1.0 })
    }
}

/// Finite-sample corrected quantile of `scores`; `+inf` when coverage is unattainable.
pub fn calibrate(scores: &[f64], alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if scores.is_empty() {
        return Err(Error::Empty("calibration scores"));
    }
    if scores.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
        return Err(Error::InvalidConfig("calibration scores must be finite and non-negative".into()));
    }
    let Some(k) = quantile_rank(scores.len(), alpha) else {
        return Ok(f64::INFINITY);
    };
    let mut v = scores.to_vec();
    let (_, kth, _) = v.select_nth_unstable_by(k - 1, f64::total_cmp);
    Ok(*kth)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub q_hat: f64,
    pub alpha: f64,
    pub epsilon: f64,
    pub n_cal: usize,
}

impl Calibration {
    /// Pools scores over every `(target, mu, sigma)` triple.
    pub fn fit(targets: &[f64], mu: &[f64], sigma: &[f64], alpha: f64, epsilon: f64) -> Result<Self> {
        if mu.len() != targets.len() || sigma.len() != targets.len() {
            return Err(Error::ShapeMismatch);
        }
        if !(epsilon > 0.0) {
            return Err(Error::OutOfRange { name: "epsilon", value: epsilon, min: 0.0, max: f64::INFINITY });
        }
        let scores: Vec<f64> = (0..targets.len()).map(|i| nonconformity(targets[i], mu[i], sigma[i], epsilon)).collect();
        Ok(Calibration { q_hat: calibrate(&scores, alpha)?, alpha, epsilon, n_cal: scores.len() })
    }

    pub fn interval(&self, mu: f64, sigma: f64) -> Interval {
        predict_interval(mu, sigma, self.q_hat)
    }
}

/// `[mu - q sigma, mu + q sigma]`; an infinite `q` gives the whole line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub center: f64,
    pub half_width: f64,
}

impl Interval {
    pub fn lower(&self) -> f64 {
        self.center - self.half_width
    }

    pub fn upper(&self) -> f64 {
        self.center + self.half_width
    }

    pub fn width(&self) -> f64 {
        2.0 * self.half_width
    }

    pub fn is_bounded(&self) -> bool {
        self.half_width.is_finite()
    }

    pub fn contains(&self, v: f64) -> bool {
        !self.is_bounded() || (v - self.center).abs() <= self.half_width
    }
}

pub fn predict_interval(mu: f64, sigma: f64, q_hat: f64) -> Interval {
    let half_width = if q_hat.is_infinite() { f64::INFINITY } else { q_hat * sigma };
    Interval { center: mu, half_width }
}

/// Which spread the peak-uncertainty metric reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PeakMeasure {
    #[default]
    FullWidth,
    HalfWidth,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntervalMetrics {
    pub coverage: f64,
    pub avg_width: f64,
    pub peak_uncertainty: f64,
}

pub fn metrics(targets: &[f64], intervals: &[Interval], peak: PeakMeasure) -> Result<IntervalMetrics> {
    if targets.len() != intervals.len() {
        return Err(Error::ShapeMismatch);
    }
    if targets.is_empty() {
        return Err(Error::Empty("test targets"));
    }
    let n = targets.len() as f64;
    let inside = targets.iter().zip(intervals).filter(|(t, iv)| iv.contains(**t)).count();
    let avg_width = intervals.iter().map(Interval::width).sum::<f64>() / n;
    let max_w = intervals.iter().map(Interval::width).fold(0.0, f64::max);
    let peak_uncertainty = match peak {
        PeakMeasure::FullWidth => max_w,
        PeakMeasure::HalfWidth => max_w / 2.0,
    };
    Ok(IntervalMetrics { coverage: inside as f64 / n, avg_width, peak_uncertainty })
}
